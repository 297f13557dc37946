//! Chi-squared attribute ranking over the class column.

use std::collections::BTreeMap;

use super::{MiningError, MiningTable};

/// One ranked attribute: its chi-squared score and the bin boundaries the
/// score was computed over.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedAttribute {
    pub name: String,
    pub score: f64,
    /// Upper-inclusive cut values; `cuts.len() + 1` bins.
    pub cuts: Vec<f64>,
    pub bin_count: usize,
}

/// Attributes ordered by descending chi-squared score.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeRanking {
    pub bins_requested: usize,
    pub entries: Vec<RankedAttribute>,
}

impl AttributeRanking {
    /// Plain-text table, one attribute per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("rank\tchi2\tattribute\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\n", i + 1, e.score, e.name));
        }
        out
    }
}

/// Equal-frequency cut points over `values`, at most `max_bins` bins.
///
/// Greedy left-to-right: each bin closes at the end of the run of equal
/// values containing its target fill (ceil of remaining/bins-left), so
/// equal values never split across bins and duplicate boundaries cannot
/// occur. Returned cuts are data values with upper-inclusive semantics:
/// bin(x) = number of cuts strictly below x.
pub fn equal_frequency_cuts(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts = Vec::new();
    let mut start = 0usize;
    let mut bins_left = max_bins;
    while start < n && bins_left > 1 {
        let remaining = n - start;
        let target = remaining.div_ceil(bins_left);
        let mut end = start + target;
        if end >= n {
            break;
        }
        while end < n && sorted[end] == sorted[end - 1] {
            end += 1;
        }
        if end >= n {
            break;
        }
        cuts.push(sorted[end - 1]);
        start = end;
        bins_left -= 1;
    }
    cuts
}

fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|c| *c < x)
}

/// Ranks every attribute by the chi-squared statistic of its binned values
/// against the class column.
///
/// Each attribute is discretized by [`equal_frequency_cuts`] into at most
/// `bins` bins; chi-squared is `sum (O - E)^2 / E` over the bin-by-class
/// contingency table with `E = row_total * col_total / N`, skipping cells
/// with `E = 0`. Ranking is descending by score; ties order by attribute
/// name.
pub fn chi_squared_rank(
    table: &MiningTable,
    bins: usize,
) -> Result<AttributeRanking, MiningError> {
    let class = table.class.as_ref().ok_or(MiningError::NoClass)?;
    let classes = table.classes_present();
    if classes.len() < 2 {
        return Err(MiningError::SingleClass);
    }
    let class_index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let n = table.n_rows();

    let mut entries = Vec::with_capacity(table.attributes.len());
    for attr in &table.attributes {
        let cuts = equal_frequency_cuts(&attr.values, bins);
        let n_bins = cuts.len() + 1;
        let mut observed = vec![vec![0.0_f64; classes.len()]; n_bins];
        for (row, value) in attr.values.iter().enumerate() {
            let b = bin_of(&cuts, *value);
            let c = class_index[class.labels[row].as_str()];
            observed[b][c] += 1.0;
        }
        entries.push(RankedAttribute {
            name: attr.name.clone(),
            score: chi_squared(&observed, n as f64),
            cuts,
            bin_count: n_bins,
        });
    }
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(AttributeRanking {
        bins_requested: bins,
        entries,
    })
}

/// Chi-squared statistic of a contingency table with grand total `n`.
fn chi_squared(observed: &[Vec<f64>], n: f64) -> f64 {
    if observed.is_empty() || n == 0.0 {
        return 0.0;
    }
    let n_cols = observed[0].len();
    let row_totals: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..n_cols)
        .map(|c| observed.iter().map(|r| r[c]).sum())
        .collect();
    let mut chi2 = 0.0;
    for (r, row) in observed.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = row_totals[r] * col_totals[c] / n;
            if e == 0.0 {
                continue;
            }
            chi2 += (o - e) * (o - e) / e;
        }
    }
    chi2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::{AttributeColumn, ClassColumn};
    use approx::assert_relative_eq;

    fn table_with(attrs: Vec<(&str, Vec<f64>)>, labels: Vec<&str>) -> MiningTable {
        let n = labels.len();
        let mut order: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        order.sort();
        order.dedup();
        MiningTable {
            relation: "t".to_string(),
            simulation_ids: (0..n).map(|i| format!("s{}", i)).collect(),
            model_names: (0..n).map(|i| format!("m{}", i)).collect(),
            attributes: attrs
                .into_iter()
                .enumerate()
                .map(|(i, (name, values))| AttributeColumn {
                    part_cluster: i,
                    name: name.to_string(),
                    values,
                })
                .collect(),
            result_names: vec![],
            results: vec![vec![]; n],
            class: Some(ClassColumn {
                label_order: order,
                labels: labels.iter().map(|l| l.to_string()).collect(),
            }),
        }
    }

    #[test]
    fn perfect_two_bin_predictor_scores_ten() {
        // 5 + 5 rows, attribute 0/1 exactly matching the class:
        // contingency [[5,0],[0,5]], E = 2.5 everywhere, chi2 = 10.
        let table = table_with(
            vec![(
                "a",
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            )],
            vec!["x", "x", "x", "x", "x", "y", "y", "y", "y", "y"],
        );
        let ranking = chi_squared_rank(&table, 10).unwrap();
        assert_eq!(ranking.entries[0].score, 10.0);
        assert_eq!(ranking.entries[0].bin_count, 2);
    }

    #[test]
    fn constant_attribute_scores_zero() {
        let table = table_with(
            vec![("a", vec![3.0; 6])],
            vec!["x", "x", "x", "y", "y", "y"],
        );
        let ranking = chi_squared_rank(&table, 10).unwrap();
        assert_eq!(ranking.entries[0].score, 0.0);
        assert_eq!(ranking.entries[0].bin_count, 1);
    }

    #[test]
    fn class_independent_attribute_scores_zero() {
        // Identical class mix in each bin: O == E exactly.
        let table = table_with(
            vec![("a", vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0])],
            vec!["x", "y", "x", "y", "x", "y", "x", "y"],
        );
        let ranking = chi_squared_rank(&table, 2).unwrap();
        assert_eq!(ranking.entries[0].score, 0.0);
    }

    #[test]
    fn ranking_is_descending_with_name_tiebreak() {
        let table = table_with(
            vec![
                ("weak", vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
                ("strong", vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
                ("zero_b", vec![5.0; 10]),
                ("zero_a", vec![7.0; 10]),
            ],
            vec!["x", "x", "x", "x", "x", "y", "y", "y", "y", "y"],
        );
        let ranking = chi_squared_rank(&table, 10).unwrap();
        let names: Vec<&str> = ranking.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names[0], "strong");
        // Ties at score 0 order alphabetically.
        assert_eq!(names[2], "zero_a");
        assert_eq!(names[3], "zero_b");
        for pair in ranking.entries.windows(2) {
            assert!(pair[0].score >= pair[1].score);
        }
    }

    #[test]
    fn identical_tables_produce_identical_ranking_bytes() {
        let table = table_with(
            vec![
                ("a", vec![0.5, 1.5, 0.25, 3.0, 2.0, 1.0]),
                ("b", vec![9.0, 8.0, 7.0, 6.0, 5.0, 4.0]),
            ],
            vec!["x", "y", "x", "y", "x", "y"],
        );
        let first = chi_squared_rank(&table, 4).unwrap();
        let second = chi_squared_rank(&table, 4).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.to_text().into_bytes(), second.to_text().into_bytes());
    }

    #[test]
    fn single_class_is_rejected() {
        let table = table_with(vec![("a", vec![0.0, 1.0])], vec!["x", "x"]);
        assert!(matches!(
            chi_squared_rank(&table, 10),
            Err(MiningError::SingleClass)
        ));
    }

    #[test]
    fn missing_class_is_rejected() {
        let mut table = table_with(vec![("a", vec![0.0, 1.0])], vec!["x", "y"]);
        table.class = None;
        assert!(matches!(
            chi_squared_rank(&table, 10),
            Err(MiningError::NoClass)
        ));
    }

    #[test]
    fn scores_are_invariant_under_monotone_transforms() {
        let values = vec![0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5];
        let labels = vec!["x", "x", "x", "y", "x", "y", "y", "x", "y", "y"];
        let base = table_with(vec![("a", values.clone())], labels.clone());
        let affine = table_with(
            vec![("a", values.iter().map(|v| 2.0 * v + 1.0).collect())],
            labels.clone(),
        );
        let cubed = table_with(
            vec![("a", values.iter().map(|v| v * v * v).collect())],
            labels,
        );
        let s0 = chi_squared_rank(&base, 4).unwrap().entries[0].score;
        let s1 = chi_squared_rank(&affine, 4).unwrap().entries[0].score;
        let s2 = chi_squared_rank(&cubed, 4).unwrap().entries[0].score;
        assert_relative_eq!(s0, s1, epsilon = 1e-12);
        assert_relative_eq!(s0, s2, epsilon = 1e-12);
        assert!(s0 >= 0.0);
    }

    #[test]
    fn equal_frequency_respects_runs() {
        // Five 0s then five 1s with 10 requested bins: one cut between the
        // runs, never inside one.
        let cuts = equal_frequency_cuts(
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            10,
        );
        assert_eq!(cuts, vec![0.0]);
        assert_eq!(bin_of(&cuts, 0.0), 0);
        assert_eq!(bin_of(&cuts, 1.0), 1);
    }

    #[test]
    fn equal_frequency_balances_continuous_values() {
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let cuts = equal_frequency_cuts(&values, 10);
        assert_eq!(cuts.len(), 9);
        let mut counts = [0usize; 10];
        for v in &values {
            counts[bin_of(&cuts, *v)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10));
    }

    #[test]
    fn equal_frequency_separates_balanced_distinct_values() {
        // Balanced d-valued attributes split into exactly d bins.
        let mut values = Vec::new();
        for v in [10.0, 20.0, 30.0] {
            values.extend(std::iter::repeat_n(v, 20));
        }
        let cuts = equal_frequency_cuts(&values, 10);
        assert_eq!(cuts, vec![10.0, 20.0]);
    }

    #[test]
    fn skewed_runs_may_share_a_bin() {
        // One outlier against a 99-run: the run dominates its bin and the
        // outlier cannot get a bin of its own below the target fill.
        let mut values = vec![0.0];
        values.extend(std::iter::repeat_n(1.0, 99));
        let cuts = equal_frequency_cuts(&values, 10);
        assert!(cuts.is_empty());
    }
}
