//! The re-ordered mining table and the analyses that run on it.
//!
//! One row per crash test: the model name, one similarity attribute per
//! modified part cluster (exactly 0 when the part is absent from that
//! model, strictly positive when present), the intrusion results, and an
//! optional crash-quality class. On this table:
//!
//! - [`kmeans_classes`] clusters selected result columns into quality
//!   classes (lowest mean intrusion = `good`),
//! - [`chi_squared_rank`] ranks part attributes by the impact of their
//!   variation on the class,
//! - [`build_tree`] induces a gain-ratio decision tree with
//!   pessimistic-error pruning.

mod chi2;
mod kmeans;
mod table;
mod tree;

pub use chi2::{chi_squared_rank, equal_frequency_cuts, AttributeRanking, RankedAttribute};
pub use kmeans::{kmeans_classes, KmeansOutcome, DEFAULT_KMEANS_SEED, MAX_KMEANS_ITERATIONS};
pub use table::assemble_table;
pub use tree::{build_tree, DecisionTree, TreeNode};

use std::collections::BTreeSet;
use std::io::Read;

/// One similarity attribute column of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeColumn {
    /// Part cluster the attribute describes.
    pub part_cluster: usize,
    /// Column name, `part_<cluster>`.
    pub name: String,
    /// Per-row values; absent part encoded exactly 0, present parts are
    /// strictly positive.
    pub values: Vec<f64>,
}

/// Crash-quality class column appended by [`kmeans_classes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassColumn {
    /// Distinct labels, best (lowest intrusion) first.
    pub label_order: Vec<String>,
    /// Per-row label.
    pub labels: Vec<String>,
}

/// One row per simulation: part-similarity attributes and intrusion
/// results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MiningTable {
    pub relation: String,
    /// Row keys: simulation ids in results order.
    pub simulation_ids: Vec<String>,
    /// Model name column, parallel to rows.
    pub model_names: Vec<String>,
    pub attributes: Vec<AttributeColumn>,
    pub result_names: Vec<String>,
    /// Row-major intrusion values, mm.
    pub results: Vec<Vec<f64>>,
    pub class: Option<ClassColumn>,
}

impl MiningTable {
    pub fn n_rows(&self) -> usize {
        self.simulation_ids.len()
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeColumn> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn result_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.result_names.iter().position(|n| n == name)?;
        Some(self.results.iter().map(|r| r[idx]).collect())
    }

    /// Distinct class labels present, in label order.
    pub fn classes_present(&self) -> Vec<String> {
        let Some(class) = &self.class else {
            return Vec::new();
        };
        let present: BTreeSet<&str> = class.labels.iter().map(|s| s.as_str()).collect();
        class
            .label_order
            .iter()
            .filter(|l| present.contains(l.as_str()))
            .cloned()
            .collect()
    }

    /// Serializes the table in attribute-relation text format.
    ///
    /// Header, one attribute per column in table order, then `@data` with
    /// comma-separated rows; reals render shortest-round-trip, `\n` line
    /// endings.
    pub fn to_arff(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("@relation {}\n", arff_name(&self.relation)));
        out.push_str("@attribute model_name string\n");
        for attr in &self.attributes {
            out.push_str(&format!("@attribute {} numeric\n", attr.name));
        }
        for name in &self.result_names {
            out.push_str(&format!("@attribute {} numeric\n", arff_name(name)));
        }
        if let Some(class) = &self.class {
            out.push_str(&format!(
                "@attribute class {{{}}}\n",
                class.label_order.join(",")
            ));
        }
        out.push_str("@data\n");
        for row in 0..self.n_rows() {
            let mut fields = vec![arff_string(&self.model_names[row])];
            for attr in &self.attributes {
                fields.push(format!("{}", attr.values[row]));
            }
            for v in &self.results[row] {
                fields.push(format!("{}", v));
            }
            if let Some(class) = &self.class {
                fields.push(class.labels[row].clone());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn arff_name(name: &str) -> String {
    if name.contains(char::is_whitespace) || name.contains(',') {
        format!("'{}'", name.replace('\'', "\\'"))
    } else {
        name.to_string()
    }
}

fn arff_string(value: &str) -> String {
    if value.is_empty()
        || value.contains(char::is_whitespace)
        || value.contains(',')
        || value.contains('\'')
    {
        format!("'{}'", value.replace('\'', "\\'"))
    } else {
        value.to_string()
    }
}

/// Intrusion results of one crash test, aligned to [`ResultSet::names`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntrusionResult {
    pub simulation_id: String,
    pub values: Vec<f64>,
}

/// Parsed results file: intrusion names plus one row per simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultSet {
    pub names: Vec<String>,
    pub rows: Vec<IntrusionResult>,
}

#[derive(Debug, thiserror::Error)]
pub enum MiningError {
    #[error("results i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("results line {line}: {message}")]
    ResultsFormat { line: usize, message: String },
    #[error("simulation '{simulation_id}' has results but no catalogued parts")]
    UnknownSimulation { simulation_id: String },
    #[error("duplicate simulation '{simulation_id}' in results")]
    DuplicateSimulation { simulation_id: String },
    #[error("table has a single class; analyses need at least 2")]
    SingleClass,
    #[error("table has no class column; run result clustering first")]
    NoClass,
    #[error("k must satisfy 2 <= k <= rows, found k={k} with {rows} rows")]
    BadK { k: usize, rows: usize },
    #[error("only {distinct} distinct result rows, cannot seed {k} centroids")]
    TooFewDistinctRows { distinct: usize, k: usize },
    #[error("unknown result column '{name}'")]
    UnknownResultColumn { name: String },
    #[error("tree needs at least {required} rows (2 x min instances), found {rows}")]
    TooFewRows { required: usize, rows: usize },
    #[error("row is missing attribute '{name}' tested by the tree")]
    MissingAttribute { name: String },
    #[error("non-finite value in column '{column}' for simulation '{simulation_id}'")]
    NonFiniteValue {
        column: String,
        simulation_id: String,
    },
    #[error(transparent)]
    Cluster(#[from] crate::cluster::ClusterError),
}

/// Reads the results interchange CSV: header
/// `simulation_id,<intrusion name>,...`, one row per crash test, values in
/// mm.
pub fn read_results_csv<R: Read>(reader: R) -> Result<ResultSet, MiningError> {
    let mut text = String::new();
    let mut r = reader;
    r.read_to_string(&mut text)?;
    parse_results_csv(&text)
}

/// Parses results CSV text. See [`read_results_csv`].
pub fn parse_results_csv(text: &str) -> Result<ResultSet, MiningError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(MiningError::ResultsFormat {
            line: 1,
            message: "missing header".to_string(),
        });
    };
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("simulation_id") {
        return Err(MiningError::ResultsFormat {
            line: 1,
            message: "header must start with 'simulation_id'".to_string(),
        });
    }
    let names: Vec<String> = cols.map(|c| c.to_string()).collect();
    if names.is_empty() || names.iter().any(|n| n.is_empty()) {
        return Err(MiningError::ResultsFormat {
            line: 1,
            message: "header needs at least one named intrusion column".to_string(),
        });
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() + 1 {
            return Err(MiningError::ResultsFormat {
                line: idx + 1,
                message: format!(
                    "expected {} fields, found {}",
                    names.len() + 1,
                    fields.len()
                ),
            });
        }
        let simulation_id = fields[0].to_string();
        if simulation_id.is_empty() {
            return Err(MiningError::ResultsFormat {
                line: idx + 1,
                message: "empty simulation_id".to_string(),
            });
        }
        let mut values = Vec::with_capacity(names.len());
        for (name, field) in names.iter().zip(&fields[1..]) {
            let v: f64 = field.parse().map_err(|_| MiningError::ResultsFormat {
                line: idx + 1,
                message: format!("'{}' is not a number in column {}", field, name),
            })?;
            if !v.is_finite() {
                return Err(MiningError::NonFiniteValue {
                    column: name.clone(),
                    simulation_id,
                });
            }
            values.push(v);
        }
        rows.push(IntrusionResult {
            simulation_id,
            values,
        });
    }
    Ok(ResultSet { names, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_csv_round_trips_values() {
        let set = parse_results_csv(
            "simulation_id,intrusion_1,intrusion_2\nsim01,42.5,17.25\nsim02,90,2e1\n",
        )
        .unwrap();
        assert_eq!(set.names, vec!["intrusion_1", "intrusion_2"]);
        assert_eq!(set.rows.len(), 2);
        assert_eq!(set.rows[0].values, vec![42.5, 17.25]);
        assert_eq!(set.rows[1].values, vec![90.0, 20.0]);
    }

    #[test]
    fn results_csv_rejects_bad_header() {
        assert!(parse_results_csv("sim,intrusion_1\n").is_err());
        assert!(parse_results_csv("simulation_id\n").is_err());
    }

    #[test]
    fn results_csv_rejects_short_rows_with_line_number() {
        let err = parse_results_csv("simulation_id,a,b\nsim01,1.0\n").unwrap_err();
        match err {
            MiningError::ResultsFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn results_csv_rejects_non_finite() {
        let err = parse_results_csv("simulation_id,a\nsim01,NaN\n").unwrap_err();
        assert!(matches!(err, MiningError::NonFiniteValue { .. }));
    }

    #[test]
    fn arff_renders_header_and_rows() {
        let table = MiningTable {
            relation: "crash study".to_string(),
            simulation_ids: vec!["sim01".to_string(), "sim02".to_string()],
            model_names: vec!["model-a".to_string(), "model-b".to_string()],
            attributes: vec![AttributeColumn {
                part_cluster: 3,
                name: "part_3".to_string(),
                values: vec![1.5, 0.0],
            }],
            result_names: vec!["intrusion_1".to_string()],
            results: vec![vec![42.5], vec![90.0]],
            class: Some(ClassColumn {
                label_order: vec![
                    "good".to_string(),
                    "medium".to_string(),
                    "poor".to_string(),
                ],
                labels: vec!["good".to_string(), "poor".to_string()],
            }),
        };
        let arff = table.to_arff();
        let expected = "@relation 'crash study'\n\
                        @attribute model_name string\n\
                        @attribute part_3 numeric\n\
                        @attribute intrusion_1 numeric\n\
                        @attribute class {good,medium,poor}\n\
                        @data\n\
                        model-a,1.5,42.5,good\n\
                        model-b,0,90,poor\n";
        assert_eq!(arff, expected);
    }

    #[test]
    fn arff_is_deterministic() {
        let table = MiningTable {
            relation: "r".to_string(),
            simulation_ids: vec!["s".to_string()],
            model_names: vec!["m".to_string()],
            attributes: vec![],
            result_names: vec!["i1".to_string()],
            results: vec![vec![0.1 + 0.2]],
            class: None,
        };
        assert_eq!(table.to_arff(), table.to_arff());
        // Shortest-round-trip rendering of the f64 value.
        assert!(table.to_arff().contains("0.30000000000000004"));
    }
}
