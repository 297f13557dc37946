//! Assembly of the mining table from catalog, grouping, and crash results.

use std::collections::{BTreeMap, BTreeSet};

use super::{AttributeColumn, MiningError, MiningTable, ResultSet};
use crate::cluster::{similarity_value, FeatureMatrix, SimilarityWeights, VariantGrouping};
use crate::store::CatalogEntry;

/// Builds the table: one row per result-set simulation, one attribute per
/// part cluster with more than one distinct digest across those
/// simulations.
///
/// Attribute values encode presence and shape: the raw similarity values
/// of the variants present are standardized per column and shifted so the
/// smallest present value is exactly 1, while absence stays exactly 0.
/// Thresholds between 0 and 1 therefore express "part integrated at all".
/// Columns are ordered by part cluster id; rows keep results order.
pub fn assemble_table(
    entries: &[CatalogEntry],
    grouping: &VariantGrouping,
    results: &ResultSet,
    weights: &SimilarityWeights,
    relation: &str,
) -> Result<MiningTable, MiningError> {
    let mut seen = BTreeSet::new();
    for row in &results.rows {
        if !seen.insert(row.simulation_id.as_str()) {
            return Err(MiningError::DuplicateSimulation {
                simulation_id: row.simulation_id.clone(),
            });
        }
    }

    let mut table = MiningTable {
        relation: relation.to_string(),
        result_names: results.names.clone(),
        ..Default::default()
    };
    if results.rows.is_empty() {
        return Ok(table);
    }

    let sims: BTreeSet<&str> = seen;
    let in_study: Vec<&CatalogEntry> = entries
        .iter()
        .filter(|e| sims.contains(e.simulation_id.as_str()))
        .collect();
    for row in &results.rows {
        if !in_study
            .iter()
            .any(|e| e.simulation_id == row.simulation_id)
        {
            return Err(MiningError::UnknownSimulation {
                simulation_id: row.simulation_id.clone(),
            });
        }
    }

    // Similarity normalization over the study population.
    let matrix = FeatureMatrix::from_entries(in_study.iter().copied());
    let stats = matrix.standardize()?.column_stats.unwrap();

    let cluster_of = grouping.cluster_of();

    // Per part cluster: digests present and, per simulation, the entry
    // chosen to represent it (smallest part id, then digest).
    #[derive(Default)]
    struct ClusterInfo<'a> {
        digests: BTreeSet<&'a str>,
        by_sim: BTreeMap<&'a str, &'a CatalogEntry>,
    }
    let mut clusters: BTreeMap<usize, ClusterInfo> = BTreeMap::new();
    for entry in &in_study {
        let key = (entry.simulation_id.clone(), entry.part_id);
        let Some(&cluster) = cluster_of.get(&key) else {
            continue; // entry outside the grouping: not mineable
        };
        let info = clusters.entry(cluster).or_default();
        info.digests.insert(entry.digest.as_hex());
        info.by_sim
            .entry(entry.simulation_id.as_str())
            .and_modify(|existing| {
                let replace = (entry.part_id, entry.digest.as_hex())
                    < (existing.part_id, existing.digest.as_hex());
                if replace {
                    *existing = entry;
                }
            })
            .or_insert(entry);
    }

    // Rows in results order; model name from the simulation's entries.
    let mut model_of: BTreeMap<&str, &str> = BTreeMap::new();
    for entry in &in_study {
        model_of
            .entry(entry.simulation_id.as_str())
            .or_insert(entry.source_model.as_str());
    }
    for row in &results.rows {
        table.simulation_ids.push(row.simulation_id.clone());
        table
            .model_names
            .push(model_of[row.simulation_id.as_str()].to_string());
        table.results.push(row.values.clone());
    }

    // Only modified clusters (more than one distinct digest) become
    // attributes; unchanged parts cannot explain result differences.
    for (cluster, info) in clusters {
        if info.digests.len() < 2 {
            continue;
        }
        let mut present: Vec<(usize, f64)> = Vec::new();
        for (row, result) in results.rows.iter().enumerate() {
            if let Some(entry) = info.by_sim.get(result.simulation_id.as_str()) {
                let s = similarity_value(&entry.metadata, weights, &stats)?;
                present.push((row, s));
            }
        }
        let mut values = vec![0.0; results.rows.len()];
        if !present.is_empty() {
            let n = present.len() as f64;
            let mean = present.iter().map(|(_, s)| s).sum::<f64>() / n;
            let var = present
                .iter()
                .map(|(_, s)| (s - mean) * (s - mean))
                .sum::<f64>()
                / n;
            let std = var.sqrt();
            let z: Vec<f64> = present
                .iter()
                .map(|(_, s)| if std == 0.0 { 0.0 } else { (s - mean) / std })
                .collect();
            let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
            for ((row, _), z) in present.iter().zip(z) {
                values[*row] = z - z_min + 1.0;
            }
        }
        table.attributes.push(AttributeColumn {
            part_cluster: cluster,
            name: format!("part_{}", cluster),
            values,
        });
    }

    Ok(table)
}
