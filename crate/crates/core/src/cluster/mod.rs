//! Part identification and variant grouping in meta-data space.
//!
//! Every meta-data property spans one dimension of a similarity space;
//! each catalogued part instance is a point in it. After per-feature
//! standardization, hierarchical clustering recovers part identity without
//! trusting part numbers or names: a coarse dendrogram cut groups instances
//! of the same physical part, and a finer cut inside each group separates
//! its design variants. A weighted sum of the standardized features
//! collapses the same space into the scalar similarity measure used as a
//! mining attribute.

mod linkage;

pub use linkage::{linkage_tree, ClusterTree, CutSpec, Linkage, Merge};

use std::collections::BTreeMap;

use crate::geometry::PartMetadata;
use crate::store::CatalogEntry;

/// Feature names of the similarity space, in canonical column order.
pub const FEATURE_NAMES: [&str; 14] = [
    "mass",
    "surface",
    "cog_x",
    "cog_y",
    "cog_z",
    "inertia_1",
    "inertia_2",
    "inertia_3",
    "edge_length",
    "margin_length",
    "branching_length",
    "bbox_dx",
    "bbox_dy",
    "bbox_dz",
];

/// Extracts the feature vector of one descriptor, in [`FEATURE_NAMES`]
/// order.
pub fn feature_vector(md: &PartMetadata) -> Vec<f64> {
    vec![
        md.mass,
        md.surface,
        md.cog[0],
        md.cog[1],
        md.cog[2],
        md.principal[0],
        md.principal[1],
        md.principal[2],
        md.edge_length,
        md.margin_length,
        md.branching_length,
        md.bbox[0],
        md.bbox[1],
        md.bbox[2],
    ]
}

/// Identifies one catalog row inside a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntryKey {
    pub simulation_id: String,
    pub part_id: u64,
    pub digest: String,
}

impl EntryKey {
    fn of(entry: &CatalogEntry) -> Self {
        EntryKey {
            simulation_id: entry.simulation_id.clone(),
            part_id: entry.part_id,
            digest: entry.digest.as_hex().to_string(),
        }
    }
}

/// Per-column mean and population standard deviation, retained by
/// [`FeatureMatrix::standardize`] so new points can be projected into the
/// same standardized space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub stddev: f64,
}

impl ColumnStats {
    /// z-score of a raw value; constant columns map to 0.
    pub fn z(&self, value: f64) -> f64 {
        if self.stddev == 0.0 {
            0.0
        } else {
            (value - self.mean) / self.stddev
        }
    }
}

/// Rows of named feature values, one per catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<EntryKey>,
    pub columns: Vec<&'static str>,
    values: Vec<Vec<f64>>,
    /// Present once the matrix is standardized.
    pub column_stats: Option<Vec<ColumnStats>>,
}

impl FeatureMatrix {
    /// Builds the raw (unstandardized) matrix from catalog entries.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a CatalogEntry>) -> Self {
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for entry in entries {
            rows.push(EntryKey::of(entry));
            values.push(feature_vector(&entry.metadata));
        }
        FeatureMatrix {
            rows,
            columns: FEATURE_NAMES.to_vec(),
            values,
            column_stats: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn rows_raw(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn is_standardized(&self) -> bool {
        self.column_stats.is_some()
    }

    /// z-scores every column (population standard deviation); constant
    /// columns map to all zeros. Requires at least two rows.
    pub fn standardize(&self) -> Result<FeatureMatrix, ClusterError> {
        let n = self.n_rows();
        if n < 2 {
            return Err(ClusterError::TooFewRows { rows: n });
        }
        let dim = self.columns.len();
        let mut stats = Vec::with_capacity(dim);
        for c in 0..dim {
            let mean = self.values.iter().map(|r| r[c]).sum::<f64>() / n as f64;
            let var = self
                .values
                .iter()
                .map(|r| (r[c] - mean) * (r[c] - mean))
                .sum::<f64>()
                / n as f64;
            stats.push(ColumnStats {
                mean,
                stddev: var.sqrt(),
            });
        }
        let values = self
            .values
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&stats)
                    .map(|(v, s)| s.z(*v))
                    .collect::<Vec<f64>>()
            })
            .collect();
        Ok(FeatureMatrix {
            rows: self.rows.clone(),
            columns: self.columns.clone(),
            values,
            column_stats: Some(stats),
        })
    }
}

/// Non-negative per-feature weights, normalized to sum 1 on load.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityWeights {
    weights: BTreeMap<String, f64>,
}

impl SimilarityWeights {
    /// Uniform weights over all features.
    pub fn uniform() -> Self {
        let w = 1.0 / FEATURE_NAMES.len() as f64;
        SimilarityWeights {
            weights: FEATURE_NAMES.iter().map(|n| (n.to_string(), w)).collect(),
        }
    }

    /// Builds weights from (name, value) pairs. Unknown feature names,
    /// negative, or non-finite values are rejected; at least one weight
    /// must be positive. Values are normalized to sum 1.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, ClusterError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for (name, value) in pairs {
            let name = name.into();
            if !FEATURE_NAMES.contains(&name.as_str()) {
                return Err(ClusterError::UnknownFeature { name });
            }
            if !value.is_finite() || value < 0.0 {
                return Err(ClusterError::BadWeight { name, value });
            }
            weights.insert(name, value);
        }
        let total: f64 = weights.values().sum();
        if total <= 0.0 {
            return Err(ClusterError::NoPositiveWeight);
        }
        for v in weights.values_mut() {
            *v /= total;
        }
        Ok(SimilarityWeights { weights })
    }

    /// Parses the flat `name = value` weights file format. `#` starts a
    /// comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, ClusterError> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((name, value)) = line.split_once('=') else {
                return Err(ClusterError::WeightsSyntax {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| ClusterError::WeightsSyntax {
                    line: idx + 1,
                    text: raw.to_string(),
                })?;
            pairs.push((name.trim().to_string(), value));
        }
        Self::from_pairs(pairs)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.weights.get(name).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Scalar similarity measure: the weighted sum of standardized features.
///
/// `normalization` must cover every column in [`FEATURE_NAMES`] order, as
/// produced by [`FeatureMatrix::standardize`].
pub fn similarity_value(
    metadata: &PartMetadata,
    weights: &SimilarityWeights,
    normalization: &[ColumnStats],
) -> Result<f64, ClusterError> {
    if normalization.len() != FEATURE_NAMES.len() {
        return Err(ClusterError::BadNormalization {
            expected: FEATURE_NAMES.len(),
            found: normalization.len(),
        });
    }
    let raw = feature_vector(metadata);
    let mut s = 0.0;
    for ((name, value), stats) in FEATURE_NAMES.iter().zip(raw).zip(normalization) {
        s += weights.get(name) * stats.z(value);
    }
    Ok(s)
}

/// Parameters of the two-level grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupingParams {
    pub linkage: Linkage,
    /// Coarse cut height separating physical parts, standardized units.
    pub coarse_height: f64,
    /// Fine cut height separating variants inside a part; must be below
    /// the coarse height.
    pub fine_height: f64,
}

impl Default for GroupingParams {
    fn default() -> Self {
        GroupingParams {
            linkage: Linkage::Average,
            coarse_height: 3.0,
            fine_height: 0.5,
        }
    }
}

/// Assignment of one catalog entry to a part cluster and a variant inside
/// it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupAssignment {
    pub entry: EntryKey,
    pub part_cluster: usize,
    pub variant: usize,
}

/// Result of [`two_level_grouping`]: per-entry assignments plus the
/// dendrogram they came from.
#[derive(Debug, Clone)]
pub struct VariantGrouping {
    pub assignments: Vec<GroupAssignment>,
    pub part_clusters: usize,
    pub tree: Option<ClusterTree>,
    pub params: GroupingParams,
}

impl VariantGrouping {
    /// Map from (simulation_id, part_id) to part cluster id.
    pub fn cluster_of(&self) -> BTreeMap<(String, u64), usize> {
        self.assignments
            .iter()
            .map(|a| {
                (
                    (a.entry.simulation_id.clone(), a.entry.part_id),
                    a.part_cluster,
                )
            })
            .collect()
    }

    /// Distinct raw part ids per part cluster, for reporting.
    pub fn cluster_members(&self) -> BTreeMap<usize, Vec<u64>> {
        let mut members: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for a in &self.assignments {
            let ids = members.entry(a.part_cluster).or_default();
            if !ids.contains(&a.entry.part_id) {
                ids.push(a.entry.part_id);
            }
        }
        for ids in members.values_mut() {
            ids.sort_unstable();
        }
        members
    }
}

/// Groups catalog entries into part clusters (coarse dendrogram cut) and
/// variant subclusters (fine cut of the same dendrogram).
///
/// Cutting one tree twice guarantees that variants nest inside parts.
/// Entries with equal digests have equal feature vectors, merge at height
/// zero, and therefore always share a variant subcluster.
pub fn two_level_grouping(
    entries: &[CatalogEntry],
    params: GroupingParams,
) -> Result<VariantGrouping, ClusterError> {
    if entries.is_empty() {
        return Err(ClusterError::TooFewRows { rows: 0 });
    }
    if !(params.fine_height >= 0.0 && params.fine_height < params.coarse_height) {
        return Err(ClusterError::BadHeights {
            coarse: params.coarse_height,
            fine: params.fine_height,
        });
    }
    if entries.len() == 1 {
        return Ok(VariantGrouping {
            assignments: vec![GroupAssignment {
                entry: EntryKey::of(&entries[0]),
                part_cluster: 0,
                variant: 0,
            }],
            part_clusters: 1,
            tree: None,
            params,
        });
    }

    let matrix = FeatureMatrix::from_entries(entries).standardize()?;
    let tree = linkage_tree(matrix.rows_raw(), params.linkage)?;
    let coarse = tree.cut(CutSpec::Height(params.coarse_height))?;
    let fine = tree.cut(CutSpec::Height(params.fine_height))?;

    // Variant ids local to each part cluster, numbered by first occurrence.
    let mut variant_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut next_variant: BTreeMap<usize, usize> = BTreeMap::new();
    let mut assignments = Vec::with_capacity(entries.len());
    for (i, key) in matrix.rows.iter().enumerate() {
        let part_cluster = coarse[i];
        let variant = *variant_map
            .entry((part_cluster, fine[i]))
            .or_insert_with(|| {
                let slot = next_variant.entry(part_cluster).or_insert(0);
                let v = *slot;
                *slot += 1;
                v
            });
        assignments.push(GroupAssignment {
            entry: key.clone(),
            part_cluster,
            variant,
        });
    }
    let part_clusters = coarse.iter().copied().max().map_or(0, |m| m + 1);
    Ok(VariantGrouping {
        assignments,
        part_clusters,
        tree: Some(tree),
        params,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("need at least 2 rows, found {rows}")]
    TooFewRows { rows: usize },
    #[error("feature rows have inconsistent lengths")]
    RaggedRows,
    #[error("cut into {requested} clusters impossible with {rows} rows")]
    BadCut { requested: usize, rows: usize },
    #[error("unknown linkage '{name}' (expected average, single, or complete)")]
    BadLinkage { name: String },
    #[error("unknown feature name '{name}' in weights")]
    UnknownFeature { name: String },
    #[error("weight for '{name}' must be finite and >= 0, found {value}")]
    BadWeight { name: String, value: f64 },
    #[error("at least one weight must be positive")]
    NoPositiveWeight,
    #[error("weights file line {line} is not 'name = value': {text}")]
    WeightsSyntax { line: usize, text: String },
    #[error("normalization must cover {expected} features, found {found}")]
    BadNormalization { expected: usize, found: usize },
    #[error("cut heights must satisfy 0 <= fine < coarse, found coarse={coarse} fine={fine}")]
    BadHeights { coarse: f64, fine: f64 },
}
