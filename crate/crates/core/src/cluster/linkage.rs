//! Agglomerative hierarchical clustering with deterministic tie-breaking.
//!
//! Plain stored-matrix agglomeration: keep the condensed distance matrix,
//! repeatedly merge the closest active pair, and update distances with the
//! Lance-Williams recurrence for the chosen linkage. O(n^3) worst case,
//! which is fine at catalog scale, and — unlike nearest-neighbor-chain
//! schemes — lets us pin the tie rule exactly: on equal distance the pair
//! with the lexicographically smallest representative row indices merges
//! first, so runs are reproducible across platforms.

use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Linkage criterion for cluster-to-cluster distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Linkage {
    /// Mean pairwise distance between members (UPGMA).
    Average,
    /// Minimum pairwise distance.
    Single,
    /// Maximum pairwise distance.
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, ClusterError> {
        match s {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(ClusterError::BadLinkage {
                name: other.to_string(),
            }),
        }
    }
}

impl Linkage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        }
    }
}

/// Where to cut the dendrogram into flat labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutSpec {
    /// Merge every step with linkage distance <= height.
    Height(f64),
    /// Stop at exactly `k` clusters.
    Count(usize),
}

/// One dendrogram step: clusters `a` and `b` merge at `height` into a new
/// cluster of `size` leaves. Leaves are 0..n; the i-th merge creates
/// cluster id n+i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram over `n_leaves` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl ClusterTree {
    /// Flat labels after applying the cut. Labels are renumbered 0.. in
    /// order of first row occurrence, so identical partitions get identical
    /// label vectors.
    pub fn cut(&self, spec: CutSpec) -> Result<Vec<usize>, ClusterError> {
        let n = self.n_leaves;
        if n == 0 {
            return Ok(Vec::new());
        }
        let applied = match spec {
            CutSpec::Height(h) => self.merges.iter().take_while(|m| m.height <= h).count(),
            CutSpec::Count(k) => {
                if k < 1 || k > n {
                    return Err(ClusterError::BadCut {
                        requested: k,
                        rows: n,
                    });
                }
                n - k
            }
        };
        // Union-find over leaf and merge ids.
        let mut parent: Vec<usize> = (0..n + applied).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, merge) in self.merges.iter().take(applied).enumerate() {
            let target = n + i;
            let ra = find(&mut parent, merge.a);
            let rb = find(&mut parent, merge.b);
            parent[ra] = target;
            parent[rb] = target;
        }
        let mut labels = vec![usize::MAX; n];
        let mut next = 0usize;
        let mut map: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for (leaf, slot) in labels.iter_mut().enumerate() {
            let root = find(&mut parent, leaf);
            *slot = *map.entry(root).or_insert_with(|| {
                let l = next;
                next += 1;
                l
            });
        }
        Ok(labels)
    }

    /// Number of clusters at the given cut.
    pub fn cluster_count(&self, spec: CutSpec) -> Result<usize, ClusterError> {
        Ok(self
            .cut(spec)?
            .iter()
            .copied()
            .max()
            .map_or(0, |max| max + 1))
    }
}

/// Hierarchical clustering of standardized row vectors under Euclidean
/// distance. Returns the dendrogram; use [`ClusterTree::cut`] for labels.
pub fn linkage_tree(
    rows: &[Vec<f64>],
    linkage: Linkage,
) -> Result<ClusterTree, ClusterError> {
    let n = rows.len();
    if n == 0 {
        return Ok(ClusterTree {
            n_leaves: 0,
            merges: Vec::new(),
        });
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(ClusterError::RaggedRows);
    }

    // Full symmetric distance matrix, n x n.
    let mut dist = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&rows[i], &rows[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // Active clusters carry their dendrogram id, size, and representative
    // (smallest member row) used for tie-breaking. Matrix slot = index of
    // the cluster's earliest member row.
    struct Active {
        slot: usize,
        id: usize,
        size: usize,
    }
    let mut active: Vec<Active> = (0..n)
        .map(|i| Active {
            slot: i,
            id: i,
            size: 1,
        })
        .collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        // Closest active pair; scan in slot order so equal distances pick
        // the smallest (i, j) representatives.
        let mut best = (0usize, 1usize);
        let mut best_d = f64::INFINITY;
        for ai in 0..active.len() {
            for aj in (ai + 1)..active.len() {
                let d = dist[active[ai].slot * n + active[aj].slot];
                if d < best_d {
                    best_d = d;
                    best = (ai, aj);
                }
            }
        }
        let (ai, aj) = best;
        let (size_a, size_b) = (active[ai].size, active[aj].size);
        let merged_size = size_a + size_b;
        let (slot_a, slot_b) = (active[ai].slot, active[aj].slot);

        // Lance-Williams update into slot_a.
        for (ak, other) in active.iter().enumerate() {
            if ak == ai || ak == aj {
                continue;
            }
            let s = other.slot;
            let da = dist[slot_a * n + s];
            let db = dist[slot_b * n + s];
            let d = match linkage {
                Linkage::Average => {
                    (size_a as f64 * da + size_b as f64 * db) / merged_size as f64
                }
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            dist[slot_a * n + s] = d;
            dist[s * n + slot_a] = d;
        }

        merges.push(Merge {
            a: active[ai].id,
            b: active[aj].id,
            height: best_d,
            size: merged_size,
        });
        active[ai].id = n + merges.len() - 1;
        active[ai].size = merged_size;
        active.remove(aj);
    }

    Ok(ClusterTree {
        n_leaves: n,
        merges,
    })
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
