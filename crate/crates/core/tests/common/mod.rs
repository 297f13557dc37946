//! Shared fixtures and independent reference implementations for the
//! integration suites.
//!
//! The oracles here deliberately avoid the library's code paths: plain
//! `[f64; 3]` arithmetic instead of the geometry module, member-list
//! agglomeration instead of the linkage recurrence, and direct
//! contingency evaluation instead of the ranking module.

#![allow(dead_code)]
#![allow(clippy::explicit_counter_loop, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crashmine_core::deck::{parse_deck_str, InputDeck};
use crashmine_core::disasm::{disassemble, PartMesh};

// ---------------------------------------------------------------------
// Plain 3-vector arithmetic for geometry oracles
// ---------------------------------------------------------------------

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Quad area oracle: half the norm of the diagonal cross product.
pub fn quad_area_oracle(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> f64 {
    0.5 * norm(cross(sub(c, a), sub(d, b)))
}

/// Triangle area oracle: half the norm of the edge cross product.
pub fn tri_area_oracle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    0.5 * norm(cross(sub(b, a), sub(c, a)))
}

/// Quad normal oracle: normalized diagonal cross product.
pub fn quad_normal_oracle(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> [f64; 3] {
    let n = cross(sub(c, a), sub(d, b));
    scale(n, 1.0 / norm(n))
}

/// Rigid motion: rotation matrix plus translation.
#[derive(Debug, Clone, Copy)]
pub struct RigidMotion {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidMotion {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + self.translation[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + self.translation[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + self.translation[2],
        ]
    }
}

/// Random rotation (Rodrigues formula around a random axis) and
/// translation within +-50.
pub fn random_motion(rng: &mut ChaCha8Rng) -> RigidMotion {
    let axis = loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = norm(v);
        if n > 1e-3 {
            break scale(v, 1.0 / n);
        }
    };
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (sin, cos) = angle.sin_cos();
    let [x, y, z] = axis;
    let rotation = [
        [
            cos + x * x * (1.0 - cos),
            x * y * (1.0 - cos) - z * sin,
            x * z * (1.0 - cos) + y * sin,
        ],
        [
            y * x * (1.0 - cos) + z * sin,
            cos + y * y * (1.0 - cos),
            y * z * (1.0 - cos) - x * sin,
        ],
        [
            z * x * (1.0 - cos) - y * sin,
            z * y * (1.0 - cos) + x * sin,
            cos + z * z * (1.0 - cos),
        ],
    ];
    let translation = [
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
    ];
    RigidMotion {
        rotation,
        translation,
    }
}

pub fn transform_part(part: &PartMesh, motion: &RigidMotion) -> PartMesh {
    let mut moved = part.clone();
    for node in moved.nodes.values_mut() {
        let [x, y, z] = motion.apply([node.x, node.y, node.z]);
        node.x = x;
        node.y = y;
        node.z = z;
    }
    moved
}

/// Random single-part mesh: a jittered k x m quad grid warped out of
/// plane, with random material.
pub fn random_part(rng: &mut ChaCha8Rng) -> PartMesh {
    let rows = rng.gen_range(2..5usize);
    let cols = rng.gen_range(2..5usize);
    let mut text = String::new();
    let node_id = |i: usize, j: usize| (i * (cols + 1) + j + 1) as u64;
    for i in 0..=rows {
        for j in 0..=cols {
            let x = j as f64 + rng.gen_range(-0.25..0.25);
            let y = i as f64 + rng.gen_range(-0.25..0.25);
            let z = rng.gen_range(-0.4..0.4);
            writeln!(text, "NODE {} {} {} {}", node_id(i, j), x, y, z).unwrap();
        }
    }
    let mut elem = 1u64;
    for i in 0..rows {
        for j in 0..cols {
            writeln!(
                text,
                "SHELL {} 11 {} {} {} {}",
                elem,
                node_id(i, j),
                node_id(i, j + 1),
                node_id(i + 1, j + 1),
                node_id(i + 1, j)
            )
            .unwrap();
            elem += 1;
        }
    }
    let thickness: f64 = rng.gen_range(0.5..3.0);
    let density: f64 = rng.gen_range(1e-9..1e-8);
    writeln!(text, "MATER 11 {} {}", thickness, density).unwrap();
    let deck = parse_deck_str(&text, "random").unwrap().deck;
    disassemble(&deck).unwrap().remove(0)
}

/// Splits every quad of a single-part mesh into 4 coplanar quads at edge
/// midpoints and the vertex-average centre. Node ids above `id_base` are
/// free for the new nodes.
pub fn refine_quads(part: &PartMesh, id_base: u64) -> PartMesh {
    use crashmine_core::deck::{Element, ElementKind, Node};
    let mut refined = part.clone();
    refined.elements.clear();
    let mut next_node = id_base;
    let mut midpoint_of: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut next_elem = id_base;

    let coords = |p: &PartMesh, id: u64| -> [f64; 3] { p.nodes[&id].coords() };

    for elem in part.elements.values() {
        assert_eq!(elem.kind, ElementKind::Shell4, "refinement fixture is quads only");
        let ids = [
            elem.node_ids[0],
            elem.node_ids[1],
            elem.node_ids[2],
            elem.node_ids[3],
        ];
        // Midpoints are shared between neighbouring quads via the side key.
        let mut mid = [0u64; 4];
        for (k, (a, b)) in [(0, 1), (1, 2), (2, 3), (3, 0)]
            .map(|(i, j)| (ids[i], ids[j]))
            .into_iter()
            .enumerate()
        {
            let key = (a.min(b), a.max(b));
            let id = *midpoint_of.entry(key).or_insert_with(|| {
                next_node += 1;
                let pa = coords(part, a);
                let pb = coords(part, b);
                refined.nodes.insert(
                    next_node,
                    Node {
                        id: next_node,
                        x: (pa[0] + pb[0]) / 2.0,
                        y: (pa[1] + pb[1]) / 2.0,
                        z: (pa[2] + pb[2]) / 2.0,
                    },
                );
                next_node
            });
            mid[k] = id;
        }
        next_node += 1;
        let centre = next_node;
        let pts = ids.map(|id| coords(part, id));
        refined.nodes.insert(
            centre,
            Node {
                id: centre,
                x: (pts[0][0] + pts[1][0] + pts[2][0] + pts[3][0]) / 4.0,
                y: (pts[0][1] + pts[1][1] + pts[2][1] + pts[3][1]) / 4.0,
                z: (pts[0][2] + pts[1][2] + pts[2][2] + pts[3][2]) / 4.0,
            },
        );
        let quads = [
            [ids[0], mid[0], centre, mid[3]],
            [mid[0], ids[1], mid[1], centre],
            [centre, mid[1], ids[2], mid[2]],
            [mid[3], centre, mid[2], ids[3]],
        ];
        for quad in quads {
            next_elem += 1;
            refined.elements.insert(
                next_elem,
                Element {
                    id: next_elem,
                    kind: ElementKind::Shell4,
                    part_id: part.part_id,
                    node_ids: quad.to_vec(),
                },
            );
        }
    }
    // Drop nodes no longer referenced (none here, but keep the invariant).
    let used: std::collections::BTreeSet<u64> = refined
        .elements
        .values()
        .flat_map(|e| e.node_ids.iter().copied())
        .collect();
    refined.nodes.retain(|id, _| used.contains(id));
    refined
}

// ---------------------------------------------------------------------
// Clustering oracle: direct member-list agglomeration
// ---------------------------------------------------------------------

/// Average-linkage agglomeration computed from first principles: cluster
/// distance is the mean of all cross-pair point distances, recomputed from
/// the points at every step; ties merge the pair with the smallest
/// (min row of a, min row of b). Returns flat labels for `k` clusters,
/// renumbered by first row occurrence.
pub fn brute_force_average_linkage(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    while clusters.len() > k {
        let mut best = (0usize, 1usize);
        let mut best_d = f64::INFINITY;
        let mut best_key = (usize::MAX, usize::MAX);
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut total = 0.0;
                for &a in &clusters[i] {
                    for &b in &clusters[j] {
                        total += dist(&points[a], &points[b]);
                    }
                }
                let d = total / (clusters[i].len() * clusters[j].len()) as f64;
                let key = (
                    (*clusters[i].iter().min().unwrap()).min(*clusters[j].iter().min().unwrap()),
                    (*clusters[i].iter().min().unwrap()).max(*clusters[j].iter().min().unwrap()),
                );
                if d < best_d || (d == best_d && key < best_key) {
                    best_d = d;
                    best = (i, j);
                    best_key = key;
                }
            }
        }
        let (i, j) = best;
        let merged = clusters.remove(j);
        clusters[i].extend(merged);
    }
    let mut labels = vec![usize::MAX; n];
    for (ci, members) in clusters.iter().enumerate() {
        for &row in members {
            labels[row] = ci;
        }
    }
    canonical_labels(&labels)
}

/// Renumbers labels by first occurrence so partitions compare as vectors.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next = 0usize;
    labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

// ---------------------------------------------------------------------
// k-means oracle: independent Lloyd's implementation
// ---------------------------------------------------------------------

/// Lloyd's algorithm from the same documented seeding contract
/// (SplitMix64 Fisher-Yates, first k distinct points), written
/// independently of the mining module.
pub fn lloyd_oracle(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = seed;
    let mut next_u64 = move || {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    };
    for i in (1..n).rev() {
        let j = (next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    for &row in &order {
        if centroids.iter().all(|c| c != &points[row]) {
            centroids.push(points[row].clone());
            if centroids.len() == k {
                break;
            }
        }
    }
    assert_eq!(centroids.len(), k, "oracle needs k distinct points");

    let sq = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let mut assignments = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (row, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, c) in centroids.iter().enumerate() {
                let d = sq(p, c);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            if assignments[row] != best {
                assignments[row] = best;
                changed = true;
            }
        }
        for ci in 0..k {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, a)| **a == ci)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let dim = points[0].len();
            let mut mean = vec![0.0; dim];
            for p in &members {
                for d in 0..dim {
                    mean[d] += p[d];
                }
            }
            for m in &mut mean {
                *m /= members.len() as f64;
            }
            centroids[ci] = mean;
        }
        if !changed {
            break;
        }
    }
    assignments
}

// ---------------------------------------------------------------------
// chi-squared oracle: direct contingency evaluation over distinct values
// ---------------------------------------------------------------------

/// Chi-squared of an attribute against class labels, grouping rows by
/// distinct attribute value (valid for balanced discretized attributes
/// where each distinct value is its own bin).
pub fn chi_squared_oracle(values: &[f64], classes: &[usize], n_classes: usize) -> f64 {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut observed = vec![vec![0.0_f64; n_classes]; distinct.len()];
    for (v, &c) in values.iter().zip(classes) {
        let row = distinct.iter().position(|d| d == v).unwrap();
        observed[row][c] += 1.0;
    }
    let n = values.len() as f64;
    let row_totals: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..n_classes)
        .map(|c| observed.iter().map(|r| r[c]).sum())
        .collect();
    let mut chi2 = 0.0;
    for (r, row) in observed.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = row_totals[r] * col_totals[c] / n;
            if e > 0.0 {
                chi2 += (o - e) * (o - e) / e;
            }
        }
    }
    chi2
}

// ---------------------------------------------------------------------
// Planted fleets
// ---------------------------------------------------------------------

/// Deterministic deck text of one simulation of the dedup fleet:
/// `n_parts` quad-grid parts, parts `1..=modified` varying by a planted
/// thickness multiplier.
fn fleet_deck_text(sim: usize, n_parts: u64, variant_of: &dyn Fn(u64, usize) -> usize) -> String {
    let mut text = String::new();
    for p in 1..=n_parts {
        let ox = 8.0 * (p % 10) as f64;
        let oy = 8.0 * (p / 10) as f64;
        let oz = 0.5 * (p % 4) as f64;
        let size = 0.6 + 0.04 * (p % 8) as f64;
        let node = |i: u64, j: u64| p * 100 + i * 3 + j + 1;
        for i in 0..3u64 {
            for j in 0..3u64 {
                writeln!(
                    text,
                    "NODE {} {} {} {}",
                    node(i, j),
                    ox + size * j as f64,
                    oy + size * i as f64,
                    oz
                )
                .unwrap();
            }
        }
        let mut elem = p * 10;
        for i in 0..2u64 {
            for j in 0..2u64 {
                elem += 1;
                writeln!(
                    text,
                    "SHELL {} {} {} {} {} {}",
                    elem,
                    p,
                    node(i, j),
                    node(i, j + 1),
                    node(i + 1, j + 1),
                    node(i + 1, j)
                )
                .unwrap();
            }
        }
        let base = 1.0 + 0.08 * (p % 6) as f64;
        let thickness = base * (1.0 + 0.25 * variant_of(p, sim) as f64);
        writeln!(text, "MATER {} {} 7.8e-9", p, thickness).unwrap();
    }
    text
}

/// Planted truth of the dedup fleet.
pub struct DedupPlan {
    pub sims: Vec<String>,
    pub modified: std::collections::BTreeSet<u64>,
    pub distinct_variants: usize,
    pub total_instances: usize,
}

/// 10 simulations x 50 parts; parts 1..=10 cycle 2 variants, 11..=20
/// cycle 3, 21..=50 never change. Decks land in `dir` as `<sim>.deck`.
pub fn write_dedup_fleet(dir: &Path) -> DedupPlan {
    let n_sims = 10usize;
    let n_parts = 50u64;
    let variant_of = |p: u64, sim: usize| -> usize {
        if p <= 10 {
            (sim + p as usize) % 2
        } else if p <= 20 {
            (sim + p as usize) % 3
        } else {
            0
        }
    };
    let mut sims = Vec::new();
    for sim in 0..n_sims {
        let id = format!("sim{:02}", sim);
        let text = fleet_deck_text(sim, n_parts, &variant_of);
        std::fs::write(dir.join(format!("{}.deck", id)), text).unwrap();
        sims.push(id);
    }
    DedupPlan {
        sims,
        modified: (1..=20).collect(),
        distinct_variants: 30 + 10 * 2 + 10 * 3,
        total_instances: n_sims * n_parts as usize,
    }
}

/// Planted truth of the mining fleet.
pub struct MiningPlan {
    pub sims: Vec<String>,
    /// Planted class per simulation, driven by the geometry plan.
    pub classes: Vec<&'static str>,
    /// The part whose existence determines `poor`.
    pub existence_part: u64,
    /// The part whose thickness threshold separates `good` from `medium`.
    pub threshold_part: u64,
    pub results_csv: String,
}

/// 12 simulations with a planted class structure:
///
/// - part 300 is absent from sims 0..4 (class `poor`) and present with
///   two content variants elsewhere, orthogonal to the class;
/// - part 310 is thin in the `good` sims and thick in the `medium` sims
///   (mixed within `poor`);
/// - parts 200/210/220 vary with patterns independent of the class;
/// - parts 100..=105 never change.
///
/// Intrusions band by class (good ~20 mm, medium ~50, poor ~90) with
/// deterministic jitter.
pub fn write_mining_fleet(dir: &Path) -> MiningPlan {
    let classes: [&'static str; 12] = [
        "poor", "poor", "poor", "poor", // 0..4: part 300 absent
        "good", "good", "medium", "medium", // 4..8
        "good", "good", "medium", "medium", // 8..12
    ];
    let mut sims = Vec::new();
    for (sim, class) in classes.iter().enumerate() {
        let mut text = String::new();
        // Constant background parts.
        for p in [100u64, 101, 102, 103, 104, 105] {
            push_part(
                &mut text,
                p,
                part_origin(p),
                0.8 + 0.2 * (p % 5) as f64,
                1.5,
            );
        }
        // Noise parts: variant patterns independent of the class. Variant
        // deltas stay small against the between-part spread so variants
        // cluster with their part.
        for (p, variants) in [(200u64, 2usize), (210, 3), (220, 2)] {
            let v = (sim + p as usize) % variants;
            push_part(
                &mut text,
                p,
                part_origin(p),
                0.8 + 0.15 * (p % 9) as f64,
                1.0 + 0.06 * v as f64,
            );
        }
        // Existence part 300: absent when poor; two variants otherwise.
        if *class != "poor" {
            let v = if sim < 8 { 0 } else { 1 };
            push_part(
                &mut text,
                300,
                part_origin(300),
                1.4,
                2.0 * (1.0 + 0.06 * v as f64),
            );
        }
        // Threshold part 310: thin for good, thick for medium, mixed for
        // poor.
        let thick = match *class {
            "good" => 1.0,
            "medium" => 1.12,
            _ => {
                if sim % 2 == 0 {
                    1.0
                } else {
                    1.12
                }
            }
        };
        push_part(&mut text, 310, part_origin(310), 1.1, thick);

        let id = format!("sim{:02}", sim);
        std::fs::write(dir.join(format!("{}.deck", id)), text).unwrap();
        sims.push(id);
    }

    let mut csv = String::from("simulation_id,intrusion_1,intrusion_2,intrusion_3,intrusion_4\n");
    for (sim, class) in classes.iter().enumerate() {
        let base = match *class {
            "good" => 20.0,
            "medium" => 50.0,
            _ => 90.0,
        };
        let mut values = Vec::new();
        for col in 0..4 {
            let jitter = 0.2 * ((sim * 7 + col * 3) % 11) as f64 - 1.0;
            values.push(format!("{}", base + col as f64 + jitter));
        }
        writeln!(csv, "sim{:02},{}", sim, values.join(",")).unwrap();
    }

    MiningPlan {
        sims,
        classes: classes.to_vec(),
        existence_part: 300,
        threshold_part: 310,
        results_csv: csv,
    }
}

fn part_origin(p: u64) -> [f64; 3] {
    [
        10.0 * (p % 7) as f64,
        10.0 * ((p / 7) % 7) as f64,
        2.0 * (p % 3) as f64,
    ]
}

/// One 2x2 quad grid part.
fn push_part(text: &mut String, p: u64, origin: [f64; 3], size: f64, thickness: f64) {
    let node = |i: u64, j: u64| p * 100 + i * 3 + j + 1;
    for i in 0..3u64 {
        for j in 0..3u64 {
            writeln!(
                text,
                "NODE {} {} {} {}",
                node(i, j),
                origin[0] + size * j as f64,
                origin[1] + size * i as f64,
                origin[2]
            )
            .unwrap();
        }
    }
    let mut elem = p * 10;
    for i in 0..2u64 {
        for j in 0..2u64 {
            elem += 1;
            writeln!(
                text,
                "SHELL {} {} {} {} {} {}",
                elem,
                p,
                node(i, j),
                node(i, j + 1),
                node(i + 1, j + 1),
                node(i + 1, j)
            )
            .unwrap();
        }
    }
    writeln!(text, "MATER {} {} 7.8e-9", p, thickness).unwrap();
}

/// Parses a fleet deck back (used by tests that need the meshes rather
/// than the files).
pub fn parse_fleet_deck(dir: &Path, sim: &str) -> InputDeck {
    let text = std::fs::read_to_string(dir.join(format!("{}.deck", sim))).unwrap();
    parse_deck_str(&text, &format!("model-{}", sim)).unwrap().deck
}
