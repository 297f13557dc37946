//! Gain-ratio decision tree with pessimistic-error pruning.
//!
//! Top-down induction over the table's numeric part attributes: candidate
//! thresholds are midpoints between consecutive distinct sorted values, the
//! split with the best gain ratio among candidates with positive
//! information gain wins, and growth stops on purity, lack of gain, or a
//! child below the minimum instance count. Post-pruning replaces a subtree
//! with a leaf when the leaf's pessimistic error estimate (upper confidence
//! bound of the binomial training error at the given confidence) does not
//! exceed the subtree's. Subtrees are only replaced, never raised.

use std::collections::BTreeMap;

use super::{MiningError, MiningTable};

/// One tree node: a binary threshold test or a classified leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: String,
        /// Training instances reaching the leaf.
        n: usize,
        /// Misclassified training instances among them.
        errors: usize,
    },
    Split {
        attribute: String,
        /// Index into the table's attribute columns.
        attr_index: usize,
        threshold: f64,
        /// Rows with value <= threshold.
        left: Box<TreeNode>,
        /// Rows with value > threshold.
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Total misclassified training instances in the subtree's leaves.
    pub fn training_errors(&self) -> usize {
        match self {
            TreeNode::Leaf { errors, .. } => *errors,
            TreeNode::Split { left, right, .. } => {
                left.training_errors() + right.training_errors()
            }
        }
    }
}

/// A trained tree plus its pruning record.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub confidence: f64,
    pub min_instances: usize,
    /// Subtree-replacement operations performed by pruning.
    pub pruned_subtrees: usize,
    /// Node count before pruning.
    pub unpruned_node_count: usize,
    /// Training errors before pruning.
    pub unpruned_training_errors: usize,
}

impl DecisionTree {
    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn training_errors(&self) -> usize {
        self.root.training_errors()
    }

    /// Classifies a row of the table the tree was trained on.
    pub fn classify_row(&self, table: &MiningTable, row: usize) -> Result<&str, MiningError> {
        self.classify_values(&|name| table.attribute(name).map(|a| a.values[row]))
    }

    /// Classifies named attribute values.
    pub fn classify(&self, values: &BTreeMap<String, f64>) -> Result<&str, MiningError> {
        self.classify_values(&|name| values.get(name).copied())
    }

    fn classify_values(
        &self,
        lookup: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<&str, MiningError> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return Ok(label),
                TreeNode::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let value = lookup(attribute).ok_or_else(|| {
                        MiningError::MissingAttribute {
                            name: attribute.clone(),
                        }
                    })?;
                    node = if value <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Indented text rendering: one branch per line, leaves appended as
    /// `: class (n/e)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.root {
            TreeNode::Leaf { label, n, errors } => {
                out.push_str(&format!("{} ({}/{})\n", label, n, errors));
            }
            split => render_text(split, 0, &mut out),
        }
        out
    }

    /// Graph description (DOT) for rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph decision_tree {\n  node [shape=box];\n");
        let mut next_id = 0usize;
        render_dot(&self.root, &mut next_id, &mut out);
        out.push_str("}\n");
        out
    }
}

fn render_text(node: &TreeNode, depth: usize, out: &mut String) {
    let TreeNode::Split {
        attribute,
        threshold,
        left,
        right,
        ..
    } = node
    else {
        return;
    };
    let indent = "  ".repeat(depth);
    for (branch, op) in [(left, "<="), (right, ">")] {
        match branch.as_ref() {
            TreeNode::Leaf { label, n, errors } => {
                out.push_str(&format!(
                    "{}{} {} {}: {} ({}/{})\n",
                    indent, attribute, op, threshold, label, n, errors
                ));
            }
            split => {
                out.push_str(&format!("{}{} {} {}\n", indent, attribute, op, threshold));
                render_text(split, depth + 1, out);
            }
        }
    }
}

fn render_dot(node: &TreeNode, next_id: &mut usize, out: &mut String) -> usize {
    let id = *next_id;
    *next_id += 1;
    match node {
        TreeNode::Leaf { label, n, errors } => {
            out.push_str(&format!(
                "  n{} [label=\"{} ({}/{})\" shape=ellipse];\n",
                id, label, n, errors
            ));
        }
        TreeNode::Split {
            attribute,
            threshold,
            left,
            right,
            ..
        } => {
            out.push_str(&format!("  n{} [label=\"{}\"];\n", id, attribute));
            let l = render_dot(left, next_id, out);
            out.push_str(&format!("  n{} -> n{} [label=\"<= {}\"];\n", id, l, threshold));
            let r = render_dot(right, next_id, out);
            out.push_str(&format!("  n{} -> n{} [label=\"> {}\"];\n", id, r, threshold));
        }
    }
    id
}

/// Induces and prunes a tree for the table's class column.
///
/// `confidence` is the pruning confidence factor (smaller prunes more) and
/// `min_instances` the minimum training instances per child. A constant
/// class or a table without usable attributes yields a single majority
/// leaf.
pub fn build_tree(
    table: &MiningTable,
    confidence: f64,
    min_instances: usize,
) -> Result<DecisionTree, MiningError> {
    let class = table.class.as_ref().ok_or(MiningError::NoClass)?;
    let n = table.n_rows();
    let required = 2 * min_instances.max(1);
    if n < required {
        return Err(MiningError::TooFewRows { required, rows: n });
    }
    let labels: Vec<&str> = class.label_order.iter().map(|s| s.as_str()).collect();
    let label_index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i))
        .collect();
    let row_class: Vec<usize> = class
        .labels
        .iter()
        .map(|l| label_index[l.as_str()])
        .collect();

    let grower = Grower {
        table,
        labels: &labels,
        row_class: &row_class,
        min_instances: min_instances.max(1),
    };
    let rows: Vec<usize> = (0..n).collect();
    let unpruned = grower.grow(&rows);
    let unpruned_node_count = unpruned.node_count();
    let unpruned_training_errors = unpruned.training_errors();

    let mut pruned_subtrees = 0usize;
    let root = prune(unpruned, confidence, &mut pruned_subtrees);

    Ok(DecisionTree {
        root,
        confidence,
        min_instances: min_instances.max(1),
        pruned_subtrees,
        unpruned_node_count,
        unpruned_training_errors,
    })
}

struct Grower<'a> {
    table: &'a MiningTable,
    labels: &'a [&'a str],
    row_class: &'a [usize],
    min_instances: usize,
}

impl Grower<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for &row in rows {
            counts[self.row_class[row]] += 1;
        }
        counts
    }

    fn leaf(&self, rows: &[usize]) -> TreeNode {
        let counts = self.class_counts(rows);
        let (best, &best_count) = counts
            .iter()
            .enumerate()
            .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
            .unwrap();
        TreeNode::Leaf {
            label: self.labels[best].to_string(),
            n: rows.len(),
            errors: rows.len() - best_count,
        }
    }

    fn grow(&self, rows: &[usize]) -> TreeNode {
        let counts = self.class_counts(rows);
        if counts.iter().filter(|&&c| c > 0).count() <= 1 {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return self.leaf(rows);
        };
        let (attr_index, threshold) = split;
        let attr = &self.table.attributes[attr_index];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| attr.values[row] <= threshold);
        TreeNode::Split {
            attribute: attr.name.clone(),
            attr_index,
            threshold,
            left: Box::new(self.grow(&left_rows)),
            right: Box::new(self.grow(&right_rows)),
        }
    }

    /// The admissible split with the highest gain ratio, or None.
    ///
    /// Candidates are midpoints between consecutive distinct values; a
    /// candidate is admissible when both children hold at least the
    /// minimum instances and the information gain is positive. Ties keep
    /// the earliest attribute and smallest threshold.
    fn best_split(&self, rows: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        const GAIN_EPS: f64 = 1e-12;
        let n = rows.len() as f64;
        let node_entropy = entropy(counts, n);
        let mut best: Option<(usize, f64)> = None;
        let mut best_ratio = f64::NEG_INFINITY;

        for (attr_index, attr) in self.table.attributes.iter().enumerate() {
            // Rows sorted by attribute value; class counts then sweep
            // left-to-right across candidate thresholds.
            let mut order: Vec<usize> = rows.to_vec();
            order.sort_by(|&a, &b| attr.values[a].total_cmp(&attr.values[b]));
            let mut left_counts = vec![0usize; self.labels.len()];
            let mut left_n = 0usize;
            for i in 0..order.len() - 1 {
                let row = order[i];
                left_counts[self.row_class[row]] += 1;
                left_n += 1;
                let v = attr.values[row];
                let v_next = attr.values[order[i + 1]];
                if v == v_next {
                    continue;
                }
                let right_n = rows.len() - left_n;
                if left_n < self.min_instances || right_n < self.min_instances {
                    continue;
                }
                let right_counts: Vec<usize> = counts
                    .iter()
                    .zip(&left_counts)
                    .map(|(t, l)| t - l)
                    .collect();
                let gain = node_entropy
                    - (left_n as f64 / n) * entropy(&left_counts, left_n as f64)
                    - (right_n as f64 / n) * entropy(&right_counts, right_n as f64);
                if gain <= GAIN_EPS {
                    continue;
                }
                let split_info = entropy(&[left_n, right_n], n);
                let ratio = gain / split_info;
                if ratio > best_ratio {
                    best_ratio = ratio;
                    best = Some((attr_index, (v + v_next) / 2.0));
                }
            }
        }
        best
    }
}

fn entropy(counts: &[usize], total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Bottom-up subtree replacement: a split collapses into its majority leaf
/// when the leaf's pessimistic error does not exceed the subtree's.
fn prune(node: TreeNode, confidence: f64, replaced: &mut usize) -> TreeNode {
    let TreeNode::Split {
        attribute,
        attr_index,
        threshold,
        left,
        right,
    } = node
    else {
        return node;
    };
    let left = prune(*left, confidence, replaced);
    let right = prune(*right, confidence, replaced);

    // Class distribution of the whole subtree, reconstructed from leaves.
    let mut dist: BTreeMap<String, usize> = BTreeMap::new();
    collect_distribution(&left, &mut dist);
    collect_distribution(&right, &mut dist);
    let n: usize = dist.values().sum();
    let majority_count = dist.values().copied().max().unwrap_or(0);
    let majority = dist
        .iter()
        .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then(lb.cmp(la)))
        .map(|(l, _)| l.clone())
        .unwrap_or_default();
    let leaf_errors = n - majority_count;

    let subtree_estimate = estimated_errors(&left, confidence) + estimated_errors(&right, confidence);
    let leaf_estimate = leaf_errors as f64 + add_errs(n as f64, leaf_errors as f64, confidence);

    if leaf_estimate <= subtree_estimate {
        *replaced += 1;
        TreeNode::Leaf {
            label: majority,
            n,
            errors: leaf_errors,
        }
    } else {
        TreeNode::Split {
            attribute,
            attr_index,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Leaf-level class tallies. Leaves only record (n, errors, majority), so
/// the majority label gets n - errors and the errors are pooled under a
/// synthetic key per leaf; for pruning only totals and the majority count
/// matter, and those are exact.
fn collect_distribution(node: &TreeNode, dist: &mut BTreeMap<String, usize>) {
    match node {
        TreeNode::Leaf { label, n, errors } => {
            *dist.entry(label.clone()).or_insert(0) += n - errors;
            if *errors > 0 {
                *dist.entry(format!("\u{0}other:{}", label)).or_insert(0) += errors;
            }
        }
        TreeNode::Split { left, right, .. } => {
            collect_distribution(left, dist);
            collect_distribution(right, dist);
        }
    }
}

fn estimated_errors(node: &TreeNode, confidence: f64) -> f64 {
    match node {
        TreeNode::Leaf { n, errors, .. } => {
            *errors as f64 + add_errs(*n as f64, *errors as f64, confidence)
        }
        TreeNode::Split { left, right, .. } => {
            estimated_errors(left, confidence) + estimated_errors(right, confidence)
        }
    }
}

/// Additional pessimistic errors for a leaf with `n` instances and `e`
/// observed errors: the gap between `e` and the upper confidence bound of
/// the binomial error at confidence `cf`.
fn add_errs(n: f64, e: f64, cf: f64) -> f64 {
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (add_errs(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = normal_quantile(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n)
        + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

/// Inverse standard normal CDF (Acklam's rational approximation, absolute
/// error below 1.2e-9 over (0, 1)).
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}
