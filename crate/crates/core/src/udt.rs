//! C4.5-style univariate decision trees on continuous features.
//!
//! Splits are binary threshold tests `x_f ≤ t` (left) / `x_f > t` (right) with
//! `t` the midpoint between consecutive distinct values. For each feature the
//! threshold with the largest information gain is kept; among features whose
//! gain is at least the mean gain, the one with the highest gain ratio wins.
//! Pruning replaces a subtree by a leaf when the leaf's pessimistic error
//! estimate does not exceed the subtree's.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::majority;
use crate::linalg::Matrix;
use crate::rules::{Consequence, LinearConstraint, Op, Rule, RuleSet, RuleSetKind};
use crate::{Classifier, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UdtParams {
    pub min_leaf: usize,
    pub confidence_factor: f64,
    pub max_depth: Option<usize>,
}

impl Default for UdtParams {
    fn default() -> Self {
        UdtParams {
            min_leaf: 2,
            confidence_factor: 0.25,
            max_depth: None,
        }
    }
}

impl UdtParams {
    fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidArgument("min_leaf must be ≥ 1".into()));
        }
        if !(self.confidence_factor > 0.0 && self.confidence_factor < 1.0) {
            return Err(Error::InvalidArgument("confidence factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub gain_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdtNode {
    pub split: Option<Split>,
    /// `[left (≤), right (>)]`.
    pub children: Option<[usize; 2]>,
    pub leaf_label: Option<usize>,
    pub class_counts: Vec<usize>,
    /// Pessimistic error estimate of this node treated as a leaf.
    pub error_estimate: f64,
}

impl UdtNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn n(&self) -> usize {
        self.class_counts.iter().sum()
    }

    pub fn majority(&self) -> usize {
        majority(&self.class_counts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdtTree {
    nodes: Vec<UdtNode>,
    dim: usize,
    class_count: usize,
    confidence_factor: f64,
}

/// One root-to-leaf path: `(feature, op, threshold)` tests and the leaf label.
#[derive(Debug, Clone, PartialEq)]
pub struct UdtRule {
    pub path: Vec<(usize, Op, f64)>,
    pub label: usize,
}

impl UdtRule {
    pub fn fires(&self, x: &[f64]) -> bool {
        self.path.iter().all(|&(f, op, t)| match op {
            Op::Le => x[f] <= t,
            Op::Gt => x[f] > t,
        })
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum()
}

/// Upper confidence bound on a leaf's error count (Wilson score interval, the
/// normal approximation used by C4.5 pruning).
pub fn pessimistic_errors(errors: usize, n: usize, confidence_factor: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = inverse_normal_cdf(1.0 - confidence_factor);
    let nf = n as f64;
    let f = errors as f64 / nf;
    let z2 = z * z;
    let radicand = (f / nf - f * f / nf + z2 / (4.0 * nf * nf)).max(0.0);
    let upper = (f + z2 / (2.0 * nf) + z * libm::sqrt(radicand)) / (1.0 + z2 / nf);
    upper * nf
}

/// Acklam's rational approximation of the standard normal quantile.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

struct Builder<'a> {
    features: &'a Matrix,
    labels: &'a [usize],
    class_count: usize,
    params: UdtParams,
    nodes: Vec<UdtNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.class_count];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn leaf(&mut self, counts: Vec<usize>) -> usize {
        let n: usize = counts.iter().sum();
        let label = majority(&counts);
        let errors = n - counts[label];
        let id = self.nodes.len();
        self.nodes.push(UdtNode {
            split: None,
            children: None,
            leaf_label: Some(label),
            error_estimate: pessimistic_errors(errors, n, self.params.confidence_factor),
            class_counts: counts,
        });
        id
    }

    /// Best threshold for one feature by information gain; ties keep the smaller threshold.
    fn best_threshold(&self, idx: &[usize], feature: usize, parent_h: f64) -> Option<Split> {
        let n = idx.len();
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| {
            self.features[(a, feature)]
                .total_cmp(&self.features[(b, feature)])
                .then(a.cmp(&b))
        });
        let mut left = vec![0usize; self.class_count];
        let mut right = self.counts(idx);
        let mut best: Option<Split> = None;
        for pos in 0..n - 1 {
            let i = order[pos];
            left[self.labels[i]] += 1;
            right[self.labels[i]] -= 1;
            let a = self.features[(i, feature)];
            let b = self.features[(order[pos + 1], feature)];
            if a == b {
                continue;
            }
            let nl = pos + 1;
            let nr = n - nl;
            if nl < self.params.min_leaf || nr < self.params.min_leaf {
                continue;
            }
            let (pl, pr) = (nl as f64 / n as f64, nr as f64 / n as f64);
            let gain = parent_h - pl * entropy(&left, nl) - pr * entropy(&right, nr);
            if gain <= 1e-12 {
                continue;
            }
            let split_info = -pl * libm::log2(pl) - pr * libm::log2(pr);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            if best.as_ref().map_or(true, |s| gain > s.gain + 1e-12) {
                best = Some(Split {
                    feature,
                    threshold,
                    gain,
                    gain_ratio: gain / split_info,
                });
            }
        }
        best
    }

    fn choose_split(&self, idx: &[usize], parent_h: f64) -> Option<Split> {
        let candidates: Vec<Split> = (0..self.features.cols())
            .filter_map(|f| self.best_threshold(idx, f, parent_h))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let mean_gain = candidates.iter().map(|s| s.gain).sum::<f64>() / candidates.len() as f64;
        let mut best: Option<Split> = None;
        for s in candidates {
            if s.gain + 1e-12 < mean_gain {
                continue;
            }
            if best.as_ref().map_or(true, |b| s.gain_ratio > b.gain_ratio + 1e-12) {
                best = Some(s);
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || n < 2 * self.params.min_leaf {
            return self.leaf(counts);
        }
        let parent_h = entropy(&counts, n);
        let Some(split) = self.choose_split(idx, parent_h) else {
            return self.leaf(counts);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.features[(i, split.feature)] <= split.threshold);
        let id = self.leaf(counts);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        let node = &mut self.nodes[id];
        node.split = Some(split);
        node.children = Some([left, right]);
        node.leaf_label = None;
        id
    }
}

/// Fits a tree on `features` (rows = samples) and labels in `[0, class_count)`.
pub fn fit_udt(
    features: &Matrix,
    labels: &[usize],
    class_count: usize,
    params: UdtParams,
) -> Result<UdtTree> {
    params.validate()?;
    if features.cols() == 0 {
        return Err(Error::InvalidArgument("cannot fit a tree on zero feature columns".into()));
    }
    if features.rows() == 0 {
        return Err(Error::InvalidArgument("cannot fit a tree on zero rows".into()));
    }
    if labels.len() != features.rows() {
        return Err(Error::shape("tree labels", features.rows(), labels.len()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("tree features"));
    }
    let class_count = class_count.max(labels.iter().copied().max().unwrap_or(0) + 1);
    let mut b = Builder {
        features,
        labels,
        class_count,
        params,
        nodes: Vec::new(),
    };
    let idx: Vec<usize> = (0..features.rows()).collect();
    b.grow(&idx, 0);
    Ok(UdtTree {
        nodes: b.nodes,
        dim: features.cols(),
        class_count,
        confidence_factor: params.confidence_factor,
    })
}

/// Bottom-up subtree replacement using pessimistic error estimates.
pub fn prune_pessimistic(tree: &UdtTree, confidence_factor: f64) -> UdtTree {
    let mut out = UdtTree {
        nodes: Vec::with_capacity(tree.nodes.len()),
        dim: tree.dim,
        class_count: tree.class_count,
        confidence_factor,
    };
    prune_node(tree, 0, confidence_factor, &mut out);
    out
}

/// Copies node `id` into `out` (pruned); returns `(new id, subtree error estimate)`.
fn prune_node(tree: &UdtTree, id: usize, cf: f64, out: &mut UdtTree) -> (usize, f64) {
    let node = &tree.nodes[id];
    let n = node.n();
    let label = node.majority();
    let as_leaf = pessimistic_errors(n - node.class_counts[label], n, cf);
    let new_id = out.nodes.len();
    out.nodes.push(UdtNode {
        split: None,
        children: None,
        leaf_label: Some(label),
        class_counts: node.class_counts.clone(),
        error_estimate: as_leaf,
    });
    let Some([l, r]) = node.children else {
        return (new_id, as_leaf);
    };
    let (nl, el) = prune_node(tree, l, cf, out);
    let (nr, er) = prune_node(tree, r, cf, out);
    let subtree = el + er;
    let same_label_leaves = out.nodes[nl].is_leaf()
        && out.nodes[nr].is_leaf()
        && out.nodes[nl].leaf_label == out.nodes[nr].leaf_label;
    if as_leaf <= subtree + 1e-12 || same_label_leaves {
        out.nodes.truncate(new_id + 1);
        (new_id, as_leaf)
    } else {
        let n = &mut out.nodes[new_id];
        n.split = node.split.clone();
        n.children = Some([nl, nr]);
        n.leaf_label = None;
        (new_id, subtree)
    }
}

impl UdtTree {
    pub fn nodes(&self) -> &[UdtNode] {
        &self.nodes
    }

    pub fn root(&self) -> &UdtNode {
        &self.nodes[0]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn confidence_factor(&self) -> f64 {
        self.confidence_factor
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &UdtTree, id: usize) -> usize {
            match t.nodes[id].children {
                None => 0,
                Some([l, r]) => 1 + walk(t, l).max(walk(t, r)),
            }
        }
        walk(self, 0)
    }

    /// Index of the leaf reached by `x`; ties at a threshold go left.
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::shape("tree input", self.dim, x.len()));
        }
        let mut id = 0;
        while let (Some(s), Some([l, r])) = (&self.nodes[id].split, self.nodes[id].children) {
            id = if x[s.feature] <= s.threshold { l } else { r };
        }
        Ok(id)
    }

    /// Estimated errors of each subtree root, for monotonicity checks.
    pub fn subtree_estimate(&self, id: usize) -> f64 {
        match self.nodes[id].children {
            None => self.nodes[id].error_estimate,
            Some([l, r]) => self.subtree_estimate(l) + self.subtree_estimate(r),
        }
    }

    /// Training errors of the whole tree (counts at leaves).
    pub fn training_errors(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.n() - n.class_counts[n.leaf_label.unwrap_or(0)])
            .sum()
    }
}

pub fn predict_udt(tree: &UdtTree, x: &[f64]) -> Result<usize> {
    let leaf = tree.leaf_index(x)?;
    Ok(tree.nodes[leaf].leaf_label.expect("leaves carry a label"))
}

impl Classifier for UdtTree {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn classify_label(&self, x: &[f64]) -> Result<usize> {
        predict_udt(self, x)
    }
}

/// One rule per leaf, left subtrees first.
pub fn udt_rules(tree: &UdtTree) -> Vec<UdtRule> {
    udt_rules_with_leaves(tree).into_iter().map(|(_, r)| r).collect()
}

/// Rules paired with the index of the leaf they describe.
pub fn udt_rules_with_leaves(tree: &UdtTree) -> Vec<(usize, UdtRule)> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    collect(tree, 0, &mut path, &mut out);
    out
}

fn collect(
    tree: &UdtTree,
    id: usize,
    path: &mut Vec<(usize, Op, f64)>,
    out: &mut Vec<(usize, UdtRule)>,
) {
    let node = &tree.nodes[id];
    match (&node.split, node.children) {
        (Some(s), Some([l, r])) => {
            path.push((s.feature, Op::Le, s.threshold));
            collect(tree, l, path, out);
            path.pop();
            path.push((s.feature, Op::Gt, s.threshold));
            collect(tree, r, path, out);
            path.pop();
        }
        _ => out.push((
            id,
            UdtRule {
                path: path.clone(),
                label: node.leaf_label.expect("leaves carry a label"),
            },
        )),
    }
}

/// Exports the tree as a `Udt` rule set over its own feature space.
pub fn udt_ruleset(tree: &UdtTree, default_class: usize) -> Result<RuleSet> {
    let rules = udt_rules(tree)
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut constraints: Vec<LinearConstraint> = r
                .path
                .iter()
                .map(|&(f, op, t)| LinearConstraint::univariate(tree.dim, f, op, t))
                .collect();
            if constraints.is_empty() {
                constraints.push(LinearConstraint::always_true(tree.dim));
            }
            Rule {
                id: i as u64,
                constraints,
                consequence: Consequence::Label(r.label),
                pattern: None,
            }
        })
        .collect();
    RuleSet::new(RuleSetKind::Udt, tree.dim, tree.class_count, default_class, rules)
}
