//! Exact conversion of a ReLU network into a multivariate rule set.
//!
//! Every activation pattern `S = {S¹ … S^K}` is a leaf of a complete binary tree
//! over the hidden units. For a pattern, the network restricted to its active
//! units is affine, so the leaf becomes one rule: a sign constraint per hidden
//! unit plus the composed affine map from inputs to logits. Patterns whose
//! constraints contradict each other are removed.
//!
//! The default enumeration is a depth-first walk in canonical order that checks
//! feasibility after every added constraint and skips infeasible subtrees.

use alloc::vec;
use alloc::vec::Vec;

use crate::feasibility::{check_feasible, ConstraintSystem};
use crate::linalg::Matrix;
use crate::model::{ActivationPattern, Layer, Mlp};
use crate::rules::{AffineConsequence, Consequence, LinearConstraint, Op, Rule, RuleSet, RuleSetKind};
use crate::{Error, Result};

pub const DEFAULT_CAPACITY_BITS: u32 = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct EcdtOptions {
    /// Remove rules whose constraint system is infeasible.
    pub prune: bool,
    /// Largest `Σ J_k` accepted for global enumeration.
    pub capacity_bits: u32,
    /// Build the full tree first and filter its leaves afterwards.
    pub materialize_tree: bool,
}

impl Default for EcdtOptions {
    fn default() -> Self {
        EcdtOptions {
            prune: true,
            capacity_bits: DEFAULT_CAPACITY_BITS,
            materialize_tree: false,
        }
    }
}

/// Counters collected during enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EcdtStats {
    pub nodes_visited: u64,
    pub lps_solved: u64,
    pub lps_infeasible: u64,
    pub lp_failures: u64,
    pub witness_reused: u64,
    pub leaves: u64,
}

impl EcdtStats {
    pub fn merge(&mut self, other: &EcdtStats) {
        self.nodes_visited += other.nodes_visited;
        self.lps_solved += other.lps_solved;
        self.lps_infeasible += other.lps_infeasible;
        self.lp_failures += other.lp_failures;
        self.witness_reused += other.witness_reused;
        self.leaves += other.leaves;
    }
}

pub fn check_capacity(total_bits: usize, capacity_bits: u32) -> Result<()> {
    if total_bits > capacity_bits as usize || total_bits > 63 {
        return Err(Error::Capacity {
            bits: total_bits,
            cap: capacity_bits,
        });
    }
    Ok(())
}

/// One node of the materialized tree.
///
/// A non-root node records the branch taken on hidden unit
/// `(hidden_layer, hidden_node)` (0-based); the root carries the first unit.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdtNode {
    pub id: usize,
    pub hidden_layer: usize,
    pub hidden_node: usize,
    pub parent: Option<usize>,
    pub branch: Option<bool>,
    pub leaf: bool,
    pub value: Option<ActivationPattern>,
    pub children: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcdtTree {
    pub sizes: Vec<usize>,
    pub nodes: Vec<EcdtNode>,
}

impl EcdtTree {
    pub fn leaves(&self) -> impl Iterator<Item = &EcdtNode> + '_ {
        self.nodes.iter().filter(|n| n.leaf)
    }

    pub fn depth(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// Builds the complete activation tree level by level: each parent receives a
/// "true" (active) child and then a "false" child for the next hidden unit.
pub fn build_ecdt(sizes: &[usize], capacity_bits: u32) -> Result<EcdtTree> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidArgument("every hidden layer needs at least one node".into()));
    }
    let total: usize = sizes.iter().sum();
    check_capacity(total, capacity_bits)?;
    let units: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &j)| (0..j).map(move |s| (k, s)))
        .collect();

    let mut nodes = Vec::with_capacity((1usize << (total + 1)) - 1);
    nodes.push(EcdtNode {
        id: 0,
        hidden_layer: 0,
        hidden_node: 0,
        parent: None,
        branch: None,
        leaf: false,
        value: None,
        children: None,
    });
    let mut parents = vec![0usize];
    for (depth, &(k, s)) in units.iter().enumerate() {
        let is_leaf = depth + 1 == total;
        let mut next = Vec::with_capacity(parents.len() * 2);
        for &p in &parents {
            let mut kids = [0usize; 2];
            for (slot, branch) in [true, false].into_iter().enumerate() {
                let id = nodes.len();
                nodes.push(EcdtNode {
                    id,
                    hidden_layer: k,
                    hidden_node: s,
                    parent: Some(p),
                    branch: Some(branch),
                    leaf: is_leaf,
                    value: None,
                    children: None,
                });
                kids[slot] = id;
                next.push(id);
            }
            nodes[p].children = Some(kids);
        }
        parents = next;
    }
    // Trace every leaf back to the root to recover its branch list.
    for &leaf in &parents {
        let mut bits = Vec::with_capacity(total);
        let mut cur = leaf;
        while let Some(p) = nodes[cur].parent {
            bits.push(nodes[cur].branch.expect("non-root nodes have a branch"));
            cur = p;
        }
        bits.reverse();
        nodes[leaf].value = Some(ActivationPattern::from_bits(sizes, &bits)?);
    }
    Ok(EcdtTree {
        sizes: sizes.to_vec(),
        nodes,
    })
}

/// Composes `(W^{Ik}, B^{Ik})` with the next layer, zeroing the rows of that
/// layer's weights that belong to inactive units of layer `k`.
pub(crate) fn compose(
    w: &Matrix,
    b: &[f64],
    active: &[bool],
    next: &Layer,
) -> (Matrix, Vec<f64>) {
    let mut masked = next.weights.clone();
    for (s, &on) in active.iter().enumerate() {
        if !on {
            masked.row_mut(s).iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let w_next = w.matmul(&masked);
    let mut b_next = masked.vecmul(b);
    for (v, nb) in b_next.iter_mut().zip(&next.biases) {
        *v += nb;
    }
    (w_next, b_next)
}

pub(crate) fn unit_constraint(w: &Matrix, b: &[f64], s: usize, active: bool) -> LinearConstraint {
    LinearConstraint::from_affine(w.column(s), b[s], active)
}

/// Layer after hidden layer `k`: hidden layer `k+1` or the output layer.
pub(crate) fn next_layer(model: &Mlp, k: usize) -> &Layer {
    model
        .hidden_layers()
        .get(k + 1)
        .unwrap_or_else(|| model.output_layer())
}

/// First-layer affine map `(W^{I1}, B^{I1})`.
pub(crate) fn first_map(model: &Mlp) -> (Matrix, Vec<f64>) {
    let l = &model.hidden_layers()[0];
    (l.weights.clone(), l.biases.clone())
}

/// Rule for one leaf: a constraint per hidden unit and the composed affine
/// consequence `Y = X·W^{IY} + B^{IY}`.
pub fn extract_rule_for_leaf(model: &Mlp, pattern: &ActivationPattern) -> Result<Rule> {
    let sizes = model.hidden_sizes();
    if !pattern.matches(&sizes) {
        return Err(Error::shape("activation pattern", model.total_hidden(), pattern.len()));
    }
    let (mut w, mut b) = first_map(model);
    let mut constraints = Vec::with_capacity(model.total_hidden());
    for (k, bits) in pattern.per_layer.iter().enumerate() {
        for (s, &on) in bits.iter().enumerate() {
            constraints.push(unit_constraint(&w, &b, s, on));
        }
        (w, b) = compose(&w, &b, bits, next_layer(model, k));
    }
    Ok(Rule {
        id: pattern.code(),
        constraints,
        consequence: Consequence::Affine(AffineConsequence {
            weights: w,
            bias: b,
            decision: model.decision(),
        }),
        pattern: Some(pattern.clone()),
    })
}

/// The rule for the region containing `x`, without enumerating other leaves.
pub fn local_explain(model: &Mlp, x: &[f64]) -> Result<Rule> {
    let pattern = model.activation_pattern(x)?;
    extract_rule_for_leaf(model, &pattern)
}

/// Incremental feasibility state shared by EC-DT and C-Net prefix enumeration.
pub(crate) struct Pruner {
    pub dim: usize,
    pub enabled: bool,
    pub stats: EcdtStats,
}

impl Pruner {
    /// Decides whether `constraints` (the last one just added) is feasible.
    /// `parent` is a witness of the system without the last constraint.
    /// LP failures count as feasible.
    pub fn check(
        &mut self,
        constraints: &[LinearConstraint],
        parent: Option<&[f64]>,
    ) -> (bool, Option<Vec<f64>>) {
        self.stats.nodes_visited += 1;
        if !self.enabled {
            return (true, None);
        }
        let sys = ConstraintSystem::new(self.dim, constraints.to_vec());
        let eps = sys.default_epsilon();
        if let (Some(w), Some(last)) = (parent, constraints.last()) {
            let lhs = last.lhs(w);
            let ok = match last.op {
                Op::Le => lhs <= last.rhs,
                Op::Gt => lhs >= last.rhs + eps * last.norm_inf() && lhs > last.rhs,
            };
            if ok {
                self.stats.witness_reused += 1;
                return (true, Some(w.to_vec()));
            }
        }
        self.stats.lps_solved += 1;
        match check_feasible(&sys, eps) {
            Ok(r) if r.feasible => (true, r.witness),
            Ok(_) => {
                self.stats.lps_infeasible += 1;
                (false, None)
            }
            Err(_) => {
                self.stats.lp_failures += 1;
                (true, None)
            }
        }
    }

    /// Feasibility of a complete system, no witness reuse.
    pub fn check_full(&mut self, constraints: &[LinearConstraint]) -> bool {
        if !self.enabled {
            return true;
        }
        self.stats.lps_solved += 1;
        let sys = ConstraintSystem::new(self.dim, constraints.to_vec());
        match check_feasible(&sys, sys.default_epsilon()) {
            Ok(r) => {
                if !r.feasible {
                    self.stats.lps_infeasible += 1;
                }
                r.feasible
            }
            Err(_) => {
                self.stats.lp_failures += 1;
                true
            }
        }
    }
}

/// Depth-first walk over activation patterns in canonical (ascending code) order.
pub(crate) struct PatternWalk<'a> {
    model: &'a Mlp,
    /// Layers whose units are enumerated (all hidden layers for EC-DT, the
    /// first `K−1` for C-Net prefixes).
    depth_layers: usize,
    forced: &'a [bool],
    pub pruner: Pruner,
    constraints: Vec<LinearConstraint>,
    bits: Vec<bool>,
}

/// A feasible completed walk: pattern bits, their constraints, the composed map
/// after the last enumerated layer, and a witness when one is known.
pub(crate) struct WalkLeaf<'b> {
    pub bits: &'b [bool],
    pub constraints: &'b [LinearConstraint],
    pub map: &'b (Matrix, Vec<f64>),
    pub witness: Option<&'b [f64]>,
}

impl<'a> PatternWalk<'a> {
    pub fn new(model: &'a Mlp, depth_layers: usize, prune: bool, forced: &'a [bool]) -> Self {
        PatternWalk {
            model,
            depth_layers,
            forced,
            pruner: Pruner {
                dim: model.input_dim(),
                enabled: prune,
                stats: EcdtStats::default(),
            },
            constraints: Vec::new(),
            bits: Vec::new(),
        }
    }

    pub fn run(&mut self, visit: &mut dyn FnMut(WalkLeaf<'_>)) {
        let map = first_map(self.model);
        if self.depth_layers == 0 {
            self.pruner.stats.leaves += 1;
            visit(WalkLeaf {
                bits: &[],
                constraints: &[],
                map: &map,
                witness: None,
            });
            return;
        }
        self.step(0, 0, &map, None, visit);
    }

    fn step(
        &mut self,
        k: usize,
        s: usize,
        map: &(Matrix, Vec<f64>),
        witness: Option<&[f64]>,
        visit: &mut dyn FnMut(WalkLeaf<'_>),
    ) {
        let width = self.model.hidden_layers()[k].fan_out();
        let pos = self.bits.len();
        let choices: &[bool] = match self.forced.get(pos) {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[false, true],
        };
        for &bit in choices {
            self.constraints.push(unit_constraint(&map.0, &map.1, s, bit));
            self.bits.push(bit);
            let (feasible, w) = self.pruner.check(&self.constraints, witness);
            if feasible {
                if s + 1 < width {
                    self.step(k, s + 1, map, w.as_deref(), visit);
                } else {
                    let start = self.bits.len() - width;
                    let layer_bits = self.bits[start..].to_vec();
                    let next = compose(&map.0, &map.1, &layer_bits, next_layer(self.model, k));
                    if k + 1 < self.depth_layers {
                        self.step(k + 1, 0, &next, w.as_deref(), visit);
                    } else {
                        self.pruner.stats.leaves += 1;
                        visit(WalkLeaf {
                            bits: &self.bits,
                            constraints: &self.constraints,
                            map: &next,
                            witness: w.as_deref(),
                        });
                    }
                }
            }
            self.bits.pop();
            self.constraints.pop();
        }
    }
}

fn ruleset_from_rules(model: &Mlp, rules: Vec<Rule>) -> Result<RuleSet> {
    RuleSet::new(
        RuleSetKind::Ecdt,
        model.input_dim(),
        model.label_count(),
        0,
        rules,
    )
}

/// Rules for every leaf below a fixed bit prefix, in canonical order.
/// Lets callers split enumeration across threads by prefix.
pub fn extract_prefix(
    model: &Mlp,
    opts: &EcdtOptions,
    prefix: &[bool],
) -> Result<(Vec<Rule>, EcdtStats)> {
    let sizes = model.hidden_sizes();
    check_capacity(model.total_hidden(), opts.capacity_bits)?;
    if prefix.len() > model.total_hidden() {
        return Err(Error::shape("pattern prefix", model.total_hidden(), prefix.len()));
    }
    let decision = model.decision();
    let mut rules = Vec::new();
    let mut failure = None;
    let mut walk = PatternWalk::new(model, sizes.len(), opts.prune, prefix);
    walk.run(&mut |leaf| match ActivationPattern::from_bits(&sizes, leaf.bits) {
        Ok(pattern) => rules.push(Rule {
            id: pattern.code(),
            constraints: leaf.constraints.to_vec(),
            consequence: Consequence::Affine(AffineConsequence {
                weights: leaf.map.0.clone(),
                bias: leaf.map.1.clone(),
                decision,
            }),
            pattern: Some(pattern),
        }),
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((rules, walk.pruner.stats))
}

/// Assembles rules gathered from disjoint prefixes into a canonical rule set.
pub fn assemble_ruleset(model: &Mlp, mut rules: Vec<Rule>) -> Result<RuleSet> {
    rules.sort_by_key(|r| r.id);
    ruleset_from_rules(model, rules)
}

pub fn extract_ruleset(model: &Mlp, opts: &EcdtOptions) -> Result<RuleSet> {
    Ok(extract_ruleset_with_stats(model, opts)?.0)
}

pub fn extract_ruleset_with_stats(model: &Mlp, opts: &EcdtOptions) -> Result<(RuleSet, EcdtStats)> {
    if opts.materialize_tree {
        return extract_from_tree(model, opts);
    }
    let (rules, stats) = extract_prefix(model, opts, &[])?;
    Ok((ruleset_from_rules(model, rules)?, stats))
}

/// Builds the full tree, extracts every leaf, then filters infeasible rules.
fn extract_from_tree(model: &Mlp, opts: &EcdtOptions) -> Result<(RuleSet, EcdtStats)> {
    let tree = build_ecdt(&model.hidden_sizes(), opts.capacity_bits)?;
    let mut pruner = Pruner {
        dim: model.input_dim(),
        enabled: opts.prune,
        stats: EcdtStats::default(),
    };
    let mut rules = Vec::new();
    for leaf in tree.leaves() {
        let pattern = leaf.value.as_ref().expect("leaves carry their pattern");
        let rule = extract_rule_for_leaf(model, pattern)?;
        pruner.stats.leaves += 1;
        if pruner.check_full(&rule.constraints) {
            rules.push(rule);
        }
    }
    let rs = assemble_ruleset(model, rules)?;
    Ok((rs, pruner.stats))
}

/// Enumerate every pattern, extract its rule, then filter. Reference path for
/// checking the branch-and-bound walk.
pub fn extract_ruleset_naive(model: &Mlp, prune: bool, capacity_bits: u32) -> Result<RuleSet> {
    let total = model.total_hidden();
    check_capacity(total, capacity_bits)?;
    let sizes = model.hidden_sizes();
    let mut pruner = Pruner {
        dim: model.input_dim(),
        enabled: prune,
        stats: EcdtStats::default(),
    };
    let mut rules = Vec::new();
    for code in 0..(1u64 << total) {
        let pattern = ActivationPattern::from_code(&sizes, code)?;
        let rule = extract_rule_for_leaf(model, &pattern)?;
        if pruner.check_full(&rule.constraints) {
            rules.push(rule);
        }
    }
    ruleset_from_rules(model, rules)
}
