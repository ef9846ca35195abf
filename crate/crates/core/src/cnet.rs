//! Extended C-Net: a univariate tree on last-hidden-layer features whose
//! thresholds are back-projected into input space.
//!
//! Activation patterns of layers `1 … K−1` are enumerated as in EC-DT. For a
//! prefix pattern the network up to layer `K` is affine, `H^K_pre = X·W^{IK} + B^{IK}`,
//! so a tree test `H^K_j op C` becomes `(W^{IK} column j)·x op C − B^{IK}(j)`.
//! Thresholds are midpoints of non-negative ReLU outputs, hence positive, and
//! `max(0, z) op C ⇔ z op C` holds for them.

use alloc::vec::Vec;

use crate::data::{majority, Dataset};
use crate::ecdt::{check_capacity, compose, first_map, next_layer, unit_constraint, EcdtStats, PatternWalk, Pruner};
use crate::feasibility::ConstraintSystem;
use crate::linalg::Matrix;
use crate::model::{ActivationPattern, Mlp};
use crate::rules::{Consequence, LinearConstraint, Op, Rule, RuleSet, RuleSetKind};
use crate::udt::{fit_udt, prune_pessimistic, udt_rules, udt_ruleset, UdtParams, UdtTree};
use crate::{Error, Result};

/// One test of a tree path: `H^K_feature op threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UdtPathConstraint {
    pub feature: usize,
    pub op: Op,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnetOptions {
    pub udt: UdtParams,
    /// Pessimistic tree pruning and removal of infeasible rules.
    pub prune: bool,
    /// Fit the tree on dataset labels instead of the network's predictions.
    pub fit_on_ground_truth: bool,
    pub capacity_bits: u32,
}

impl Default for CnetOptions {
    fn default() -> Self {
        CnetOptions {
            udt: UdtParams::default(),
            prune: true,
            fit_on_ground_truth: false,
            capacity_bits: crate::ecdt::DEFAULT_CAPACITY_BITS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CnetExtraction {
    pub ruleset: RuleSet,
    /// The tree over `H^K` the rules were back-projected from.
    pub tree: UdtTree,
    pub stats: EcdtStats,
}

/// Row `i` is `H^K` for input row `i`.
pub fn hidden_features(model: &Mlp, inputs: &Matrix) -> Result<Matrix> {
    if inputs.cols() != model.input_dim() {
        return Err(Error::shape("feature matrix width", model.input_dim(), inputs.cols()));
    }
    let width = model.hidden_sizes().last().copied().unwrap_or(0);
    let mut out = Vec::with_capacity(inputs.rows() * width);
    for row in inputs.iter_rows() {
        out.extend(model.last_hidden(row)?);
    }
    Matrix::from_vec(inputs.rows(), width, out)
}

fn layer_count_check(model: &Mlp, prefix: &ActivationPattern) -> Result<()> {
    let sizes = model.hidden_sizes();
    let k = sizes.len();
    if !prefix.matches(&sizes[..k - 1]) {
        return Err(Error::shape(
            "prefix pattern",
            sizes[..k - 1].iter().sum(),
            prefix.len(),
        ));
    }
    Ok(())
}

fn path_constraint(map: &(Matrix, Vec<f64>), p: &UdtPathConstraint) -> LinearConstraint {
    LinearConstraint::new(map.0.column(p.feature), p.op, p.threshold - map.1[p.feature])
}

/// Rule for one (prefix pattern, tree leaf) pair: prefix sign constraints, then
/// one back-projected constraint per path test; the consequence is the leaf label.
pub fn back_project_leaf(
    model: &Mlp,
    prefix: &ActivationPattern,
    path: &[UdtPathConstraint],
    label: usize,
) -> Result<Rule> {
    layer_count_check(model, prefix)?;
    let last_width = *model.hidden_sizes().last().expect("K ≥ 1");
    if let Some(p) = path.iter().find(|p| p.feature >= last_width) {
        return Err(Error::shape("tree feature index", last_width, p.feature));
    }
    let mut map = first_map(model);
    let mut constraints = Vec::new();
    for (k, bits) in prefix.per_layer.iter().enumerate() {
        for (s, &on) in bits.iter().enumerate() {
            constraints.push(unit_constraint(&map.0, &map.1, s, on));
        }
        map = compose(&map.0, &map.1, bits, next_layer(model, k));
    }
    constraints.extend(path.iter().map(|p| path_constraint(&map, p)));
    if constraints.is_empty() {
        constraints.push(LinearConstraint::always_true(model.input_dim()));
    }
    Ok(Rule {
        id: 0,
        constraints,
        consequence: Consequence::Label(label),
        pattern: (!prefix.is_empty()).then(|| prefix.clone()),
    })
}

fn path_of(rule: &crate::udt::UdtRule) -> Vec<UdtPathConstraint> {
    rule.path
        .iter()
        .map(|&(feature, op, threshold)| UdtPathConstraint { feature, op, threshold })
        .collect()
}

/// Pedagogical baseline: a pruned univariate tree on the raw inputs, fit on
/// the network's predictions (or the dataset labels).
pub fn extract_udt_ruleset(model: &Mlp, train: &Dataset, opts: &CnetOptions) -> Result<(RuleSet, UdtTree)> {
    if train.dim() != model.input_dim() {
        return Err(Error::shape("training data width", model.input_dim(), train.dim()));
    }
    let labels: Vec<usize> = if opts.fit_on_ground_truth {
        train.labels().to_vec()
    } else {
        train
            .features()
            .iter_rows()
            .map(|r| model.predict(r))
            .collect::<Result<_>>()?
    };
    let class_count = model.label_count().max(train.class_count());
    let mut counts = alloc::vec![0usize; class_count];
    labels.iter().for_each(|&l| counts[l] += 1);
    let mut tree = fit_udt(train.features(), &labels, class_count, opts.udt)?;
    if opts.prune {
        tree = prune_pessimistic(&tree, opts.udt.confidence_factor);
    }
    let rs = udt_ruleset(&tree, majority(&counts))?;
    Ok((rs, tree))
}

/// Hidden features → tree → prefix enumeration → cross product of prefixes and
/// tree leaves, keeping feasible combinations.
pub fn extract_cnet_ruleset(model: &Mlp, train: &Dataset, opts: &CnetOptions) -> Result<CnetExtraction> {
    if train.dim() != model.input_dim() {
        return Err(Error::shape("training data width", model.input_dim(), train.dim()));
    }
    let sizes = model.hidden_sizes();
    let k = sizes.len();
    check_capacity(sizes[..k - 1].iter().sum(), opts.capacity_bits)?;

    let labels: Vec<usize> = if opts.fit_on_ground_truth {
        train.labels().to_vec()
    } else {
        train
            .features()
            .iter_rows()
            .map(|r| model.predict(r))
            .collect::<Result<_>>()?
    };
    let class_count = model.label_count().max(train.class_count());
    let mut counts = alloc::vec![0usize; class_count];
    labels.iter().for_each(|&l| counts[l] += 1);
    let default_class = majority(&counts);

    let h = hidden_features(model, train.features())?;
    let mut tree = fit_udt(&h, &labels, class_count, opts.udt)?;
    if opts.prune {
        tree = prune_pessimistic(&tree, opts.udt.confidence_factor);
    }
    let leaves: Vec<(Vec<UdtPathConstraint>, usize)> =
        udt_rules(&tree).iter().map(|r| (path_of(r), r.label)).collect();

    let dim = model.input_dim();
    let mut prefixes: Vec<(Vec<bool>, Vec<LinearConstraint>, (Matrix, Vec<f64>), Option<Vec<f64>>)> = Vec::new();
    let mut walk = PatternWalk::new(model, k - 1, opts.prune, &[]);
    walk.run(&mut |leaf| {
        prefixes.push((
            leaf.bits.to_vec(),
            leaf.constraints.to_vec(),
            leaf.map.clone(),
            leaf.witness.map(<[f64]>::to_vec),
        ))
    });
    let mut stats = walk.pruner.stats;
    let mut pruner = Pruner { dim, enabled: opts.prune, stats: EcdtStats::default() };

    let mut rules = Vec::new();
    for (bits, prefix_constraints, map, witness) in &prefixes {
        let pattern = ActivationPattern::from_bits(&sizes[..k - 1], bits)?;
        for (path, label) in &leaves {
            let mut constraints = prefix_constraints.clone();
            constraints.extend(path.iter().map(|p| path_constraint(map, p)));
            let covered_by_witness = witness.as_ref().is_some_and(|w| {
                let eps = ConstraintSystem::new(dim, constraints.clone()).default_epsilon();
                constraints.iter().all(|c| match c.op {
                    Op::Le => c.lhs(w) <= c.rhs,
                    Op::Gt => c.lhs(w) >= c.rhs + eps * c.norm_inf() && c.lhs(w) > c.rhs,
                })
            });
            if !covered_by_witness && !pruner.check_full(&constraints) {
                continue;
            }
            if constraints.is_empty() {
                constraints.push(LinearConstraint::always_true(dim));
            }
            rules.push(Rule {
                id: rules.len() as u64,
                constraints,
                consequence: Consequence::Label(*label),
                pattern: (!pattern.is_empty()).then(|| pattern.clone()),
            });
        }
    }
    stats.merge(&pruner.stats);
    if rules.is_empty() {
        return Err(Error::Invariant("no feasible C-Net rule".into()));
    }
    let ruleset = RuleSet::new(RuleSetKind::Cnet, dim, class_count, default_class, rules)?;
    Ok(CnetExtraction { ruleset, tree, stats })
}
