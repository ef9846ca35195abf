//! Multivariate rules: conjunctions of linear input constraints with an affine
//! or fixed-label consequence.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt::Write;

use crate::linalg::{dot, Matrix};
use crate::model::{ActivationPattern, Decision};
use crate::{Classifier, Error, Result};

/// Canonical comparison operators. `Le` is `≤`, `Gt` is strict `>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Le,
    Gt,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Gt => ">",
        }
    }

    pub fn negate(self) -> Op {
        match self {
            Op::Le => Op::Gt,
            Op::Gt => Op::Le,
        }
    }
}

/// `coeffs · x  op  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub op: Op,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, op: Op, rhs: f64) -> Self {
        LinearConstraint { coeffs, op, rhs }
    }

    /// `x_feature op threshold` over `dim` inputs.
    pub fn univariate(dim: usize, feature: usize, op: Op, threshold: f64) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[feature] = 1.0;
        LinearConstraint {
            coeffs,
            op,
            rhs: threshold,
        }
    }

    /// `0·x ≤ 1`, satisfied everywhere.
    pub fn always_true(dim: usize) -> Self {
        LinearConstraint {
            coeffs: vec![0.0; dim],
            op: Op::Le,
            rhs: 1.0,
        }
    }

    /// Constraint on the sign of an affine form `a·x + b`: `> 0` when `active`, else `≤ 0`.
    pub fn from_affine(coeffs: Vec<f64>, bias: f64, active: bool) -> Self {
        LinearConstraint {
            coeffs,
            op: if active { Op::Gt } else { Op::Le },
            rhs: 0.0 - bias,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn lhs(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x)
    }

    #[inline]
    pub fn holds(&self, x: &[f64]) -> bool {
        let v = self.lhs(x);
        match self.op {
            Op::Le => v <= self.rhs,
            Op::Gt => v > self.rhs,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rhs.is_finite() && self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest absolute coefficient.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Affine map from inputs to logits, `y = x·W + b`, followed by a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConsequence {
    /// `input_dim × output_width`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub decision: Decision,
}

impl AffineConsequence {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weights.vecmul(x);
        for (yi, b) in y.iter_mut().zip(&self.bias) {
            *yi += b;
        }
        y
    }

    pub fn label(&self, x: &[f64]) -> usize {
        self.decision.apply(&self.logits(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Consequence {
    Affine(AffineConsequence),
    Label(usize),
}

impl Consequence {
    pub fn label(&self, x: &[f64]) -> usize {
        match self {
            Consequence::Affine(a) => a.label(x),
            Consequence::Label(l) => *l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: u64,
    pub constraints: Vec<LinearConstraint>,
    pub consequence: Consequence,
    /// Activation pattern the rule was derived from, when there is one.
    pub pattern: Option<ActivationPattern>,
}

impl Rule {
    pub fn fires(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.holds(x))
    }

    pub fn input_dim(&self) -> usize {
        self.constraints.first().map_or(0, LinearConstraint::dim)
    }
}

/// Checks `x` against every constraint of `rule`.
pub fn rule_fires(rule: &Rule, x: &[f64]) -> Result<bool> {
    let dim = rule.input_dim();
    if x.len() != dim {
        return Err(Error::shape("rule input", dim, x.len()));
    }
    Ok(rule.fires(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleSetKind {
    Ecdt,
    Cnet,
    Udt,
}

impl RuleSetKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleSetKind::Ecdt => "ecdt",
            RuleSetKind::Cnet => "cnet",
            RuleSetKind::Udt => "udt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "ecdt" => Some(RuleSetKind::Ecdt),
            "cnet" => Some(RuleSetKind::Cnet),
            "udt" => Some(RuleSetKind::Udt),
            _ => None,
        }
    }
}

/// An ordered list of rules sharing one input space.
///
/// For `Ecdt` sets the rules partition the input space and exactly one fires
/// for any input. `Cnet` and `Udt` sets use first-match in stored order and fall
/// back to `default_class` when nothing fires.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    kind: RuleSetKind,
    input_dim: usize,
    class_count: usize,
    default_class: usize,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(
        kind: RuleSetKind,
        input_dim: usize,
        class_count: usize,
        default_class: usize,
        rules: Vec<Rule>,
    ) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidArgument("a rule set needs at least one rule".into()));
        }
        if class_count == 0 || default_class >= class_count {
            return Err(Error::InvalidArgument(format!(
                "default class {default_class} outside {class_count} classes"
            )));
        }
        let mut ids = Vec::with_capacity(rules.len());
        for rule in &rules {
            if rule.constraints.is_empty() {
                return Err(Error::InvalidArgument(format!("rule {} has no constraints", rule.id)));
            }
            for c in &rule.constraints {
                if c.dim() != input_dim {
                    return Err(Error::shape("constraint coefficients", input_dim, c.dim()));
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite("constraint"));
                }
            }
            match &rule.consequence {
                Consequence::Affine(a) => {
                    if a.weights.rows() != input_dim {
                        return Err(Error::shape("consequence weights", input_dim, a.weights.rows()));
                    }
                    if a.bias.len() != a.weights.cols() {
                        return Err(Error::shape("consequence bias", a.weights.cols(), a.bias.len()));
                    }
                }
                Consequence::Label(l) if *l >= class_count => {
                    return Err(Error::InvalidArgument(format!(
                        "rule {} label {l} outside {class_count} classes",
                        rule.id
                    )));
                }
                Consequence::Label(_) => {}
            }
            if let Some(p) = &rule.pattern {
                if rule.constraints.len() < p.len() {
                    return Err(Error::InvalidArgument(format!(
                        "rule {} has fewer constraints than pattern bits",
                        rule.id
                    )));
                }
            }
            ids.push(rule.id);
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate rule ids".into()));
        }
        Ok(RuleSet {
            kind,
            input_dim,
            class_count,
            default_class,
            rules,
        })
    }

    pub fn kind(&self) -> RuleSetKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn default_class(&self) -> usize {
        self.default_class
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, id: u64) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Label for `x` and the id of the rule that decided it (`None` when the
    /// default class was used).
    pub fn classify(&self, x: &[f64]) -> Result<(usize, Option<u64>)> {
        if x.len() != self.input_dim {
            return Err(Error::shape("rule set input", self.input_dim, x.len()));
        }
        match self.kind {
            RuleSetKind::Ecdt => {
                let mut firing = self.rules.iter().filter(|r| r.fires(x));
                let rule = firing.next().ok_or_else(|| {
                    Error::Invariant("no EC-DT rule fires for the input".to_string())
                })?;
                if let Some(other) = firing.next() {
                    return Err(Error::Invariant(format!(
                        "EC-DT rules {} and {} both fire for the input",
                        rule.id, other.id
                    )));
                }
                Ok((rule.consequence.label(x), Some(rule.id)))
            }
            RuleSetKind::Cnet | RuleSetKind::Udt => Ok(self
                .rules
                .iter()
                .find(|r| r.fires(x))
                .map_or((self.default_class, None), |r| (r.consequence.label(x), Some(r.id)))),
        }
    }
}

impl Classifier for RuleSet {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn classify_label(&self, x: &[f64]) -> Result<usize> {
        Ok(self.classify(x)?.0)
    }
}

/// Default variable names `x1 … xI`.
pub fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

fn fmt2(v: f64) -> String {
    let s = format!("{:.2}", v);
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn fmt_short(v: f64) -> String {
    let s = fmt2(v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// One constraint as text, e.g. `(-0.47*B) + (1.51*G) > -5.23` or `B > 92`.
pub fn render_constraint(c: &LinearConstraint, names: &[String]) -> String {
    let terms: Vec<(usize, f64)> = c
        .coeffs
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();
    match terms.as_slice() {
        [] => format!("0 {} {}", c.op.symbol(), fmt2(c.rhs)),
        [(i, v)] if *v == 1.0 => format!("{} {} {}", names[*i], c.op.symbol(), fmt_short(c.rhs)),
        _ => {
            let lhs: Vec<String> = terms
                .iter()
                .map(|&(i, v)| format!("({}*{})", fmt2(v), names[i]))
                .collect();
            format!("{} {} {}", lhs.join(" + "), c.op.symbol(), fmt2(c.rhs))
        }
    }
}

fn render_affine(coeffs: &[f64], bias: f64, names: &[String]) -> String {
    let mut parts: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != 0.0)
        .map(|(i, &v)| format!("({}*{})", fmt2(v), names[i]))
        .collect();
    if bias != 0.0 || parts.is_empty() {
        parts.push(format!("({})", fmt2(bias)));
    }
    parts.join(" + ")
}

/// Human-readable `IF: … THEN: …` block. `names` defaults to `x1 … xI`.
pub fn render_rule_text(rule: &Rule, names: Option<&[String]>) -> String {
    render(rule, names, None)
}

/// Like [`render_rule_text`], with the consequence resolved at `x`:
/// `THEN: class k`, followed by the affine map when there is one.
pub fn render_rule_at(rule: &Rule, x: &[f64], names: Option<&[String]>) -> String {
    render(rule, names, Some(rule.consequence.label(x)))
}

fn render(rule: &Rule, names: Option<&[String]>, resolved: Option<usize>) -> String {
    let owned;
    let names = match names {
        Some(n) => n,
        None => {
            owned = default_names(rule.input_dim());
            &owned
        }
    };
    let mut out = String::from("IF:\n");
    for c in &rule.constraints {
        let _ = writeln!(out, "  - {}", render_constraint(c, names));
    }
    match (&rule.consequence, resolved) {
        (Consequence::Label(l), _) => {
            let _ = writeln!(out, "THEN: class {l}");
        }
        (Consequence::Affine(a), resolved) => {
            match resolved {
                Some(l) => {
                    let _ = writeln!(out, "THEN: class {l}");
                    out.push_str("WHERE:\n");
                }
                None => out.push_str("THEN:\n"),
            }
            for j in 0..a.weights.cols() {
                let col = a.weights.column(j);
                let _ = writeln!(out, "  y{} = {}", j, render_affine(&col, a.bias[j], names));
            }
            if resolved.is_none() {
                match a.decision {
                    Decision::Threshold => out.push_str("  class 1 if y0 > 0, else class 0\n"),
                    Decision::Argmax => out.push_str("  class = argmax_j y_j\n"),
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn label_rule(id: u64, constraints: Vec<LinearConstraint>, label: usize) -> Rule {
        Rule {
            id,
            constraints,
            consequence: Consequence::Label(label),
            pattern: None,
        }
    }

    #[test]
    fn strictness_of_gt() {
        let r = label_rule(0, vec![LinearConstraint::new(vec![1.0], Op::Gt, 0.0)], 1);
        assert!(!rule_fires(&r, &[0.0]).unwrap());
        let r = label_rule(
            0,
            vec![
                LinearConstraint::new(vec![1.0], Op::Le, 1.0),
                LinearConstraint::new(vec![1.0], Op::Gt, -1.0),
            ],
            1,
        );
        assert!(rule_fires(&r, &[0.0]).unwrap());
        assert!(rule_fires(&r, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn xor_pattern_rule_fires() {
        let r = label_rule(
            3,
            vec![
                LinearConstraint::from_affine(vec![1.0, 1.0], 0.0, true),
                LinearConstraint::from_affine(vec![1.0, 1.0], -1.0, true),
            ],
            0,
        );
        assert!(r.fires(&[1.0, 1.0]));
    }

    #[test]
    fn always_true_label_set() {
        let rs = RuleSet::new(
            RuleSetKind::Udt,
            2,
            2,
            0,
            vec![label_rule(0, vec![LinearConstraint::always_true(2)], 1)],
        )
        .unwrap();
        assert_eq!(rs.classify(&[-4.0, 9.0]).unwrap(), (1, Some(0)));
    }

    #[test]
    fn default_class_when_nothing_fires() {
        let rs = RuleSet::new(
            RuleSetKind::Cnet,
            1,
            2,
            1,
            vec![label_rule(0, vec![LinearConstraint::new(vec![1.0], Op::Gt, 5.0)], 0)],
        )
        .unwrap();
        assert_eq!(rs.classify(&[0.0]).unwrap(), (1, None));
        assert_eq!(rs.classify(&[6.0]).unwrap(), (0, Some(0)));
    }

    #[test]
    fn ecdt_overlap_is_an_error() {
        let rs = RuleSet::new(
            RuleSetKind::Ecdt,
            1,
            2,
            0,
            vec![
                label_rule(0, vec![LinearConstraint::always_true(1)], 0),
                label_rule(1, vec![LinearConstraint::always_true(1)], 1),
            ],
        )
        .unwrap();
        assert!(matches!(rs.classify(&[0.0]), Err(Error::Invariant(_))));
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(RuleSet::new(RuleSetKind::Udt, 1, 2, 0, vec![]).is_err());
        let dup = vec![
            label_rule(0, vec![LinearConstraint::always_true(1)], 0),
            label_rule(0, vec![LinearConstraint::always_true(1)], 1),
        ];
        assert!(RuleSet::new(RuleSetKind::Udt, 1, 2, 0, dup).is_err());
        let bad_dim = vec![label_rule(0, vec![LinearConstraint::always_true(2)], 0)];
        assert!(RuleSet::new(RuleSetKind::Udt, 1, 2, 0, bad_dim).is_err());
    }

    #[test]
    fn univariate_text() {
        let n = names(&["B", "G", "R"]);
        let c = LinearConstraint::univariate(3, 0, Op::Gt, 92.0);
        assert_eq!(render_constraint(&c, &n), "B > 92");
    }

    #[test]
    fn multivariate_text() {
        let n = names(&["B", "G", "R"]);
        let c = LinearConstraint::new(vec![-0.47, 1.51, 0.04], Op::Gt, -5.23);
        assert_eq!(render_constraint(&c, &n), "(-0.47*B) + (1.51*G) + (0.04*R) > -5.23");
    }

    #[test]
    fn zero_terms_omitted() {
        let n = names(&["B", "G", "R"]);
        let c = LinearConstraint::new(vec![0.3, 0.0, -0.66], Op::Le, 4.22);
        assert_eq!(render_constraint(&c, &n), "(0.30*B) + (-0.66*R) <= 4.22");
    }

    #[test]
    fn rule_block_layout() {
        let r = label_rule(0, vec![LinearConstraint::univariate(2, 1, Op::Le, 157.0)], 1);
        let text = render_rule_text(&r, None);
        assert_eq!(text, "IF:\n  - x2 <= 157\nTHEN: class 1\n");
    }
}
