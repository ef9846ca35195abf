//! Fidelity and compactness of extracted surrogates.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::model::{Decision, Mlp};
use crate::rules::{Consequence, RuleSet};
use crate::{Classifier, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelitySource {
    TestSet,
    SampledSpace,
}

impl FidelitySource {
    pub fn name(self) -> &'static str {
        match self {
            FidelitySource::TestSet => "test-set",
            FidelitySource::SampledSpace => "sampled-space",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub matches: usize,
    pub total: usize,
    pub fidelity: f64,
    pub source: FidelitySource,
}

impl FidelityReport {
    pub fn from_counts(matches: usize, total: usize, source: FidelitySource) -> Self {
        FidelityReport {
            matches,
            total,
            fidelity: matches as f64 / total as f64,
            source,
        }
    }
}

/// Counts rows where the surrogate agrees with `model.predict`.
pub fn fidelity(
    surrogate: &dyn Classifier,
    model: &Mlp,
    inputs: &Matrix,
    source: FidelitySource,
) -> Result<FidelityReport> {
    if inputs.rows() == 0 {
        return Err(Error::InvalidArgument("fidelity needs at least one input row".into()));
    }
    if inputs.cols() != model.input_dim() {
        return Err(Error::shape("fidelity inputs", model.input_dim(), inputs.cols()));
    }
    if surrogate.input_dim() != model.input_dim() {
        return Err(Error::shape("surrogate input", model.input_dim(), surrogate.input_dim()));
    }
    let mut matches = 0;
    for row in inputs.iter_rows() {
        if surrogate.classify_label(row)? == model.predict(row)? {
            matches += 1;
        }
    }
    Ok(FidelityReport::from_counts(matches, inputs.rows(), source))
}

/// `n` seeded uniform rows from the box `bounds`.
pub fn sample_state_space(bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("state-space sample size must be positive".into()));
    }
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("bounds must cover at least one dimension".into()));
    }
    if let Some((lo, hi)) = bounds
        .iter()
        .find(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::InvalidArgument(alloc::format!("invalid bounds ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * bounds.len());
    for _ in 0..n {
        for &(lo, hi) in bounds {
            data.push(rng.gen_range(lo..hi));
        }
    }
    Matrix::from_vec(n, bounds.len(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountingConvention {
    /// Only the rule's input constraints.
    HiddenOnly,
    /// Also counts the output threshold of affine rules from single-logit models.
    WithOutputThreshold,
}

impl CountingConvention {
    pub fn name(self) -> &'static str {
        match self {
            CountingConvention::HiddenOnly => "hidden-only",
            CountingConvention::WithOutputThreshold => "with-output-threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactnessReport {
    pub rule_count: usize,
    pub mean_constraints_per_rule: f64,
    pub max_constraints_per_rule: usize,
    pub counting_convention: CountingConvention,
}

pub fn constraint_count(rule: &crate::rules::Rule, convention: CountingConvention) -> usize {
    let extra = match (&rule.consequence, convention) {
        (Consequence::Affine(a), CountingConvention::WithOutputThreshold)
            if a.decision == Decision::Threshold =>
        {
            1
        }
        _ => 0,
    };
    rule.constraints.len() + extra
}

pub fn compactness(rs: &RuleSet, convention: CountingConvention) -> CompactnessReport {
    let counts: Vec<usize> = rs.rules().iter().map(|r| constraint_count(r, convention)).collect();
    let total: usize = counts.iter().sum();
    CompactnessReport {
        rule_count: counts.len(),
        mean_constraints_per_rule: total as f64 / counts.len().max(1) as f64,
        max_constraints_per_rule: counts.iter().copied().max().unwrap_or(0),
        counting_convention: convention,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{LinearConstraint, Op, Rule, RuleSetKind};
    use alloc::vec;

    #[test]
    fn sampling_contract() {
        assert!(sample_state_space(&[(0.0, 1.0)], 0, 1).is_err());
        assert!(sample_state_space(&[(1.0, 1.0)], 5, 1).is_err());
        let b = [(-1.0, 2.0), (5.0, 6.0)];
        let m = sample_state_space(&b, 500, 3).unwrap();
        for r in m.iter_rows() {
            assert!(r[0] >= -1.0 && r[0] < 2.0 && r[1] >= 5.0 && r[1] < 6.0);
        }
        assert_eq!(m, sample_state_space(&b, 500, 3).unwrap());
    }

    #[test]
    fn compactness_single_rule() {
        let rs = RuleSet::new(
            RuleSetKind::Udt,
            1,
            2,
            0,
            vec![Rule {
                id: 0,
                constraints: vec![
                    LinearConstraint::new(vec![1.0], Op::Le, 1.0),
                    LinearConstraint::new(vec![1.0], Op::Gt, 0.0),
                    LinearConstraint::new(vec![2.0], Op::Le, 3.0),
                ],
                consequence: Consequence::Label(0),
                pattern: None,
            }],
        )
        .unwrap();
        let c = compactness(&rs, CountingConvention::HiddenOnly);
        assert_eq!((c.rule_count, c.mean_constraints_per_rule), (1, 3.0));
        // Fixed labels carry no output threshold.
        let c = compactness(&rs, CountingConvention::WithOutputThreshold);
        assert_eq!(c.mean_constraints_per_rule, 3.0);
    }
}
