//! Serializable reports written by `evaluate` and `bench`.

use relucid_core::eval::{CompactnessReport, FidelityReport};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityDoc {
    pub matches: usize,
    pub total: usize,
    pub fidelity: f64,
    pub source: &'static str,
}

impl From<&FidelityReport> for FidelityDoc {
    fn from(r: &FidelityReport) -> Self {
        FidelityDoc {
            matches: r.matches,
            total: r.total,
            fidelity: r.fidelity,
            source: r.source.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessDoc {
    pub rule_count: usize,
    pub mean_constraints_per_rule: f64,
    pub max_constraints_per_rule: usize,
    pub counting_convention: &'static str,
}

impl From<&CompactnessReport> for CompactnessDoc {
    fn from(r: &CompactnessReport) -> Self {
        CompactnessDoc {
            rule_count: r.rule_count,
            mean_constraints_per_rule: r.mean_constraints_per_rule,
            max_constraints_per_rule: r.max_constraints_per_rule,
            counting_convention: r.counting_convention.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub version: &'static str,
    pub seed: u64,
    pub rules_kind: &'static str,
    pub fidelity: FidelityDoc,
    pub compactness: Vec<CompactnessDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub method: &'static str,
    /// Mean wall-clock seconds of one global extraction, excluding file IO.
    pub extraction_seconds: f64,
    pub repeats: usize,
    pub rule_count: usize,
    /// Mean seconds per local EC-DT explanation.
    pub local_explain_seconds_mean: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub version: &'static str,
    pub seed: u64,
    pub timing_scope: &'static str,
    pub results: Vec<TimingReport>,
}
