//! Wall-clock timing of extraction and local explanation.

use std::time::Instant;

use relucid_core::data::Dataset;
use relucid_core::ecdt::local_explain;
use relucid_core::eval::sample_state_space;
use relucid_core::Mlp;

use crate::error::{Error, Result};
use crate::pipeline::{extract, ExtractOptions, Method};
use crate::report::TimingReport;

pub const LOCAL_SAMPLES: usize = 1000;

/// Box to draw local-explanation queries from: the data's bounding box, or `[-1, 1]^I`.
pub fn query_bounds(model: &Mlp, data: Option<&Dataset>) -> Vec<(f64, f64)> {
    match data {
        Some(d) => d
            .bounding_box()
            .into_iter()
            .map(|(lo, hi)| if lo < hi { (lo, hi) } else { (lo - 1.0, hi + 1.0) })
            .collect(),
        None => vec![(-1.0, 1.0); model.input_dim()],
    }
}

/// Mean seconds per `local_explain` over `n` seeded queries.
pub fn time_local_explain(model: &Mlp, bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<f64> {
    let queries = sample_state_space(bounds, n, seed)?;
    let start = Instant::now();
    for x in queries.iter_rows() {
        std::hint::black_box(local_explain(model, x)?);
    }
    Ok(start.elapsed().as_secs_f64() / n as f64)
}

pub fn time_extraction(
    model: &Mlp,
    method: Method,
    repeats: usize,
    data: Option<&Dataset>,
    opts: &ExtractOptions,
    seed: u64,
) -> Result<TimingReport> {
    if repeats == 0 {
        return Err(Error::Usage("--repeats must be at least 1".into()));
    }
    let mut total = 0.0;
    let mut rule_count = 0;
    for _ in 0..repeats {
        let start = Instant::now();
        let rs = extract(model, method, data, opts)?;
        total += start.elapsed().as_secs_f64();
        rule_count = rs.len();
    }
    let local = time_local_explain(model, &query_bounds(model, data), LOCAL_SAMPLES, seed)?;
    Ok(TimingReport {
        method: method.name(),
        extraction_seconds: total / repeats as f64,
        repeats,
        rule_count,
        local_explain_seconds_mean: local,
        samples: LOCAL_SAMPLES,
    })
}
