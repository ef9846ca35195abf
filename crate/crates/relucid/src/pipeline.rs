//! Method dispatch and the multi-threaded paths.

use rayon::prelude::*;
use relucid_core::cnet::{extract_cnet_ruleset, extract_udt_ruleset, CnetOptions};
use relucid_core::data::Dataset;
use relucid_core::ecdt::{self, assemble_ruleset, extract_prefix, EcdtOptions, EcdtStats};
use relucid_core::eval::{FidelityReport, FidelitySource};
use relucid_core::{Classifier, Matrix, Mlp, RuleSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Ecdt,
    Cnet,
    Udt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ecdt => "ecdt",
            Method::Cnet => "cnet",
            Method::Udt => "udt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOptions {
    pub ecdt: EcdtOptions,
    pub cnet: CnetOptions,
}

impl ExtractOptions {
    pub fn new(prune: bool, capacity_bits: u32) -> Self {
        ExtractOptions {
            ecdt: EcdtOptions {
                prune,
                capacity_bits,
                ..Default::default()
            },
            cnet: CnetOptions {
                prune,
                capacity_bits,
                ..Default::default()
            },
        }
    }
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions::new(true, ecdt::DEFAULT_CAPACITY_BITS)
    }
}

/// Runs `f` on a pool capped at `threads` workers (`None` lets rayon decide).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Usage("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Global EC-DT split across threads by the first few pattern bits. The
/// result equals the sequential extraction rule for rule.
pub fn extract_ecdt_parallel(model: &Mlp, opts: &EcdtOptions) -> Result<(RuleSet, EcdtStats)> {
    ecdt::check_capacity(model.total_hidden(), opts.capacity_bits)?;
    if opts.materialize_tree {
        return Ok(ecdt::extract_ruleset_with_stats(model, opts)?);
    }
    let workers = rayon::current_num_threads().max(1);
    let mut depth = 0;
    while (1usize << depth) < 4 * workers && depth < model.total_hidden() && depth < 8 {
        depth += 1;
    }
    let prefixes: Vec<Vec<bool>> = (0..1u32 << depth)
        .map(|code| (0..depth).map(|b| code >> (depth - 1 - b) & 1 == 1).collect())
        .collect();
    let parts = prefixes
        .par_iter()
        .map(|p| extract_prefix(model, opts, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut stats = EcdtStats::default();
    let mut rules = Vec::new();
    for (r, s) in parts {
        stats.merge(&s);
        rules.extend(r);
    }
    Ok((assemble_ruleset(model, rules)?, stats))
}

fn need_data<'a>(method: Method, data: Option<&'a Dataset>) -> Result<&'a Dataset> {
    data.ok_or_else(|| Error::Usage(format!("--method {} needs --data", method.name())))
}

pub fn extract(model: &Mlp, method: Method, data: Option<&Dataset>, opts: &ExtractOptions) -> Result<RuleSet> {
    Ok(match method {
        Method::Ecdt => extract_ecdt_parallel(model, &opts.ecdt)?.0,
        Method::Cnet => extract_cnet_ruleset(model, need_data(method, data)?, &opts.cnet)?.ruleset,
        Method::Udt => extract_udt_ruleset(model, need_data(method, data)?, &opts.cnet)?.0,
    })
}

/// Row-parallel fidelity; same counts as the sequential version.
pub fn fidelity_parallel<C: Classifier + Sync + ?Sized>(
    surrogate: &C,
    model: &Mlp,
    inputs: &Matrix,
    source: FidelitySource,
) -> Result<FidelityReport> {
    if inputs.rows() == 0 {
        return Err(relucid_core::Error::InvalidArgument("fidelity needs at least one input row".into()).into());
    }
    if inputs.cols() != model.input_dim() || surrogate.input_dim() != model.input_dim() {
        return Err(relucid_core::Error::Shape {
            what: "fidelity inputs",
            expected: model.input_dim(),
            found: if inputs.cols() != model.input_dim() { inputs.cols() } else { surrogate.input_dim() },
        }
        .into());
    }
    let rows: Vec<&[f64]> = inputs.iter_rows().collect();
    let matches = rows
        .par_iter()
        .map(|r| Ok((surrogate.classify_label(r)? == model.predict(r)?) as usize))
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(|e: relucid_core::Error| Error::from(e))?;
    Ok(FidelityReport::from_counts(matches, inputs.rows(), source))
}
