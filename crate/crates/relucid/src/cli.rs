//! Command-line front end. Every subcommand reads and writes plain files.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use relucid_core::data::{split, Dataset, MinMaxScaler, SplitSpec};
use relucid_core::ecdt::{local_explain, DEFAULT_CAPACITY_BITS};
use relucid_core::eval::{compactness, sample_state_space, CountingConvention, FidelitySource};
use relucid_core::rules::render_rule_at;
use relucid_core::trainer::{evaluate_accuracy, train_with_history, Optimizer, TrainConfig};
use relucid_core::udt::UdtParams;
use relucid_core::viz::{render_rule_regions, render_slice, SliceSpec};
use relucid_core::{Classifier, Mlp};
use serde_json::json;

use crate::bench::time_extraction;
use crate::dataset::{load_source, LabelColumn};
use crate::error::{Error, Result};
use crate::format::{parse_model, parse_predictor, parse_ruleset, serialize_model, serialize_ruleset, to_json, PredictorFile};
use crate::pipeline::{extract, fidelity_parallel, with_threads, ExtractOptions, Method};
use crate::report::{BenchReport, CompactnessDoc, EvaluationReport, FidelityDoc, VERSION};

#[derive(Debug, Parser)]
#[command(name = "relucid", version, about = "Exact rule extraction from ReLU networks")]
pub struct Cli {
    /// Worker thread cap for parallel stages.
    #[arg(long, global = true, env = "RELUCID_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a ReLU network and write it as a model file.
    Train(TrainArgs),
    /// Extract a rule set from a model.
    Extract(ExtractArgs),
    /// Measure fidelity and compactness of a rule set against its model.
    Evaluate(EvaluateArgs),
    /// Print the local EC-DT rule for one input.
    Explain(ExplainArgs),
    /// Render a 2-D decision-region slice as SVG.
    Render(RenderArgs),
    /// Time extraction methods.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV path, or p2:N[:SEED] for generated P2 data.
    #[arg(long)]
    pub data: Option<String>,
    /// Label column: zero-based index or header name (default: last column).
    #[arg(long)]
    pub label_column: Option<String>,
    /// Treat the first CSV row as data even if it looks like a header.
    #[arg(long)]
    pub no_header: bool,
    /// Fraction of rows used for training; the rest is the test split.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

impl DataArgs {
    fn load(&self) -> Result<Option<Dataset>> {
        let Some(spec) = &self.data else { return Ok(None) };
        let label = self.label_column.as_deref().map_or(LabelColumn::Last, LabelColumn::parse);
        let header = if self.no_header { Some(false) } else { None };
        load_source(spec, &label, header).map(Some)
    }

    fn split(&self, data: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
        Ok(split(data, SplitSpec { train_fraction: self.train_fraction, seed })?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Hidden layer sizes, comma-separated.
    #[arg(long, default_value = "5,5", value_delimiter = ',')]
    pub arch: Vec<usize>,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    /// Min-max scale inputs during training, folded into the first layer afterwards.
    #[arg(long)]
    pub scale: bool,
    /// Reshuffle-and-retrain count; run r uses seed + r. Only the first model is written.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub data: DataArgs,
    /// Split seed; the training split feeds the tree-based methods.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep infeasible rules (and skip pessimistic tree pruning).
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, default_value_t = DEFAULT_CAPACITY_BITS)]
    pub capacity_bits: u32,
    /// Build the whole pattern tree before filtering (ecdt only).
    #[arg(long)]
    pub materialize_tree: bool,
    /// Fit trees on dataset labels instead of the network's predictions.
    #[arg(long)]
    pub fit_on_ground_truth: bool,
    #[arg(long, default_value_t = 2)]
    pub min_leaf: usize,
    /// Confidence factor of pessimistic pruning.
    #[arg(long, default_value_t = 0.25)]
    pub cf: f64,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub rules: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Evaluate on every data row instead of the test split.
    #[arg(long)]
    pub all_rows: bool,
    /// Sampling box as lo:hi per input, comma-separated (used without --data).
    #[arg(long, conflicts_with = "data")]
    pub bounds: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated input values.
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
    /// Comma-separated variable names.
    #[arg(long)]
    pub names: Option<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Model or rule-set file.
    #[arg(long)]
    pub predictor: PathBuf,
    /// Zero-based free input dimensions, e.g. 0,1.
    #[arg(long, default_value = "0,1")]
    pub dims: String,
    /// Values for the other inputs: either all I values or only the I-2 fixed ones.
    #[arg(long, allow_hyphen_values = true)]
    pub fixed: Option<String>,
    /// View window as lo:hi,lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    pub range: String,
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
    /// Stroke each rule's region boundary (rule sets only).
    #[arg(long)]
    pub boundaries: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ecdt")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY_BITS)]
    pub capacity_bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("{what}: {t:?} is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Usage(format!("{what}: non-finite value")))
            }
        })
        .collect()
}

fn parse_ranges(s: &str, what: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("{what}: expected lo:hi, got {part:?}")))?;
            let v = parse_reals(&format!("{lo},{hi}"), what)?;
            if v[0] < v[1] {
                Ok((v[0], v[1]))
            } else {
                Err(Error::Usage(format!("{what}: lo must be below hi in {part:?}")))
            }
        })
        .collect()
}

fn load_model(path: &Path) -> Result<Mlp> {
    parse_model(&read(path)?)
}

fn cmd_train(a: &TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let data = a.data.load()?.ok_or_else(|| Error::Usage("train needs --data".into()))?;
    if a.repeats == 0 {
        return Err(Error::Usage("--repeats must be at least 1".into()));
    }
    let mut runs = Vec::with_capacity(a.repeats);
    let mut first = None;
    let mut first_scaler = None;
    for r in 0..a.repeats as u64 {
        let seed = a.seed.wrapping_add(r);
        let (train, test) = a.data.split(&data, seed)?;
        let config = TrainConfig {
            learning_rate: a.lr,
            epochs: a.epochs,
            batch_size: a.batch,
            seed,
            hidden_sizes: a.arch.clone(),
            optimizer: match a.optimizer {
                OptimizerArg::Sgd => Optimizer::Sgd,
                OptimizerArg::Adam => Optimizer::Adam,
            },
        };
        let outcome = if a.scale {
            let scaler = MinMaxScaler::fit(&train);
            let mut o = train_with_history(&scaler.transform(&train)?, &config)?;
            o.model = scaler.fold_into(&o.model)?;
            if first_scaler.is_none() {
                first_scaler = Some(json!({"min": scaler.min, "max": scaler.max, "folded_into_first_layer": true}));
            }
            o
        } else {
            train_with_history(&train, &config)?
        };
        let train_acc = evaluate_accuracy(&outcome.model, &train)?;
        let test_acc = evaluate_accuracy(&outcome.model, &test)?;
        runs.push(json!({
            "seed": seed,
            "train_accuracy": train_acc,
            "test_accuracy": test_acc,
            "final_loss": outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
        }));
        if first.is_none() {
            first = Some(outcome.model);
        }
    }
    let model = first.expect("at least one run");
    let metadata = json!({
        "data": a.data.data,
        "feature_names": data.feature_names(),
        "class_count": data.class_count(),
        "train_fraction": a.data.train_fraction,
        "arch": a.arch,
        "learning_rate": a.lr,
        "epochs": a.epochs,
        "batch_size": a.batch,
        "optimizer": format!("{:?}", a.optimizer).to_lowercase(),
        "scaler": first_scaler,
        "seed": a.seed,
        "test_accuracy": runs[0]["test_accuracy"],
    });
    write(&a.out, &serialize_model(&model, Some(metadata)))?;
    let accs: Vec<f64> = runs.iter().map(|r| r["test_accuracy"].as_f64().unwrap_or(0.0)).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / accs.len() as f64;
    let summary = json!({
        "version": VERSION,
        "runs": runs,
        "test_accuracy_mean": mean,
        "test_accuracy_std": var.sqrt(),
    });
    emit(None, &to_json(&summary), stdout)
}

fn cmd_extract(a: &ExtractArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let train = match a.data.load()? {
        Some(d) => Some(a.data.split(&d, a.seed)?.0),
        None => None,
    };
    let mut opts = ExtractOptions::new(!a.no_prune, a.capacity_bits);
    opts.ecdt.materialize_tree = a.materialize_tree;
    opts.cnet.fit_on_ground_truth = a.fit_on_ground_truth;
    opts.cnet.udt = UdtParams {
        min_leaf: a.min_leaf,
        confidence_factor: a.cf,
        max_depth: a.max_depth,
    };
    if a.min_leaf == 0 || !(a.cf > 0.0 && a.cf < 1.0) {
        return Err(Error::Usage("--min-leaf must be ≥ 1 and --cf in (0, 1)".into()));
    }
    let rs = extract(&model, a.method, train.as_ref(), &opts)?;
    write(&a.out, &serialize_ruleset(&rs))
}

fn accuracy(c: &(dyn Classifier + Sync), d: &Dataset) -> Result<f64> {
    let mut hits = 0;
    for (row, &l) in d.features().iter_rows().zip(d.labels()) {
        hits += (c.classify_label(row)? == l) as usize;
    }
    Ok(hits as f64 / d.len() as f64)
}

fn cmd_evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let rs = parse_ruleset(&read(&a.rules)?)?;
    let (inputs, source, labeled) = match (a.data.load()?, &a.bounds) {
        (Some(d), _) => {
            let d = if a.all_rows { d } else { a.data.split(&d, a.seed)?.1 };
            (d.features().clone(), FidelitySource::TestSet, Some(d))
        }
        (None, Some(b)) => {
            let bounds = parse_ranges(b, "--bounds")?;
            if bounds.len() != model.input_dim() {
                return Err(Error::Usage(format!(
                    "--bounds has {} ranges, model has {} inputs",
                    bounds.len(),
                    model.input_dim()
                )));
            }
            (sample_state_space(&bounds, a.samples, a.seed)?, FidelitySource::SampledSpace, None)
        }
        (None, None) => return Err(Error::Usage("evaluate needs --data or --bounds".into())),
    };
    let fid = fidelity_parallel(&rs, &model, &inputs, source)?;
    let (model_accuracy, surrogate_accuracy) = match &labeled {
        Some(d) => (Some(accuracy(&model, d)?), Some(accuracy(&rs, d)?)),
        None => (None, None),
    };
    let report = EvaluationReport {
        version: VERSION,
        seed: a.seed,
        rules_kind: rs.kind().name(),
        fidelity: FidelityDoc::from(&fid),
        compactness: [CountingConvention::HiddenOnly, CountingConvention::WithOutputThreshold]
            .iter()
            .map(|&c| CompactnessDoc::from(&compactness(&rs, c)))
            .collect(),
        model_accuracy,
        surrogate_accuracy,
    };
    emit(a.out.as_deref(), &to_json(&report), stdout)
}

fn cmd_explain(a: &ExplainArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let x = parse_reals(&a.input, "--input")?;
    if x.len() != model.input_dim() {
        return Err(Error::Usage(format!(
            "--input has {} values, model has {} inputs",
            x.len(),
            model.input_dim()
        )));
    }
    let names: Option<Vec<String>> = a.names.as_ref().map(|n| n.split(',').map(|s| s.trim().to_owned()).collect());
    if let Some(n) = &names {
        if n.len() != x.len() {
            return Err(Error::Usage("--names must give one name per input".into()));
        }
    }
    let rule = local_explain(&model, &x)?;
    let text = render_rule_at(&rule, &x, names.as_deref());
    emit(None, &text, stdout)
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let predictor = parse_predictor(&read(&a.predictor)?)?;
    let dim = match &predictor {
        PredictorFile::Model(m) => m.input_dim(),
        PredictorFile::Rules(r) => r.input_dim(),
    };
    let dims: Vec<usize> = a
        .dims
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Usage(format!("--dims: bad index {t:?}"))))
        .collect::<Result<_>>()?;
    let [u, v] = dims[..] else {
        return Err(Error::Usage("--dims takes exactly two indices".into()));
    };
    let ranges = parse_ranges(&a.range, "--range")?;
    let [ra, rb] = ranges[..] else {
        return Err(Error::Usage("--range takes exactly two lo:hi pairs".into()));
    };
    let mut spec = SliceSpec::new(dim, (u, v), [ra, rb]);
    if let Some(f) = &a.fixed {
        let vals = parse_reals(f, "--fixed")?;
        if vals.len() == dim {
            spec.fixed_values = vals;
        } else if dim >= 2 && vals.len() == dim - 2 {
            let mut it = vals.into_iter();
            for (k, slot) in spec.fixed_values.iter_mut().enumerate() {
                if k != u && k != v {
                    *slot = it.next().expect("counted above");
                }
            }
        } else {
            return Err(Error::Usage(format!("--fixed needs {dim} or {} values", dim.saturating_sub(2))));
        }
    } else if dim > 2 {
        return Err(Error::Usage("--fixed is required for inputs beyond the two free ones".into()));
    }
    spec.resolution = a.resolution;
    spec.title = a.title.clone();
    spec.validate(dim).map_err(|e| Error::Usage(e.to_string()))?;
    let svg = match &predictor {
        PredictorFile::Model(m) => {
            if a.boundaries {
                return Err(Error::Usage("--boundaries needs a rule-set predictor".into()));
            }
            render_slice(m, m.label_count(), &spec)?
        }
        PredictorFile::Rules(r) if a.boundaries => render_rule_regions(r, &spec)?,
        PredictorFile::Rules(r) => render_slice(r, r.class_count(), &spec)?,
    };
    write(&a.out, &svg)
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = match a.data.load()? {
        Some(d) => Some(a.data.split(&d, a.seed)?.0),
        None => None,
    };
    let opts = ExtractOptions::new(true, a.capacity_bits);
    let results = a
        .methods
        .iter()
        .map(|&m| time_extraction(&model, m, a.repeats, data.as_ref(), &opts, a.seed))
        .collect::<Result<Vec<_>>>()?;
    let report = BenchReport {
        version: VERSION,
        seed: a.seed,
        timing_scope: "algorithm only; model loading and serialization excluded",
        results,
    };
    emit(a.out.as_deref(), &to_json(&report), stdout)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let threads = cli.threads;
    with_threads(threads, move || {
        let mut buf = Vec::new();
        let r = match &cli.command {
            Command::Train(a) => cmd_train(a, &mut buf),
            Command::Extract(a) => cmd_extract(a),
            Command::Evaluate(a) => cmd_evaluate(a, &mut buf),
            Command::Explain(a) => cmd_explain(a, &mut buf),
            Command::Render(a) => cmd_render(a),
            Command::Bench(a) => cmd_bench(a, &mut buf),
        };
        (r, buf)
    })
    .and_then(|(r, buf)| {
        stdout.write_all(&buf).map_err(|e| Error::io("<stdout>", e))?;
        r
    })
}

/// Parses `argv` and runs one subcommand. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
