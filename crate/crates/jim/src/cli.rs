//! Command-line pipelines: `build`, `fit`, `simulate`, `predict`, `trace`
//! and `report`.
//!
//! Every command is deterministic given its inputs and the `--seed` flag;
//! outputs use fixed decimal formatting so re-runs are byte-identical.
//! Options can also come from a flat TOML config file (`--config`), with
//! command flags overriding same-named keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{JimError, Result};
use crate::estimate::{fit, FitConfig};
use crate::forecast::{
    bin_counts, bin_counts_queries, qac_rank, ranking_metrics, run_task, ForecastConfig,
    ForecastFrame, ScoreSource, TaskOutput,
};
use crate::ingest::{
    build_joint_dataset, read_dataset, read_events_jsonl, read_query_log_tsv, write_dataset,
    BuildConfig,
};
use crate::intensity::{influence_summary, intensity_trace, log_likelihood};
use crate::metrics::wilcoxon_signed_rank;
use crate::model::{ModelParams, PointSequence};
use crate::modelfile::{read_model, write_model, ModelFile};
use crate::simulate::{simulate, SimConfig, RNG_NAME};
use crate::util::format_sig;

/// Keys recognized in the flat TOML config file. Every key has a
/// same-named command flag that takes precedence.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threshold: Option<f64>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub use_body: Option<bool>,
    pub max_iters: Option<usize>,
    pub tolerance: Option<f64>,
    pub restarts: Option<usize>,
    pub reg_weight: Option<f64>,
    pub stability_margin: Option<f64>,
    pub bin_width: Option<f64>,
    pub split_fraction: Option<f64>,
    pub ar_order: Option<usize>,
    pub rbo_p: Option<f64>,
    pub half_life: Option<f64>,
    pub grid_step: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| JimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| JimError::Config(format!(
        "{}: {e}",
        path.display()
    )))
}

#[derive(Debug, Parser)]
#[command(
    name = "jim",
    version,
    about = "Joint influence modeling of external events and search queries"
)]
pub struct Cli {
    /// Flat TOML config file; flags override same-named keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for all randomness (fitting restarts, simulation).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a query log against an event list and write the joint dataset.
    Build(BuildArgs),
    /// Fit model parameters to a joint dataset by penalized likelihood.
    Fit(FitArgs),
    /// Simulate a synthetic dataset from a fitted model.
    Simulate(SimulateArgs),
    /// Run prediction tasks and baselines over a joint dataset.
    Predict(PredictArgs),
    /// Emit an intensity trace with hourly actual counts for plotting.
    Trace(TraceArgs),
    /// Print the influence summary of a fitted model.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Events file (JSONL: id, title, body, timestamp).
    #[arg(long)]
    pub events: PathBuf,
    /// Query log (TSV: query_text<TAB>epoch_seconds).
    #[arg(long)]
    pub queries: PathBuf,
    /// Output joint-dataset path (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum similarity for a query to be kept.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Include event body text in the term profile.
    #[arg(long)]
    pub use_body: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Joint-dataset path (JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Output model path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub reg_weight: Option<f64>,
    #[arg(long)]
    pub stability_margin: Option<f64>,
    /// Share one decay rate across channels (the JIM-G restriction).
    #[arg(long)]
    pub shared_alpha: bool,
    /// Restrict to independent channels (the IIM-approx restriction:
    /// diagonal influence, shared base rate and decay, linear impact).
    #[arg(long)]
    pub diagonal_mic: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fitted model path (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output dataset path (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Window start (hours).
    #[arg(long)]
    pub t_start: Option<f64>,
    /// Window end (hours).
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Joint-dataset path (JSONL).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Task number: 1 top event, 2 event ranking, 3 top query,
    /// 4 query ranking, 5 query auto-completion.
    #[arg(long)]
    pub task: u8,
    /// Comma-separated methods from {NF, AR, ARD, VAR, IIM-approx, JIM,
    /// JIM-G, oracle}.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Model file backing the JIM method.
    #[arg(long)]
    pub model_jim: Option<PathBuf>,
    /// Model file backing the JIM-G method.
    #[arg(long)]
    pub model_jim_g: Option<PathBuf>,
    /// Model file backing the IIM-approx method.
    #[arg(long)]
    pub model_iim: Option<PathBuf>,
    /// Per-bin results CSV output path.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Aggregate metrics JSON output path.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Two methods "A,B" to compare with the signed-rank test on per-bin
    /// metric values.
    #[arg(long)]
    pub compare: Option<String>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub split_fraction: Option<f64>,
    #[arg(long)]
    pub ar_order: Option<usize>,
    #[arg(long)]
    pub rbo_p: Option<f64>,
    /// Half-life (hours) of the query-share decay.
    #[arg(long)]
    pub half_life: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Trace grid step (hours).
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Optional dataset for a log-likelihood line.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

/// Run a parsed command line; returns the text the command prints.
pub fn run(cli: Cli) -> Result<String> {
    let file_cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file_cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Build(args) => cmd_build(&args, &file_cfg),
        Command::Fit(args) => cmd_fit(&args, &file_cfg, seed),
        Command::Simulate(args) => cmd_simulate(&args, &file_cfg, seed),
        Command::Predict(args) => cmd_predict(&args, &file_cfg),
        Command::Trace(args) => cmd_trace(&args, &file_cfg),
        Command::Report(args) => cmd_report(&args),
    }
}

fn sig(x: f64) -> String {
    format_sig(x, 12)
}

fn cmd_build(args: &BuildArgs, file_cfg: &FileConfig) -> Result<String> {
    let defaults = BuildConfig::default();
    let cfg = BuildConfig {
        k1: args.k1.or(file_cfg.k1).unwrap_or(defaults.k1),
        b: args.b.or(file_cfg.b).unwrap_or(defaults.b),
        threshold: args
            .threshold
            .or(file_cfg.threshold)
            .unwrap_or(defaults.threshold),
        use_body: args.use_body || file_cfg.use_body.unwrap_or(false),
    };
    let events = read_events_jsonl(&args.events)?;
    let queries = read_query_log_tsv(&args.queries)?;
    let dataset = build_joint_dataset(&events, &queries, &cfg)?;
    write_dataset(&args.out, &dataset.sequence, Some(&dataset.texts), None)?;
    let mut out = String::new();
    writeln!(
        out,
        "kept {} of {} queries across {} events (threshold {})",
        dataset.sequence.len(),
        queries.len(),
        dataset.events.len(),
        sig(cfg.threshold)
    )
    .unwrap();
    for (id, count, avg) in dataset.summary() {
        writeln!(out, "event {id}: kept {count} queries, avg similarity {}", sig(avg)).unwrap();
    }
    Ok(out)
}

fn cmd_fit(args: &FitArgs, file_cfg: &FileConfig, seed: u64) -> Result<String> {
    let (seq, _texts) = read_dataset(&args.data)?;
    let defaults = FitConfig::default();
    let mut cfg = FitConfig {
        max_iters: args.max_iters.or(file_cfg.max_iters).unwrap_or(defaults.max_iters),
        tolerance: args.tolerance.or(file_cfg.tolerance).unwrap_or(defaults.tolerance),
        restarts: args.restarts.or(file_cfg.restarts).unwrap_or(defaults.restarts),
        reg_weight: args
            .reg_weight
            .or(file_cfg.reg_weight)
            .unwrap_or(defaults.reg_weight),
        stability_margin: args
            .stability_margin
            .or(file_cfg.stability_margin)
            .unwrap_or(defaults.stability_margin),
        seed,
        shared_alpha: args.shared_alpha,
        ..defaults
    };
    if args.diagonal_mic {
        let shared_alpha = cfg.shared_alpha;
        cfg = cfg.iim_approx();
        cfg.shared_alpha = shared_alpha || cfg.shared_alpha;
    }
    let result = fit(&seq, &cfg)?;
    let model = ModelFile {
        params: result.params.clone(),
        objective: result.objective,
        converged: result.converged,
        iterations: result.iterations,
    };
    write_model(&args.out, &model)?;
    let summary = influence_summary(&result.params)?;
    let mut out = String::new();
    writeln!(
        out,
        "objective {} after {} iterations (converged: {})",
        sig(result.objective),
        result.iterations,
        result.converged
    )
    .unwrap();
    writeln!(out, "spectral radius {}", sig(summary.spectral_radius)).unwrap();
    let avg: Vec<String> = summary.avg_influence.iter().map(|v| sig(*v)).collect();
    writeln!(out, "average influence [{}]", avg.join(", ")).unwrap();
    writeln!(
        out,
        "direct influence mean {}, indirect influence mean {}",
        sig(summary.direct_mean),
        sig(summary.indirect_mean)
    )
    .unwrap();
    let alphas: Vec<String> = result.params.alpha.iter().map(|a| sig(*a)).collect();
    writeln!(out, "alpha [{}]", alphas.join(", ")).unwrap();
    Ok(out)
}

fn cmd_simulate(args: &SimulateArgs, file_cfg: &FileConfig, seed: u64) -> Result<String> {
    let model = read_model(&args.model)?;
    let t_start = args.t_start.or(file_cfg.t_start).unwrap_or(0.0);
    let t_end = args
        .t_end
        .or(file_cfg.t_end)
        .ok_or_else(|| JimError::Config("simulate requires --t-end".into()))?;
    let sim = SimConfig::new(t_start, t_end, seed)?;
    let seq = simulate(&model.params, &sim)?;
    write_dataset(&args.out, &seq, None, Some((RNG_NAME, seed)))?;
    Ok(format!(
        "simulated {} points over [{}, {}] with seed {seed}\n",
        seq.len(),
        sig(t_start),
        sig(t_end)
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Nf,
    Ar,
    Ard,
    Var,
    IimApprox,
    Jim,
    JimG,
    Oracle,
}

impl Method {
    fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nf" => Ok(Self::Nf),
            "ar" => Ok(Self::Ar),
            "ard" => Ok(Self::Ard),
            "var" => Ok(Self::Var),
            "iim-approx" | "iim" => Ok(Self::IimApprox),
            "jim" => Ok(Self::Jim),
            "jim-g" => Ok(Self::JimG),
            "oracle" => Ok(Self::Oracle),
            other => Err(JimError::Config(format!("unknown method {other:?}"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Nf => "NF",
            Self::Ar => "AR",
            Self::Ard => "ARD",
            Self::Var => "VAR",
            Self::IimApprox => "IIM-approx",
            Self::Jim => "JIM",
            Self::JimG => "JIM-G",
            Self::Oracle => "oracle",
        }
    }

    fn model_params<'a>(
        self,
        models: &'a BTreeMap<&'static str, ModelFile>,
    ) -> Result<Option<&'a ModelParams>> {
        let key = match self {
            Self::IimApprox => "IIM-approx",
            Self::Jim => "JIM",
            Self::JimG => "JIM-G",
            _ => return Ok(None),
        };
        models
            .get(key)
            .map(|m| Some(&m.params))
            .ok_or_else(|| JimError::Config(format!("method {key} needs its model file flag")))
    }
}

/// Per-method task result with the per-bin values used for comparisons.
struct MethodRun {
    method: Method,
    output: TaskOutput,
    /// Metric name -> aggregate value.
    aggregates: Vec<(&'static str, f64, usize)>,
    /// Per-bin values of the comparison metric.
    per_bin: Vec<f64>,
}

fn qac_evaluate(output: &TaskOutput) -> (Vec<f64>, f64, usize) {
    // per informative bin: occurrence-weighted mean reciprocal rank
    let mut per_bin = Vec::new();
    let mut total_rr = 0.0;
    let mut total_n = 0.0;
    for (pred, act) in output.predicted.iter().zip(&output.actual) {
        let scores: BTreeMap<String, f64> = output
            .labels
            .iter()
            .cloned()
            .zip(pred.iter().copied())
            .collect();
        let mut bin_rr = 0.0;
        let mut bin_n = 0.0;
        for (label, &count) in output.labels.iter().zip(act.iter()) {
            if count <= 0.0 {
                continue;
            }
            let first = match crate::ingest::tokenize(label).into_iter().next() {
                Some(t) => t,
                None => continue,
            };
            bin_rr += count * qac_rank(&scores, &first, label);
            bin_n += count;
        }
        if bin_n > 0.0 {
            per_bin.push(bin_rr / bin_n);
            total_rr += bin_rr;
            total_n += bin_n;
        }
    }
    let mrr = if total_n > 0.0 { total_rr / total_n } else { 0.0 };
    (per_bin.clone(), mrr, per_bin.len())
}

fn cmd_predict(args: &PredictArgs, file_cfg: &FileConfig) -> Result<String> {
    if !(1..=5).contains(&args.task) {
        return Err(JimError::Config(format!(
            "unknown task {}; expected 1-5",
            args.task
        )));
    }
    if args.methods.is_empty() {
        return Err(JimError::Config("at least one method is required".into()));
    }
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<_>>()?;

    let defaults = ForecastConfig::default();
    let cfg = ForecastConfig {
        bin_width: args.bin_width.or(file_cfg.bin_width).unwrap_or(defaults.bin_width),
        split_fraction: args
            .split_fraction
            .or(file_cfg.split_fraction)
            .unwrap_or(defaults.split_fraction),
        ar_order: args.ar_order.or(file_cfg.ar_order).unwrap_or(defaults.ar_order),
        rbo_p: args.rbo_p.or(file_cfg.rbo_p).unwrap_or(defaults.rbo_p),
        decay_half_life: args
            .half_life
            .or(file_cfg.half_life)
            .unwrap_or(defaults.decay_half_life),
    };

    let (seq, texts) = read_dataset(&args.dataset)?;
    let mut models: BTreeMap<&'static str, ModelFile> = BTreeMap::new();
    for (key, path) in [
        ("JIM", &args.model_jim),
        ("JIM-G", &args.model_jim_g),
        ("IIM-approx", &args.model_iim),
    ] {
        if let Some(path) = path {
            let model = read_model(path)?;
            if model.params.k() != seq.k {
                return Err(JimError::InvalidParameter(format!(
                    "model {} has k={} but dataset has k={}",
                    path.display(),
                    model.params.k(),
                    seq.k
                )));
            }
            models.insert(key, model);
        }
    }

    let query_level = args.task >= 3;
    let frame = if query_level {
        bin_counts_queries(&seq, &texts, cfg.bin_width, None)?
    } else {
        bin_counts(&seq, cfg.bin_width)?
    };
    let n_bins = frame.n_bins();
    let split_bin = ((n_bins as f64 * cfg.split_fraction).floor() as usize)
        .clamp(1, n_bins.saturating_sub(1).max(1));
    if split_bin >= n_bins {
        return Err(JimError::InsufficientData(
            "dataset too short to hold out a test span".into(),
        ));
    }

    let mut runs: Vec<MethodRun> = Vec::new();
    for &method in &methods {
        let source = match method {
            Method::Nf => ScoreSource::NaiveFrequency,
            Method::Ar => ScoreSource::Autoregression { differenced: false },
            Method::Ard => ScoreSource::Autoregression { differenced: true },
            Method::Var => ScoreSource::VectorAutoregression,
            Method::Oracle => ScoreSource::Oracle,
            Method::IimApprox | Method::Jim | Method::JimG => {
                let params = method.model_params(&models)?.expect("model-backed method");
                if query_level {
                    ScoreSource::ModelQueryLevel {
                        params,
                        seq: &seq,
                        texts: &texts,
                    }
                } else {
                    ScoreSource::Model { params, seq: &seq }
                }
            }
        };
        let output = run_task(&source, &frame, split_bin, &cfg)?;
        let (aggregates, per_bin) = match args.task {
            1 | 3 => {
                let m = ranking_metrics(&output, cfg.rbo_p)?;
                let per_bin: Vec<f64> = output
                    .predicted
                    .iter()
                    .zip(&output.actual)
                    .map(|(p, a)| {
                        let hit = crate::forecast::argmax_label(&output.labels, p)
                            == crate::forecast::argmax_label(&output.labels, a);
                        if hit {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (vec![("accuracy", m.accuracy, m.n_bins)], per_bin)
            }
            2 | 4 => {
                let m = ranking_metrics(&output, cfg.rbo_p)?;
                let per_bin = m.per_bin_ndcg.clone();
                (
                    vec![
                        ("ndcg", m.ndcg_mean, m.n_bins),
                        ("ndcg_informative", m.ndcg_informative, m.n_informative),
                        ("rbo", m.rbo_mean, m.n_bins),
                    ],
                    per_bin,
                )
            }
            5 => {
                let (per_bin, mrr, n) = qac_evaluate(&output);
                (vec![("mrr", mrr, n)], per_bin)
            }
            _ => unreachable!(),
        };
        runs.push(MethodRun {
            method,
            output,
            aggregates,
            per_bin,
        });
    }

    if let Some(path) = &args.out_csv {
        let mut csv = String::from("bin,method,task,channel_or_query,predicted,actual\n");
        for run in &runs {
            for (i, &bin) in run.output.bins.iter().enumerate() {
                for (c, label) in run.output.labels.iter().enumerate() {
                    writeln!(
                        csv,
                        "{bin},{},{},{},{},{}",
                        run.method.name(),
                        args.task,
                        csv_field(label),
                        sig(run.output.predicted[i][c]),
                        sig(run.output.actual[i][c]),
                    )
                    .unwrap();
                }
            }
        }
        write_text(path, &csv)?;
    }
    if let Some(path) = &args.out_json {
        let mut json = String::from("[");
        let mut first = true;
        for run in &runs {
            for (metric, value, n_bins) in &run.aggregates {
                if !first {
                    json.push(',');
                }
                first = false;
                write!(
                    json,
                    "{{\"task\":{},\"method\":\"{}\",\"metric\":\"{metric}\",\"value\":{},\"n_bins\":{n_bins}}}",
                    args.task,
                    run.method.name(),
                    sig(*value),
                )
                .unwrap();
            }
        }
        json.push_str("]\n");
        write_text(path, &json)?;
    }

    let mut out = String::new();
    writeln!(
        out,
        "task {} over {} test bins (split at bin {split_bin})",
        args.task,
        n_bins - split_bin
    )
    .unwrap();
    for run in &runs {
        let parts: Vec<String> = run
            .aggregates
            .iter()
            .map(|(m, v, _)| format!("{m} {}", sig(*v)))
            .collect();
        writeln!(out, "{}: {}", run.method.name(), parts.join(", ")).unwrap();
    }
    if let Some(pair) = &args.compare {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| JimError::Config("--compare expects \"A,B\"".into()))?;
        let find = |name: &str| -> Result<&MethodRun> {
            let target = Method::parse(name)?;
            runs.iter()
                .find(|r| r.method == target)
                .ok_or_else(|| JimError::Config(format!("method {name} not in --methods")))
        };
        let ra = find(a.trim())?;
        let rb = find(b.trim())?;
        let w = wilcoxon_signed_rank(&ra.per_bin, &rb.per_bin)?;
        writeln!(
            out,
            "signed-rank {} vs {}: statistic {}, significant at 0.05: {}, n {}",
            ra.method.name(),
            rb.method.name(),
            sig(w.statistic),
            w.significant,
            w.n_used
        )
        .unwrap();
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| JimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_trace(args: &TraceArgs, file_cfg: &FileConfig) -> Result<String> {
    let model = read_model(&args.model)?;
    let (seq, _texts) = read_dataset(&args.dataset)?;
    let grid_step = args.grid_step.or(file_cfg.grid_step).unwrap_or(1.0);
    let trace = intensity_trace(&model.params, &seq, grid_step)?;
    let counts = hourly_counts(&seq);
    let k = seq.k;
    let mut csv = String::from("time");
    for j in 0..k {
        write!(csv, ",intensity_{j}").unwrap();
    }
    for j in 0..k {
        write!(csv, ",count_{j}").unwrap();
    }
    csv.push('\n');
    for (i, &t) in trace.times.iter().enumerate() {
        write!(csv, "{}", format_sig(t, 10)).unwrap();
        for j in 0..k {
            write!(csv, ",{}", format_sig(trace.values[i][j], 10)).unwrap();
        }
        let bin = (((t - seq.t_start).floor() as usize).min(counts.n_bins() - 1)).max(0);
        for j in 0..k {
            write!(csv, ",{}", counts.series[bin][j] as u64).unwrap();
        }
        csv.push('\n');
    }
    write_text(&args.out, &csv)?;
    Ok(format!(
        "wrote {} trace rows to {}\n",
        trace.times.len(),
        args.out.display()
    ))
}

fn hourly_counts(seq: &PointSequence) -> ForecastFrame {
    bin_counts(seq, 1.0).expect("hourly binning of a valid sequence")
}

fn cmd_report(args: &ReportArgs) -> Result<String> {
    let model = read_model(&args.model)?;
    let summary = influence_summary(&model.params)?;
    let mut out = String::new();
    writeln!(out, "k {}", model.params.k()).unwrap();
    writeln!(out, "spectral radius {}", sig(summary.spectral_radius)).unwrap();
    let avg: Vec<String> = summary.avg_influence.iter().map(|v| sig(*v)).collect();
    writeln!(out, "average influence [{}]", avg.join(", ")).unwrap();
    writeln!(
        out,
        "direct influence mean {}, indirect influence mean {}",
        sig(summary.direct_mean),
        sig(summary.indirect_mean)
    )
    .unwrap();
    writeln!(
        out,
        "fit objective {} (converged: {}, iterations {})",
        sig(model.objective),
        model.converged,
        model.iterations
    )
    .unwrap();
    if let Some(path) = &args.dataset {
        let (seq, _texts) = read_dataset(path)?;
        let ll = log_likelihood(&model.params, &seq)?;
        writeln!(out, "log-likelihood on dataset {}", sig(ll)).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!(Method::parse("nf").unwrap(), Method::Nf);
        assert_eq!(Method::parse("JIM-G").unwrap(), Method::JimG);
        assert_eq!(Method::parse("iim-approx").unwrap(), Method::IimApprox);
        assert!(Method::parse("bogus").is_err());
    }

    #[test]
    fn config_parsing_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "threshold = 0.5\nseed = 7\n").unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.threshold, Some(0.5));
        assert_eq!(cfg.seed, Some(7));
        std::fs::write(&path, "not_a_key = 1\n").unwrap();
        assert!(load_config(&path).is_err());
    }

    #[test]
    fn csv_field_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
