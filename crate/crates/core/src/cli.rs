//! Command-line front end: argument definitions and the five subcommands.
//!
//! Each `cmd_*` function is pure with respect to its inputs and returns the
//! rendered output; the binary writes it to stdout or the `--out` files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{self, FileConfig, Overrides, ResolvedParams};
use crate::error::{Error, Result};
use crate::fault::{self, DetectorConfig, SeriesFormat, WindowState};
use crate::policy::{self, CostParams, FilterRule, ThresholdPolicy};
use crate::report::{self, csv_emissions, Emission, OutputFormat, Table};
use crate::schedulers::{self, OmaVariant, OmdOrder, PolicyKind, SimulationReport};
use crate::trace::{self, Trace, TraceFormat, TraceKind};

#[derive(Debug, Parser)]
#[command(name = "hi-sim", version, about = "Trace-driven hierarchical inference simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with t_local_ms, t_offload_ms, bw_mean, bw_sd, bw_n, seed.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[arg(long, global = true)]
    pub t_local_ms: Option<f64>,
    #[arg(long, global = true)]
    pub t_offload_ms: Option<f64>,
    #[arg(long, global = true)]
    pub bw_mean: Option<f64>,
    #[arg(long, global = true)]
    pub bw_sd: Option<f64>,
    #[arg(long, global = true)]
    pub bw_n: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesFormatArg {
    Csv,
    I16le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum PolicyArg {
    Hi,
    NoOffload,
    FullOffload,
    Omd,
    OmaRandom,
    OmaWorstCase,
    DnnPartition,
    Filter,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one or more policies on a trace.
    Simulate(SimulateArgs),
    /// Cost curve over every candidate threshold plus a confidence histogram.
    SweepTheta(SweepArgs),
    /// All policies across a grid of offloading costs.
    Compare(CompareArgs),
    /// Windowed-average fault detection on a vibration series.
    Fault(FaultArgs),
    /// Per-split latency of a layer profile and the best split.
    Partition(PartitionArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Defaults to the file extension (`.csv` or JSONL otherwise).
    #[arg(long, value_enum)]
    pub trace_format: Option<TraceFormatArg>,
}

impl TraceArgs {
    fn load(&self) -> Result<Trace> {
        let format = match self.trace_format {
            Some(TraceFormatArg::Jsonl) => TraceFormat::Jsonl,
            Some(TraceFormatArg::Csv) => TraceFormat::Csv,
            None => TraceFormat::from_path(&self.trace),
        };
        trace::parse_trace(&self.trace, format)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Fixed threshold for `hi`; the cost-optimal one is searched otherwise.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Repeatable or comma-separated. Defaults to every policy valid for the trace kind.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub policy: Vec<PolicyArg>,
    /// Time budget for OMA; defaults to the threshold policy's makespan.
    #[arg(long)]
    pub budget_ms: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Comma-separated offloading costs.
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub beta_grid: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FaultArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, value_enum, default_value_t = SeriesFormatArg::Csv)]
    pub series_format: SeriesFormatArg,
    #[arg(long)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = fault::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = fault::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Sensors streaming at this rate, for the bandwidth summary.
    #[arg(long, default_value_t = 1)]
    pub sensors: u64,
    #[arg(long, default_value_t = 2)]
    pub bytes_per_sample: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    /// CSV with header `layer,device_ms,server_ms,output_mb`.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = crate::fixtures::EFFICIENTNET_INPUT_MB)]
    pub input_mb: f64,
    /// Measured end-to-end full-offload time per input.
    #[arg(long, default_value_t = crate::fixtures::EFFICIENTNET_REMOTE_ONLY_MS)]
    pub remote_only_ms: f64,
}

pub fn resolve_params(common: &CommonArgs) -> Result<ResolvedParams> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    config::resolve(
        &file,
        &Overrides {
            t_local_ms: common.t_local_ms,
            t_offload_ms: common.t_offload_ms,
            bw_mean: common.bw_mean,
            bw_sd: common.bw_sd,
            bw_n: common.bw_n,
            seed: common.seed,
        },
    )
}

fn config_beta(beta: f64) -> Result<CostParams> {
    CostParams::new(beta).map_err(|e| Error::Config(e.to_string()))
}

/// Executes a parsed command line and returns what should be written where.
pub fn run(cli: &Cli) -> Result<Vec<Emission>> {
    let params = resolve_params(&cli.common)?;
    let format = OutputFormat::from(cli.common.format);
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &params, format, out),
        Command::SweepTheta(a) => cmd_sweep_theta(a, format, out),
        Command::Compare(a) => cmd_compare(a, &params, format, out),
        Command::Fault(a) => cmd_fault(a, format, out),
        Command::Partition(a) => cmd_partition(a, &params, format, out),
    }
}

fn single(out: Option<&Path>, contents: String) -> Vec<Emission> {
    vec![Emission {
        path: out.map(Path::to_path_buf),
        contents,
    }]
}

fn rows_output<T: Serialize>(rows: &[T], format: OutputFormat, out: Option<&Path>) -> Result<Vec<Emission>> {
    let contents = match format {
        OutputFormat::Csv => report::csv_table(rows)?,
        OutputFormat::Json => report::json_value(rows)?,
    };
    Ok(single(out, contents))
}

/// Relevance-filter aggregate as written by `simulate` on binary traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterRow {
    pub policy: &'static str,
    pub beta: f64,
    pub n_samples: usize,
    pub n_relevant: usize,
    pub offloaded_count: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub zero_relevant: bool,
    pub cost_beta_coefficient: usize,
    pub cost_constant: usize,
    pub cost: f64,
}

pub fn cmd_simulate(
    args: &SimulateArgs,
    params: &ResolvedParams,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<Vec<Emission>> {
    let costs = config_beta(args.beta)?;
    let theta = args
        .theta
        .map(|t| ThresholdPolicy::new(t).map_err(|e| Error::Config(e.to_string())))
        .transpose()?;
    let trace = args.trace.load()?;
    match trace.kind() {
        TraceKind::Multiclass => {
            let rows = simulate_multiclass(&trace, args, costs, theta, params)?;
            rows_output(&rows, format, out)
        }
        TraceKind::Binary => {
            let rows = simulate_binary(&trace, &args.policy, costs)?;
            rows_output(&rows, format, out)
        }
    }
}

fn dedup_policies(policies: &[PolicyArg], default: &[PolicyArg]) -> Vec<PolicyArg> {
    let src = if policies.is_empty() { default } else { policies };
    let mut seen = Vec::new();
    for p in src {
        if !seen.contains(p) {
            seen.push(*p);
        }
    }
    seen
}

fn simulate_multiclass(
    trace: &Trace,
    args: &SimulateArgs,
    costs: CostParams,
    theta: Option<ThresholdPolicy>,
    params: &ResolvedParams,
) -> Result<Vec<SimulationReport>> {
    use PolicyArg::*;
    let timing = &params.timing;
    let policies = dedup_policies(
        &args.policy,
        &[Hi, NoOffload, FullOffload, Omd, OmaRandom, OmaWorstCase, DnnPartition],
    );
    let hi = schedulers::hi(trace, costs, timing, theta)?;
    let budget = args.budget_ms.unwrap_or(hi.makespan_ms);
    if !(budget >= 0.0) {
        return Err(Error::Config(format!("time budget must be non-negative, got {budget}")));
    }
    let mut rows = Vec::with_capacity(policies.len());
    for p in policies {
        let row = match p {
            Hi => hi.clone(),
            NoOffload => schedulers::no_offload(trace, costs, timing)?,
            FullOffload => schedulers::full_offload(trace, costs, timing)?,
            DnnPartition => SimulationReport {
                policy: PolicyKind::DnnPartition,
                ..schedulers::full_offload(trace, costs, timing)?
            },
            Omd => schedulers::omd(trace, costs, timing, OmdOrder::LowestId)?,
            OmaRandom => {
                schedulers::oma(trace, costs, timing, budget, OmaVariant::Random { seed: params.seed })?
                    .report
            }
            OmaWorstCase => schedulers::oma(trace, costs, timing, budget, OmaVariant::WorstCase)?.report,
            Filter => {
                return Err(Error::KindMismatch {
                    expected: "binary",
                    found: "multiclass",
                })
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn simulate_binary(trace: &Trace, policies: &[PolicyArg], costs: CostParams) -> Result<Vec<FilterRow>> {
    use PolicyArg::*;
    let mut rows = Vec::new();
    for p in dedup_policies(policies, &[Filter, FullOffload]) {
        let (name, rule) = match p {
            Filter | Hi => ("filter", FilterRule::Threshold),
            FullOffload => ("full-offload", FilterRule::FullOffload),
            NoOffload => ("no-offload", FilterRule::NoOffload),
            Omd | OmaRandom | OmaWorstCase | DnnPartition => {
                return Err(Error::KindMismatch {
                    expected: "multiclass",
                    found: "binary",
                })
            }
        };
        let o = policy::evaluate_filter_rule(trace, costs, rule)?;
        rows.push(FilterRow {
            policy: name,
            beta: costs.beta(),
            n_samples: o.n_samples,
            n_relevant: o.n_relevant,
            offloaded_count: o.offloaded_count,
            true_positives: o.true_positives,
            false_positives: o.false_positives,
            false_negatives: o.false_negatives,
            accuracy: o.accuracy,
            zero_relevant: o.zero_relevant,
            cost_beta_coefficient: o.cost_beta_coefficient(),
            cost_constant: o.cost_constant(),
            cost: o.total_cost(costs.beta()),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub theta: f64,
    pub beta: f64,
    pub offloaded_count: usize,
    pub local_errors: usize,
    pub remote_errors: usize,
    pub errors_total: usize,
    pub accuracy: f64,
    pub cost_beta_coefficient: usize,
    pub cost_constant: usize,
    pub cost: f64,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub correct: usize,
    pub incorrect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub curve: Vec<CurveRow>,
    pub histogram: Vec<HistogramRow>,
}

/// Counts of locally correct and incorrect samples per confidence bin over
/// `[0, 1]`; a confidence of exactly 1 falls in the last bin.
pub fn confidence_histogram(trace: &Trace, bin_width: f64) -> Result<Vec<HistogramRow>> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::Config(format!("bin width must lie in (0, 1], got {bin_width}")));
    }
    let samples = trace.as_multiclass()?;
    let bins = (1.0 / bin_width - 1e-9).ceil() as usize;
    let mut rows: Vec<HistogramRow> = (0..bins)
        .map(|i| HistogramRow {
            bin_lo: i as f64 * bin_width,
            bin_hi: ((i + 1) as f64 * bin_width).min(1.0),
            correct: 0,
            incorrect: 0,
        })
        .collect();
    for s in samples {
        let i = ((s.confidence / bin_width) as usize).min(bins - 1);
        if s.local_correct() {
            rows[i].correct += 1;
        } else {
            rows[i].incorrect += 1;
        }
    }
    Ok(rows)
}

pub fn sweep_theta(trace: &Trace, beta: f64, bin_width: f64) -> Result<SweepOutput> {
    let costs = config_beta(beta)?;
    let sweep = policy::sweep_thresholds(trace, costs)?;
    let best = policy::optimal_threshold(trace, costs)?;
    let curve = sweep
        .iter()
        .map(|c| CurveRow {
            theta: c.theta,
            beta,
            offloaded_count: c.outcome.offloaded_count,
            local_errors: c.outcome.local_errors,
            remote_errors: c.outcome.remote_errors,
            errors_total: c.outcome.errors(),
            accuracy: c.outcome.accuracy,
            cost_beta_coefficient: c.outcome.cost_beta_coefficient(),
            cost_constant: c.outcome.cost_constant(),
            cost: c.cost,
            optimal: c.theta == best.theta,
        })
        .collect();
    Ok(SweepOutput {
        curve,
        histogram: confidence_histogram(trace, bin_width)?,
    })
}

pub fn cmd_sweep_theta(args: &SweepArgs, format: OutputFormat, out: Option<&Path>) -> Result<Vec<Emission>> {
    let trace = args.trace.load()?;
    let sweep = sweep_theta(&trace, args.beta, args.bin_width)?;
    match format {
        OutputFormat::Json => Ok(single(out, report::json_value(&sweep)?)),
        OutputFormat::Csv => Ok(csv_emissions(
            out,
            report::csv_table(&sweep.curve)?,
            vec![Table {
                name: "hist",
                csv: report::csv_table(&sweep.histogram)?,
            }],
        )),
    }
}

pub fn cmd_compare(
    args: &CompareArgs,
    params: &ResolvedParams,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<Vec<Emission>> {
    for &b in &args.beta_grid {
        config_beta(b)?;
    }
    let trace = args.trace.load()?;
    let rows = schedulers::compare_all(&trace, &params.timing, &args.beta_grid, params.seed)?;
    rows_output(&rows, format, out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRow {
    pub index: usize,
    pub average: f64,
    pub decision: WindowState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultSummary {
    pub windows: usize,
    pub not_normal: usize,
    pub offload_fraction: f64,
    pub raw_bandwidth_bps: f64,
    pub transmitted_bps: f64,
    pub bandwidth_saved_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultOutput {
    pub windows: Vec<WindowRow>,
    pub summary: FaultSummary,
}

pub fn detect_faults(
    series: &fault::VibrationSeries,
    detector: &DetectorConfig,
    sensors: u64,
    bytes_per_sample: u64,
) -> Result<FaultOutput> {
    let averages = fault::windowed_averages(series, detector)?;
    let decisions = fault::classify_windows(&averages, detector);
    let fraction = fault::offload_fraction(&decisions)?;
    let raw = fault::raw_bandwidth_bps(sensors, series.sample_rate_hz(), bytes_per_sample);
    let transmitted = raw * fraction;
    Ok(FaultOutput {
        summary: FaultSummary {
            windows: decisions.len(),
            not_normal: decisions.iter().filter(|d| **d == WindowState::NotNormal).count(),
            offload_fraction: fraction,
            raw_bandwidth_bps: raw,
            transmitted_bps: transmitted,
            bandwidth_saved_bps: raw - transmitted,
        },
        windows: averages
            .into_iter()
            .zip(decisions)
            .enumerate()
            .map(|(index, (average, decision))| WindowRow {
                index,
                average,
                decision,
            })
            .collect(),
    })
}

pub fn cmd_fault(args: &FaultArgs, format: OutputFormat, out: Option<&Path>) -> Result<Vec<Emission>> {
    let detector = DetectorConfig::new(args.window, args.threshold).map_err(|e| Error::Config(e.to_string()))?;
    let series_format = match args.series_format {
        SeriesFormatArg::Csv => SeriesFormat::Csv,
        SeriesFormatArg::I16le => SeriesFormat::I16Le,
    };
    if !(args.sample_rate > 0.0) {
        return Err(Error::Config(format!("sample rate must be positive, got {}", args.sample_rate)));
    }
    let series = fault::read_series(&args.series, series_format, args.sample_rate)?;
    let result = detect_faults(&series, &detector, args.sensors, args.bytes_per_sample)?;
    match format {
        OutputFormat::Json => Ok(single(out, report::json_value(&result)?)),
        OutputFormat::Csv => Ok(csv_emissions(
            out,
            report::csv_table(&result.windows)?,
            vec![Table {
                name: "summary",
                csv: report::csv_table(&[&result.summary])?,
            }],
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRow {
    pub split_after_layer: usize,
    pub device_ms: f64,
    pub transfer_lo_ms: f64,
    pub transfer_hi_ms: f64,
    pub server_ms: f64,
    pub latency_lo_ms: f64,
    pub latency_hi_ms: f64,
    pub latency_mid_ms: f64,
    /// Split 0 recomputed from the profile instead of the measured constant.
    pub profile_lo_ms: Option<f64>,
    pub profile_hi_ms: Option<f64>,
    pub best: bool,
}

pub fn partition_rows(eval: &schedulers::PartitionEvaluation) -> Vec<SplitRow> {
    eval.splits
        .iter()
        .map(|s| {
            let split0 = (s.split_after_layer == 0).then_some(eval.split0_from_profile);
            SplitRow {
                split_after_layer: s.split_after_layer,
                device_ms: s.device_ms,
                transfer_lo_ms: s.transfer.lo_ms,
                transfer_hi_ms: s.transfer.hi_ms,
                server_ms: s.server_ms,
                latency_lo_ms: s.latency.lo_ms,
                latency_hi_ms: s.latency.hi_ms,
                latency_mid_ms: s.latency.midpoint(),
                profile_lo_ms: split0.map(|i| i.lo_ms),
                profile_hi_ms: split0.map(|i| i.hi_ms),
                best: s.split_after_layer == eval.best.split_after_layer,
            }
        })
        .collect()
}

pub fn cmd_partition(
    args: &PartitionArgs,
    params: &ResolvedParams,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<Vec<Emission>> {
    for (flag, v) in [("--input-mb", args.input_mb), ("--remote-only-ms", args.remote_only_ms)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{flag} must be a non-negative number, got {v}")));
        }
    }
    let layers = schedulers::load_profile(&args.profile)?;
    let eval = schedulers::dnn_partition_plan(&layers, args.input_mb, &params.bandwidth, args.remote_only_ms)?;
    rows_output(&partition_rows(&eval), format, out)
}

/// Process exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        2
    } else {
        1
    }
}
