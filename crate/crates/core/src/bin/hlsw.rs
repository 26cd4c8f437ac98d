//! Command-line front end: run one simulation, sweep epoch lengths,
//! generate synthetic traces, or analyze a trace's hot lines.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 internal
//! invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use hlsw_core::config::{load_energy_file, FileDefaults};
use hlsw_core::report::{
    emit_csv, emit_hot_lines_csv, emit_json, emit_sweep_csv, hot_line_stats, sweep_epoch,
};
use hlsw_core::trace::{self, SyntheticSpec, TraceKind};
use hlsw_core::{
    CacheConfig, CounterMode, DesignKind, Error, PolicyConfig, SimConfig, Simulator,
};

#[derive(Parser)]
#[command(
    name = "hlsw",
    version,
    about = "Trace-driven L1 cache simulator with hot-line migration and energy accounting"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation over a trace and emit a report.
    Run(RunArgs),
    /// Run one simulation per epoch length (threshold = epoch/2).
    Sweep(SweepArgs),
    /// Generate a synthetic trace file.
    Gen(GenArgs),
    /// Compute offline hot-line statistics for a trace.
    Analyze(AnalyzeArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SimFlags {
    /// Lookup design: sequential, parallel, prediction-static (alias:
    /// prediction), prediction-pc, or filter.
    #[arg(long)]
    design: Option<String>,

    /// Enable or disable hot-line migration.
    #[arg(long, value_enum)]
    holiswap: Option<OnOff>,

    /// Epoch length in set accesses.
    #[arg(long)]
    epoch: Option<u32>,

    /// Hit count at which a line is considered hot.
    #[arg(long)]
    threshold: Option<u32>,

    /// Counter representation: exact or log.
    #[arg(long)]
    counters: Option<String>,

    /// Seed for the counter RNG (and the documented default is 0).
    #[arg(long)]
    seed: Option<u64>,

    /// Cache capacity in KiB.
    #[arg(long)]
    cache_kb: Option<u64>,

    #[arg(long)]
    line_bytes: Option<u64>,

    /// Associativity (ways).
    #[arg(long)]
    assoc: Option<usize>,

    /// Energy source file with a [table] or [geometry] section.
    #[arg(long)]
    geometry: Option<PathBuf>,

    /// Miss penalty in cycles.
    #[arg(long)]
    miss_penalty: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    sim: SimFlags,

    /// Trace file (text, or binary with the HLSW1 magic).
    #[arg(long)]
    trace: PathBuf,

    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sim: SimFlags,

    #[arg(long)]
    trace: PathBuf,

    /// Comma-separated epoch lengths, e.g. 4,16,64,256,1024.
    #[arg(long)]
    epochs: String,

    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Workload shape.
    #[arg(long)]
    kind: String,

    /// Number of records.
    #[arg(long)]
    n: usize,

    /// Address span in bytes.
    #[arg(long)]
    span: Option<u64>,

    /// Zipf skew parameter.
    #[arg(long)]
    alpha: Option<f64>,

    /// Hot lines per set (hotset kind).
    #[arg(long)]
    hot_lines: Option<usize>,

    /// Fraction of each set's references that hit its hot lines.
    #[arg(long)]
    hot_fraction: Option<f64>,

    #[arg(long)]
    store_ratio: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    line_bytes: Option<u64>,

    /// Set count the hotset generator lays lines out for.
    #[arg(long)]
    sets: Option<u64>,

    /// Write the packed binary format instead of text.
    #[arg(long)]
    binary: bool,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    trace: PathBuf,

    #[arg(long)]
    cache_kb: Option<u64>,

    #[arg(long)]
    line_bytes: Option<u64>,

    #[arg(long)]
    assoc: Option<usize>,

    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Input(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(1),
            Failure::Input(_) => ExitCode::from(2),
            Failure::Internal(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Internal(m) => m,
        }
    }
}

/// Classify errors that occur after flag validation: internal invariant
/// violations keep their own exit code, everything else is an input problem.
fn input_failure(err: Error) -> Failure {
    match err {
        Error::Internal(m) => Failure::Internal(m),
        other => Failure::Input(other.to_string()),
    }
}

fn usage_failure(err: Error) -> Failure {
    match err {
        Error::Internal(m) => Failure::Internal(m),
        other => Failure::Usage(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Analyze(args) => cmd_analyze(args),
    }
}

fn load_defaults() -> Result<FileDefaults, Failure> {
    FileDefaults::from_env().map_err(input_failure)
}

fn cache_config(
    cache_kb: Option<u64>,
    line_bytes: Option<u64>,
    assoc: Option<usize>,
    defaults: &FileDefaults,
) -> Result<CacheConfig, Failure> {
    let base = CacheConfig::default();
    let capacity = cache_kb
        .or(defaults.cache_kb)
        .map(|kb| kb * 1024)
        .unwrap_or(base.capacity_bytes);
    let line = line_bytes
        .or(defaults.line_bytes)
        .unwrap_or(base.line_bytes);
    let ways = assoc.or(defaults.assoc).unwrap_or(base.associativity);
    CacheConfig::new(capacity, line, ways).map_err(usage_failure)
}

/// Merge flags over file defaults over built-in defaults into a validated
/// simulation config.
fn build_sim_config(flags: &SimFlags, defaults: &FileDefaults) -> Result<SimConfig, Failure> {
    let cache = cache_config(flags.cache_kb, flags.line_bytes, flags.assoc, defaults)?;

    let design: DesignKind = flags
        .design
        .clone()
        .or_else(|| defaults.design.clone())
        .map_or(Ok(DesignKind::Sequential), |s| s.parse())
        .map_err(usage_failure)?;

    let mode: CounterMode = flags
        .counters
        .clone()
        .or_else(|| defaults.counters.clone())
        .map_or(Ok(CounterMode::Logarithmic), |s| s.parse())
        .map_err(usage_failure)?;

    let base_policy = PolicyConfig::default();
    let policy = PolicyConfig {
        epoch: flags.epoch.or(defaults.epoch).unwrap_or(base_policy.epoch),
        threshold: flags
            .threshold
            .or(defaults.threshold)
            .unwrap_or(base_policy.threshold),
        mode,
        seed: flags.seed.or(defaults.seed).unwrap_or(0),
        enabled: match flags.holiswap {
            Some(OnOff::On) => true,
            Some(OnOff::Off) => false,
            None => defaults.holiswap.unwrap_or(true),
        },
    };

    let mut timing = defaults
        .timing
        .clone()
        .unwrap_or_default()
        .apply(hlsw_core::TimingParams::default());
    if let Some(mp) = flags.miss_penalty {
        timing.miss_penalty = mp;
    }

    let table = match flags.geometry.clone().or_else(|| defaults.geometry.clone()) {
        Some(path) => load_energy_file(path, cache.associativity).map_err(input_failure)?,
        None => {
            if cache.associativity != 4 {
                return Err(Failure::Usage(format!(
                    "the built-in energy table covers 4 ways; pass --geometry for {} ways",
                    cache.associativity
                )));
            }
            hlsw_core::EnergyTable::default()
        }
    };

    let cfg = SimConfig {
        cache,
        policy,
        timing,
        design,
        table,
        filter_l1_parallel: defaults.filter_l1_parallel.unwrap_or(false),
    };
    cfg.validate().map_err(usage_failure)?;
    Ok(cfg)
}

fn pick_format(
    flag: Option<OutputFormat>,
    defaults: &FileDefaults,
    fallback: OutputFormat,
) -> Result<OutputFormat, Failure> {
    match flag {
        Some(f) => Ok(f),
        None => match defaults.format.as_deref() {
            None => Ok(fallback),
            Some("json") => Ok(OutputFormat::Json),
            Some("csv") => Ok(OutputFormat::Csv),
            Some(other) => Err(Failure::Input(format!(
                "defaults file names unknown format `{other}`"
            ))),
        },
    }
}

fn write_output(out: Option<&PathBuf>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| Failure::Input(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let defaults = load_defaults()?;
    let cfg = build_sim_config(&args.sim, &defaults)?;
    let format = pick_format(args.format, &defaults, OutputFormat::Json)?;
    let records = trace::load_trace(&args.trace).map_err(input_failure)?;

    let mut sim = Simulator::new(cfg).map_err(usage_failure)?;
    sim.run(&records).map_err(input_failure)?;
    let report = sim.report(&records).map_err(input_failure)?;

    let rendered = match format {
        OutputFormat::Json => emit_json(&report),
        OutputFormat::Csv => emit_csv(&report),
    };
    write_output(args.out.as_ref(), &rendered)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let defaults = load_defaults()?;
    let cfg = build_sim_config(&args.sim, &defaults)?;
    let format = pick_format(args.format, &defaults, OutputFormat::Csv)?;
    let epochs: Vec<u32> = args
        .epochs
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| Failure::Usage(format!("bad epoch value `{tok}`")))
        })
        .collect::<Result<_, _>>()?;
    let records = trace::load_trace(&args.trace).map_err(input_failure)?;

    let sweep = sweep_epoch(&cfg, &epochs, &records).map_err(input_failure)?;
    let rendered = match format {
        OutputFormat::Json => emit_json(&sweep),
        OutputFormat::Csv => emit_sweep_csv(&sweep),
    };
    write_output(args.out.as_ref(), &rendered)
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let kind: TraceKind = args.kind.parse().map_err(usage_failure)?;
    let base = SyntheticSpec::default();
    let spec = SyntheticSpec {
        kind,
        n_records: args.n,
        address_span: args.span.unwrap_or(base.address_span),
        zipf_alpha: args.alpha.unwrap_or(base.zipf_alpha),
        hot_lines: args.hot_lines.unwrap_or(base.hot_lines),
        hot_fraction: args.hot_fraction.unwrap_or(base.hot_fraction),
        store_ratio: args.store_ratio.unwrap_or(base.store_ratio),
        line_bytes: args.line_bytes.unwrap_or(base.line_bytes),
        set_count: args.sets.unwrap_or(base.set_count),
    };
    let records = trace::generate(&spec, args.seed.unwrap_or(0)).map_err(usage_failure)?;

    let mut buf = Vec::new();
    if args.binary {
        trace::write_binary(&records, &mut buf).map_err(input_failure)?;
    } else {
        trace::write_text(&records, &mut buf).map_err(input_failure)?;
    }
    std::fs::write(&args.out, buf)
        .map_err(|e| Failure::Input(format!("writing {}: {e}", args.out.display())))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let defaults = load_defaults()?;
    let cache = cache_config(args.cache_kb, args.line_bytes, args.assoc, &defaults)?;
    let format = pick_format(args.format, &defaults, OutputFormat::Json)?;
    let records = trace::load_trace(&args.trace).map_err(input_failure)?;
    let stats = hot_line_stats(&records, &cache).map_err(input_failure)?;

    let rendered = match format {
        OutputFormat::Json => emit_json(&serde_json::json!({
            "schema": hlsw_core::report::REPORT_SCHEMA,
            "hot_lines": stats,
        })),
        OutputFormat::Csv => emit_hot_lines_csv(&stats),
    };
    write_output(args.out.as_ref(), &rendered)
}
