//! Experiment runner for the routing-oblivious measurement library.
//!
//! Subcommands: `generate` synthetic traces, `params` for the accuracy
//! formulas, `run` for a full experiment from a TOML manifest, and `truth`
//! for exact ground truth of a trace file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aroma::controller::AnalysisParams;
use aroma::sim::{
    compute_ground_truth, gen_zipf_trace, run_experiment, write_report_json, write_series_csv,
    ExperimentConfig, Trace, TruthSummary,
};

#[derive(Parser)]
#[command(name = "aroma", version, about = "Routing-oblivious network measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace file.
    Generate(GenerateArgs),
    /// Print the sample size, slot count, and convergence bound for an
    /// accuracy target.
    Params(ParamsArgs),
    /// Run an experiment described by a TOML manifest.
    Run(RunArgs),
    /// Compute exact ground truth for a trace file.
    Truth(TruthArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Packet count (plain or scientific, e.g. 1e6).
    #[arg(long, value_parser = parse_count)]
    n: u64,
    /// Zipf skew; 0 draws flows uniformly.
    #[arg(long)]
    skew: f64,
    /// Number of distinct flows (plain or scientific).
    #[arg(long, value_parser = parse_count)]
    universe: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output trace path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Slot over-provisioning factor (>= 1).
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment manifest (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report output path.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    /// Long-format CSV output path.
    #[arg(long, default_value = "series.csv")]
    series: PathBuf,
    /// Override the manifest's sketch seed.
    #[arg(long)]
    sketch_seed: Option<u64>,
    /// Override the manifest's trace seed.
    #[arg(long)]
    trace_seed: Option<u64>,
    /// Override the manifest's routing seed.
    #[arg(long)]
    routing_seed: Option<u64>,
    /// Override the manifest's worker count.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct TruthArgs {
    /// Trace file to evaluate.
    #[arg(long)]
    trace: PathBuf,
    /// Heavy-hitter fraction.
    #[arg(long)]
    theta: f64,
    /// Superspreader distinct-destination threshold.
    #[arg(long)]
    psi: f64,
    /// Source prefix lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32")]
    prefix_lengths: Vec<u8>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Accepts `12345` or `1e6`-style counts.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("{s:?} is not a count (try 100000 or 1e5)"))?;
    if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(63) {
        return Err(format!("{s:?} is not a whole non-negative count"));
    }
    Ok(v as u64)
}

/// Stable mapping from error kind to exit code, with a machine-readable
/// category on stderr.
fn fail(err: &aroma::Error) -> ExitCode {
    let (code, category) = match err {
        aroma::Error::InvalidParam(_) => (2, "invalid-parameter"),
        aroma::Error::Io(_) => (3, "io"),
        aroma::Error::Format(_) => (4, "malformed-data"),
        aroma::Error::Incompatible(_)
        | aroma::Error::WrongMode(_)
        | aroma::Error::EmptySample
        | aroma::Error::NotFinalized => (5, "internal"),
    };
    eprintln!("error: {category}: {err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Params(args) => cmd_params(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Truth(args) => cmd_truth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn cmd_generate(args: &GenerateArgs) -> aroma::Result<()> {
    let trace = gen_zipf_trace(args.n, args.skew, args.universe, args.seed)?;
    trace.save(&args.out)?;
    println!(
        "wrote {} packets over {} flows to {}",
        trace.len(),
        args.universe,
        args.out.display()
    );
    Ok(())
}

fn cmd_params(args: &ParamsArgs) -> aroma::Result<()> {
    let params = AnalysisParams::derive(args.epsilon, args.delta, args.alpha)?;
    println!("sample_size_m = {}", params.sample_size);
    println!(
        "slots = 2^{} = {} (alpha * M = {})",
        params.slot_bits,
        1u64 << params.slot_bits,
        (args.alpha * params.sample_size as f64).ceil() as u64
    );
    println!("convergence_packets = {}", params.convergence_packets());
    Ok(())
}

fn load_config(path: &Path) -> aroma::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| aroma::Error::Format(format!("{}: {e}", path.display())))
}

fn cmd_run(args: &RunArgs) -> aroma::Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.sketch_seed {
        config.sketch.seed = seed;
    }
    if let Some(seed) = args.trace_seed {
        config.trace.seed = seed;
    }
    if let Some(seed) = args.routing_seed {
        config.routing.seed = seed;
    }
    if let Some(par) = args.parallelism {
        config.run.parallelism = par;
    }
    let report = run_experiment(&config)?;
    write_report_json(&report, &args.report)?;
    write_series_csv(&report, &args.series)?;
    println!(
        "report: {}\nseries: {}",
        args.report.display(),
        args.series.display()
    );
    Ok(())
}

fn cmd_truth(args: &TruthArgs) -> aroma::Result<()> {
    let trace = Trace::load(&args.trace)?;
    let truth = compute_ground_truth(&trace, args.theta, args.psi, &args.prefix_lengths)?;
    let summary = TruthSummary::from(&truth);
    let mut json =
        serde_json::to_string_pretty(&summary).map_err(|e| aroma::Error::Format(e.to_string()))?;
    json.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}
