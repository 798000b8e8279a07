mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use qasa_core::analysis::{Parameter, DEFAULT_BINS, DEFAULT_OUTLIER_IQR};
use qasa_core::estimate::DEFAULT_CONFIDENCE;
use qasa_core::{ChimeraSpec, OrientationConvention};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qasa", version, about = "Single-qubit characterization of quantum annealers: simulate, fit, analyze")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample raw readout counts for every operational qubit of a chip.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit of the four model parameters per qubit.
    Fit(FitArgs),
    /// Per-field empirical effective field with confidence intervals for one qubit.
    Estimate(EstimateArgs),
    /// Chip-wide distribution summaries, orientation split and heatmaps.
    Analyze(AnalyzeArgs),
    /// Logarithmic anneal-time trend across several parameter tables.
    Sweep(SweepArgs),
}

fn chip_arg(s: &str) -> Result<String, String> {
    s.parse::<ChimeraSpec>().map(|_| s.to_string()).map_err(|e| e.to_string())
}

/// Comma-separated qubit ids.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
struct IdList(Vec<u32>);

fn id_list(s: &str) -> Result<IdList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad qubit id {t:?}")))
        .collect::<Result<_, _>>()
        .map(IdList)
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    positive_u64(s).and_then(|v| usize::try_from(v).map_err(|e| e.to_string()))
}

fn confidence_arg(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct WorkerArgs {
    /// Worker threads [default: all cores]
    #[arg(long, env = "QASA_WORKERS", value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SimulateArgs {
    /// Chip topology
    #[arg(long, default_value = "chimera:16", value_parser = chip_arg)]
    chip: String,
    /// Comma-separated ids of non-operational qubits [default: none]
    #[arg(long, value_parser = id_list)]
    exclude: Option<IdList>,
    /// Ground truth: preset:median, preset:hv-split, or a parameter table CSV
    #[arg(long, default_value = "preset:median")]
    truth: String,
    /// Lowest input field
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    h_min: f64,
    /// Highest input field
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    h_max: f64,
    /// Field spacing
    #[arg(long, default_value_t = 0.025)]
    h_step: f64,
    /// Readouts per field
    #[arg(long, default_value_t = 5_000_000, value_parser = positive_u64)]
    samples: u64,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which cell index range is vertical: lower-vertical or lower-horizontal
    #[arg(long, default_value_t = OrientationConvention::default())]
    orientation_convention: OrientationConvention,
    /// Output raw counts CSV
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitArgs {
    /// Input raw counts CSV
    #[arg(long = "in")]
    input: PathBuf,
    /// Output parameter table CSV
    #[arg(long)]
    out: PathBuf,
    /// Chip topology used for the row/col/k/orientation columns
    #[arg(long, default_value = "chimera:16", value_parser = chip_arg)]
    chip: String,
    /// Which cell index range is vertical: lower-vertical or lower-horizontal
    #[arg(long, default_value_t = OrientationConvention::default())]
    orientation_convention: OrientationConvention,
    /// Comma-separated qubit ids to fit [default: every qubit in the input]
    #[arg(long, value_parser = id_list)]
    qubits: Option<IdList>,
    /// Optimizer starting points per qubit
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
    starts: u16,
    /// Interval coverage for the per-fit goodness-of-fit diagnostic
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE, value_parser = confidence_arg)]
    confidence: f64,
    /// Exit with status 3 if any qubit fails to fit or does not converge
    #[arg(long, default_value_t = false)]
    strict: bool,
    #[command(flatten)]
    #[serde(flatten)]
    workers: WorkerArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EstimateArgs {
    /// Input raw counts CSV
    #[arg(long = "in")]
    input: PathBuf,
    /// Qubit id
    #[arg(long)]
    qubit: u32,
    /// Interval coverage
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE, value_parser = confidence_arg)]
    confidence: f64,
    /// Output curve CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct AnalyzeArgs {
    /// Input parameter table CSV
    #[arg(long)]
    params: PathBuf,
    /// Chip topology
    #[arg(long, default_value = "chimera:16", value_parser = chip_arg)]
    chip: String,
    /// Output report JSON
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = positive_usize)]
    bins: usize,
    /// Outlier fence in interquartile ranges
    #[arg(long, default_value_t = DEFAULT_OUTLIER_IQR)]
    outlier_iqr: f64,
    /// Which cell index range is vertical: lower-vertical or lower-horizontal
    #[arg(long, default_value_t = OrientationConvention::default())]
    orientation_convention: OrientationConvention,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    /// CSV with columns anneal_time_us,params_file (paths relative to this file)
    #[arg(long)]
    manifest: PathBuf,
    /// Parameter to trend: beta, b, eta or gamma
    #[arg(long, default_value_t = Parameter::Beta)]
    parameter: Parameter,
    /// Output trend CSV
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(commands::EXIT_USAGE),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
