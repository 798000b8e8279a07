use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qasa_core::analysis::{build_report, fit_log_trend, AnnealSweepPoint, SummaryOptions};
use qasa_core::estimate::{empirical_estimates, fit_chip, FitConfig};
use qasa_core::io;
use qasa_core::{presets, simulate_chip, ChimeraSpec, ChipTruth, QubitParams, SweepDesign};
use serde::Serialize;

use super::{AnalyzeArgs, Command, EstimateArgs, FitArgs, SimulateArgs, SweepArgs, WorkerArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_STRICT: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] qasa_core::Error),
    #[error("{count} qubit(s) failed to fit: {ids:?}")]
    Strict { count: usize, ids: Vec<u32> },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Strict { .. } => EXIT_STRICT,
        }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest<'a, A: Serialize> {
    command: &'a str,
    flags: &'a A,
    seed: Option<u64>,
    version: &'a str,
    duration_s: f64,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest<A: Serialize>(command: &str, flags: &A, seed: Option<u64>, out: &Path, started: Instant) -> Outcome {
    let manifest = RunManifest {
        command,
        flags,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        duration_s: started.elapsed().as_secs_f64(),
    };
    io::write_report(&manifest, manifest_path(out))?;
    Ok(())
}

/// Runs `f` on a pool of the requested size, or on the global pool.
fn with_workers<T: Send>(workers: &WorkerArgs, f: impl FnOnce() -> T + Send) -> Outcome<T> {
    match workers.workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn chip(spec: &str, convention: qasa_core::OrientationConvention) -> Outcome<ChimeraSpec> {
    Ok(spec.parse::<ChimeraSpec>()?.with_convention(convention))
}

pub fn run(command: Command) -> Outcome {
    let started = Instant::now();
    match command {
        Command::Simulate(args) => {
            simulate(&args)?;
            write_manifest("simulate", &args, Some(args.seed), &args.out, started)
        }
        Command::Fit(args) => {
            let result = fit(&args);
            if matches!(result, Ok(()) | Err(Failure::Strict { .. })) {
                write_manifest("fit", &args, None, &args.out, started)?;
            }
            result
        }
        Command::Estimate(args) => {
            estimate(&args)?;
            write_manifest("estimate", &args, None, &args.out, started)
        }
        Command::Analyze(args) => {
            analyze(&args)?;
            write_manifest("analyze", &args, None, &args.out, started)
        }
        Command::Sweep(args) => {
            sweep(&args)?;
            write_manifest("sweep", &args, None, &args.out, started)
        }
    }
}

fn truth_for(args: &SimulateArgs, spec: &ChimeraSpec) -> Outcome<ChipTruth> {
    let truth = match args.truth.as_str() {
        "preset:median" => ChipTruth::uniform(spec, presets::MEDIAN)?,
        "preset:hv-split" => ChipTruth::orientation_split(spec, presets::HORIZONTAL, presets::VERTICAL)?,
        other if other.starts_with("preset:") => {
            return Err(Failure::Usage(format!(
                "unknown preset {other:?}; expected preset:median or preset:hv-split"
            )))
        }
        path => {
            let table = io::read_params(path)?;
            let params: BTreeMap<u32, QubitParams> = table
                .into_iter()
                .filter(|(id, _)| spec.is_operational(*id))
                .map(|(id, r)| (id, r.params))
                .collect();
            ChipTruth::new(spec, params)?
        }
    };
    Ok(truth)
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let full = chip(&args.chip, args.orientation_convention)?;
    let spec = match &args.exclude {
        None => full,
        Some(ids) => ChimeraSpec::without(full.grid(), ids.0.iter().copied())?.with_convention(args.orientation_convention),
    };
    let design = SweepDesign::uniform(args.h_min, args.h_max, args.h_step, args.samples, args.seed, "")?;
    let truth = truth_for(args, &spec)?;
    let counts = with_workers(&args.workers, || simulate_chip(&truth, &design))??;
    io::write_raw(&counts, &args.out)?;
    Ok(())
}

fn fit(args: &FitArgs) -> Outcome {
    let spec = chip(&args.chip, args.orientation_convention)?;
    let mut counts = io::read_raw(&args.input)?;
    if let Some(ids) = &args.qubits {
        counts = counts.select(&ids.0)?;
    }
    let config = FitConfig {
        starts: args.starts as usize,
        confidence: args.confidence,
        ..FitConfig::default()
    };
    let fits = with_workers(&args.workers, || fit_chip(&counts, &config))?;
    for (id, err) in &fits.failures {
        eprintln!("warning: qubit {id}: {err}");
    }
    for (id, _) in fits.results.iter().filter(|(_, r)| !r.converged) {
        eprintln!("warning: qubit {id}: optimizer did not converge");
    }
    io::write_params(&fits.results, &spec, &args.out)?;
    let ids = fits.failed_ids();
    if args.strict && !ids.is_empty() {
        return Err(Failure::Strict { count: ids.len(), ids });
    }
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Outcome {
    let counts = io::read_raw(&args.input)?;
    let curve = empirical_estimates(&counts, args.qubit, args.confidence)?;
    io::write_estimates(&curve, &args.out)?;
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Outcome {
    let spec = chip(&args.chip, args.orientation_convention)?;
    let table = io::read_params(&args.params)?;
    let options = SummaryOptions {
        bins: args.bins,
        outlier_iqr: args.outlier_iqr,
    };
    let report = build_report(&table, &spec, &options)?;
    io::write_report(&report, &args.out)?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Outcome {
    let entries = io::read_sweep_manifest(&args.manifest)?;
    let points = entries
        .iter()
        .map(|e| AnnealSweepPoint::from_results(e.anneal_time_us, &io::read_params(&e.params_file)?))
        .collect::<qasa_core::Result<Vec<_>>>()?;
    let trend = fit_log_trend(&points, args.parameter)?;
    io::write_trend(&points, args.parameter, &trend, &args.out)?;
    Ok(())
}
