//! Chip-level aggregation of fitted parameters: distribution summaries,
//! horizontal/vertical splits, heatmaps and anneal-time trends.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{least_squares_line, FitResult};
use crate::model::QubitParams;
use crate::topology::{ChimeraSpec, HeatmapRecord, Orientation};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_OUTLIER_IQR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Beta,
    B,
    Eta,
    Gamma,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::Beta, Parameter::B, Parameter::Eta, Parameter::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Beta => "beta",
            Parameter::B => "b",
            Parameter::Eta => "eta",
            Parameter::Gamma => "gamma",
        }
    }

    pub fn of(self, p: &QubitParams) -> f64 {
        match self {
            Parameter::Beta => p.beta,
            Parameter::B => p.b,
            Parameter::Eta => p.eta,
            Parameter::Gamma => p.gamma,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("parameter", format!("unknown parameter {s:?} (beta, b, eta, gamma)")))
    }
}

/// Anything that carries a fitted parameter set.
pub trait HasParams {
    fn params(&self) -> &QubitParams;
}

impl HasParams for QubitParams {
    fn params(&self) -> &QubitParams {
        self
    }
}

impl HasParams for FitResult {
    fn params(&self) -> &QubitParams {
        &self.params
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub parameter: Parameter,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub q3: f64,
    pub histogram: Histogram,
    /// Qubits more than `outlier_iqr` interquartile ranges outside the quartiles.
    pub outliers: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    pub bins: usize,
    pub outlier_iqr: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            outlier_iqr: DEFAULT_OUTLIER_IQR,
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn histogram(values: &[f64], min: f64, max: f64, bins: usize) -> Histogram {
    // a degenerate range gets a unit-width window centered on the value
    let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, max + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &v in values {
        let i = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { edges, counts }
}

fn summarize_values(parameter: Parameter, values: &[(u32, f64)], options: &SummaryOptions) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::InsufficientData(format!("no values to summarize for {parameter}")));
    }
    if options.bins == 0 {
        return Err(Error::invalid("summary", "bin count must be positive"));
    }
    if let Some((id, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid("summary", format!("qubit {id} has non-finite {parameter} = {v}")));
    }
    let mut sorted: Vec<f64> = values.iter().map(|&(_, v)| v).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let mean = if min == max { min } else { sorted.iter().sum::<f64>() / n as f64 };
    let std = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let fence = options.outlier_iqr * (q3 - q1);
    let outliers = values
        .iter()
        .filter(|(_, v)| *v < q1 - fence || *v > q3 + fence)
        .map(|&(id, _)| id)
        .collect();
    Ok(DistributionSummary {
        parameter,
        count: n,
        mean,
        median: median(&sorted),
        std,
        min,
        max,
        q1,
        q3,
        histogram: histogram(&sorted, min, max, options.bins),
        outliers,
    })
}

pub fn summarize<R: HasParams>(
    results: &BTreeMap<u32, R>,
    parameter: Parameter,
    options: &SummaryOptions,
) -> Result<DistributionSummary> {
    let values: Vec<(u32, f64)> = results.iter().map(|(&id, r)| (id, parameter.of(r.params()))).collect();
    summarize_values(parameter, &values, options)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientationSplit {
    pub parameter: Parameter,
    pub horizontal: DistributionSummary,
    pub vertical: DistributionSummary,
    /// Horizontal median minus vertical median.
    pub median_difference: f64,
}

pub fn orientation_split<R: HasParams>(
    results: &BTreeMap<u32, R>,
    spec: &ChimeraSpec,
    parameter: Parameter,
    options: &SummaryOptions,
) -> Result<OrientationSplit> {
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for (&id, r) in results {
        if !spec.is_operational(id) {
            return Err(if id >= spec.capacity() {
                Error::QubitOutOfRange {
                    id,
                    capacity: spec.capacity(),
                }
            } else {
                Error::invalid("orientation split", format!("qubit {id} is not operational on this chip"))
            });
        }
        let entry = (id, parameter.of(r.params()));
        match spec.site_of(id)?.orientation {
            Orientation::Horizontal => horizontal.push(entry),
            Orientation::Vertical => vertical.push(entry),
        }
    }
    let horizontal = summarize_values(parameter, &horizontal, options)?;
    let vertical = summarize_values(parameter, &vertical, options)?;
    Ok(OrientationSplit {
        parameter,
        median_difference: horizontal.median - vertical.median,
        horizontal,
        vertical,
    })
}

pub fn spatial_report<R: HasParams>(
    results: &BTreeMap<u32, R>,
    spec: &ChimeraSpec,
    parameter: Parameter,
) -> Result<Vec<HeatmapRecord>> {
    let values = results.iter().map(|(&id, r)| (id, parameter.of(r.params()))).collect();
    spec.heatmap_grid(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Chip-wide statistics of one dataset taken at a given anneal time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealSweepPoint {
    pub anneal_time_us: f64,
    pub n_qubits: usize,
    pub beta: MeanStd,
    pub b: MeanStd,
    pub eta: MeanStd,
    pub gamma: MeanStd,
}

impl AnnealSweepPoint {
    pub fn from_results<R: HasParams>(anneal_time_us: f64, results: &BTreeMap<u32, R>) -> Result<Self> {
        if !(anneal_time_us > 0.0 && anneal_time_us.is_finite()) {
            return Err(Error::invalid("anneal sweep", format!("anneal time {anneal_time_us} must be positive")));
        }
        if results.is_empty() {
            return Err(Error::InsufficientData(format!("no qubits at anneal time {anneal_time_us}")));
        }
        let stats = |parameter: Parameter| {
            let values: Vec<f64> = results.values().map(|r| parameter.of(r.params())).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            MeanStd { mean, std }
        };
        Ok(Self {
            anneal_time_us,
            n_qubits: results.len(),
            beta: stats(Parameter::Beta),
            b: stats(Parameter::B),
            eta: stats(Parameter::Eta),
            gamma: stats(Parameter::Gamma),
        })
    }

    pub fn get(&self, parameter: Parameter) -> MeanStd {
        match parameter {
            Parameter::Beta => self.beta,
            Parameter::B => self.b,
            Parameter::Eta => self.eta,
            Parameter::Gamma => self.gamma,
        }
    }
}

/// `value = c0 + c1·ln(t / 1 µs)`. `c0` is the value at 1 µs; the model has
/// no finite limit at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    pub parameter: Parameter,
    pub c0: f64,
    pub c1: f64,
    pub residual_rms: f64,
    pub n_points: usize,
}

impl TrendFit {
    pub fn predict(&self, anneal_time_us: f64) -> f64 {
        self.c0 + self.c1 * anneal_time_us.ln()
    }
}

/// Least-squares fit of the chip-mean parameter against `ln t`.
pub fn fit_log_trend(points: &[AnnealSweepPoint], parameter: Parameter) -> Result<TrendFit> {
    let mut times: Vec<f64> = points.iter().map(|p| p.anneal_time_us).collect();
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("trend", format!("anneal time {t} must be positive")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "trend needs at least 2 distinct anneal times, got {}",
            times.len()
        )));
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.anneal_time_us.ln(), p.get(parameter).mean))
        .collect();
    let (c1, c0) = least_squares_line(&xy).expect("two distinct abscissae");
    let sse: f64 = xy.iter().map(|(x, y)| (y - c0 - c1 * x).powi(2)).sum();
    Ok(TrendFit {
        parameter,
        c0,
        c1,
        residual_rms: (sse / xy.len() as f64).sqrt(),
        n_points: xy.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub parameter: Parameter,
    pub records: Vec<HeatmapRecord>,
}

/// Everything `analyze` emits, serialized as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChipReport {
    pub schema_version: u32,
    pub chip: String,
    pub orientation_convention: String,
    pub n_qubits: usize,
    pub bins: usize,
    pub summaries: Vec<DistributionSummary>,
    pub orientation_splits: Vec<OrientationSplit>,
    pub heatmaps: Vec<Heatmap>,
    pub trends: Vec<TrendFit>,
}

pub fn build_report<R: HasParams>(
    results: &BTreeMap<u32, R>,
    spec: &ChimeraSpec,
    options: &SummaryOptions,
) -> Result<ChipReport> {
    let summaries = Parameter::ALL
        .iter()
        .map(|&p| summarize(results, p, options))
        .collect::<Result<_>>()?;
    let orientation_splits = Parameter::ALL
        .iter()
        .map(|&p| orientation_split(results, spec, p, options))
        .collect::<Result<_>>()?;
    let heatmaps = Parameter::ALL
        .iter()
        .map(|&p| {
            Ok(Heatmap {
                parameter: p,
                records: spatial_report(results, spec, p)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ChipReport {
        schema_version: REPORT_SCHEMA_VERSION,
        chip: format!("chimera:{}", spec.grid()),
        orientation_convention: spec.convention().to_string(),
        n_qubits: results.len(),
        bins: options.bins,
        summaries,
        orientation_splits,
        heatmaps,
        trends: Vec::new(),
    })
}
