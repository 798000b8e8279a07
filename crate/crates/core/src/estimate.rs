//! Parameter recovery from observed tallies: empirical effective fields with
//! confidence intervals, the model log-likelihood and a multi-start maximizer.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{effective_field_unchecked, QubitParams};
use crate::optimize::{nelder_mead, Interval, SimplexOptions};
use crate::simulate::RawCounts;

/// Coverage that maps to exactly three standard errors.
pub const THREE_SIGMA_COVERAGE: f64 = 0.9973;
/// Default coverage for empirical intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.997;
/// Fitted noise below this level is indistinguishable from zero on a 0.025 grid.
pub const LOW_NOISE_THRESHOLD: f64 = 0.005;

/// Two-sided normal quantile for `confidence`. Both 0.997 and 0.9973 are
/// read as three-sigma coverage and give exactly `z = 3`.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid("confidence", format!("{confidence} is not in (0, 1)")));
    }
    if (confidence - THREE_SIGMA_COVERAGE).abs() < 1e-9 || (confidence - DEFAULT_CONFIDENCE).abs() < 1e-9 {
        return Ok(3.0);
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - 0.5 * (1.0 - confidence)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveFieldEstimate {
    pub h: f64,
    pub mean: f64,
    pub h_eff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

/// `arctanh` evaluated on `|x|` so that accuracy near `-1` matches `+1`.
pub(crate) fn atanh(x: f64) -> f64 {
    x.abs().atanh().copysign(x)
}

fn empirical_mean(samples: u64, minus: u64) -> f64 {
    (samples as f64 - 2.0 * minus as f64) / samples as f64
}

fn estimate_field(h: f64, samples: u64, minus: u64, z: f64) -> EffectiveFieldEstimate {
    let m = samples as f64;
    let mean = empirical_mean(samples, minus);
    let limit = 1.0 - 1.0 / m;
    let clamp = |x: f64| x.clamp(-limit, limit);
    let half_width = z * ((1.0 - mean * mean).max(0.0) / m).sqrt();
    EffectiveFieldEstimate {
        h,
        mean,
        h_eff: atanh(clamp(mean)),
        ci_low: atanh(clamp(mean - half_width)),
        ci_high: atanh(clamp(mean + half_width)),
        samples,
    }
}

/// Per-field `arctanh` of the empirical spin mean with a Wald interval
/// mapped through `arctanh`. Means are clamped to `±(1 - 1/M)`.
pub fn empirical_estimates(counts: &RawCounts, qubit: u32, confidence: f64) -> Result<Vec<EffectiveFieldEstimate>> {
    let z = z_for_confidence(confidence)?;
    counts
        .column(qubit)?
        .into_iter()
        .map(|(h, samples, minus)| {
            if samples == 0 {
                return Err(Error::invalid(format!("qubit {qubit}"), format!("zero samples at h = {h}")));
            }
            Ok(estimate_field(h, samples, minus, z))
        })
        .collect()
}

/// One field's contribution to the likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub h: f64,
    pub mean: f64,
    /// 1 when every field has the same sample count.
    pub weight: f64,
}

impl Observation {
    pub fn new(h: f64, mean: f64) -> Self {
        Self { h, mean, weight: 1.0 }
    }
}

/// Observations for one qubit. Each field is weighted by `N·M_h / ΣM`, which
/// is 1 everywhere when the sample count is constant.
pub fn observations(counts: &RawCounts, qubit: u32) -> Result<Vec<Observation>> {
    let column = counts.column(qubit)?;
    let total: f64 = column.iter().map(|&(_, s, _)| s as f64).sum();
    let n = column.len() as f64;
    Ok(column
        .into_iter()
        .map(|(h, samples, minus)| Observation {
            h,
            mean: empirical_mean(samples, minus),
            weight: n * samples as f64 / total,
        })
        .collect())
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a - LN_2 + (-2.0 * a).exp().ln_1p()
}

fn log_likelihood_unchecked(p: &QubitParams, data: &[Observation]) -> f64 {
    data.iter()
        .map(|o| {
            let h_eff = effective_field_unchecked(o.h, p);
            o.weight * (h_eff * o.mean - log_cosh(h_eff))
        })
        .sum()
}

/// `Σ_h h_eff(h)·Ê[σ|h] − log cosh h_eff(h)`, per-field weighted.
pub fn log_likelihood(p: &QubitParams, data: &[Observation]) -> Result<f64> {
    p.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    for o in data {
        if !o.h.is_finite() || !(-1.0..=1.0).contains(&o.mean) || o.weight.is_nan() || o.weight < 0.0 {
            return Err(Error::invalid(
                "likelihood",
                format!("bad observation h = {}, mean = {}, weight = {}", o.h, o.mean, o.weight),
            ));
        }
    }
    Ok(log_likelihood_unchecked(p, data))
}

/// Search box for the four parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub beta: Interval,
    pub b: Interval,
    pub eta: Interval,
    pub gamma: Interval,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            beta: Interval::new(0.1, 100.0),
            b: Interval::new(-0.2, 0.2),
            eta: Interval::new(0.0, 0.5),
            gamma: Interval::new(0.0, 0.5),
        }
    }
}

impl ParamBounds {
    fn intervals(&self) -> [Interval; 4] {
        [self.beta, self.b, self.eta, self.gamma]
    }

    pub fn contains(&self, p: &QubitParams) -> bool {
        self.intervals()
            .iter()
            .zip(p.as_array())
            .all(|(i, x)| i.contains(x))
    }

    fn params_at(&self, u: &[f64]) -> QubitParams {
        let iv = self.intervals();
        QubitParams::from_array([0, 1, 2, 3].map(|i| iv[i].to_box(u[i])))
    }

    fn coordinates_of(&self, p: &QubitParams) -> [f64; 4] {
        let iv = self.intervals();
        let x = p.as_array();
        [0, 1, 2, 3].map(|i| iv[i].to_unbounded(x[i]))
    }

    /// Parameter names whose value lies within 0.1% of the box width of a bound.
    fn touching(&self, p: &QubitParams) -> Vec<&'static str> {
        const NAMES: [&str; 4] = ["beta", "b", "eta", "gamma"];
        self.intervals()
            .iter()
            .zip(p.as_array())
            .zip(NAMES)
            .filter(|((iv, x), _)| {
                let tol = 1e-3 * iv.width();
                *x - iv.lo <= tol || iv.hi - *x <= tol
            })
            .map(|(_, name)| name)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub bounds: ParamBounds,
    /// Coverage of the intervals used for the goodness-of-fit diagnostic.
    pub confidence: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            max_iterations: 10_000,
            rel_tolerance: 1e-10,
            bounds: ParamBounds::default(),
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Parameters that ended on (or next to) the search box.
    pub at_bound: Vec<&'static str>,
    /// `η̂` below [`LOW_NOISE_THRESHOLD`]; noise may be unresolved.
    pub low_noise: bool,
    /// Number of fields with `|h| > 1`.
    pub fields_out_of_range: usize,
    /// Fraction of fields whose fitted `h_eff` lies inside the empirical interval.
    pub ci_agreement: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: QubitParams,
    pub log_likelihood: f64,
    pub converged: bool,
    pub start_index: usize,
    pub n_points: usize,
    pub total_samples: u64,
    pub diagnostics: FitDiagnostics,
}

/// Least-squares line through `(h, arctanh m̂)` on `|h| ≤ 0.3` gives `β₀`
/// and the bias from the intercept.
fn data_driven_start(data: &[Observation], samples: &[u64], bounds: &ParamBounds) -> QubitParams {
    let points: Vec<(f64, f64)> = data
        .iter()
        .zip(samples)
        .filter(|(o, _)| o.h.abs() <= 0.3)
        .map(|(o, &s)| {
            let limit = 1.0 - 1.0 / s as f64;
            (o.h, atanh(o.mean.clamp(-limit, limit)))
        })
        .collect();
    let (slope, intercept) = least_squares_line(&points).unwrap_or((1.0, 0.0));
    let beta = if slope > 0.0 { slope } else { 1.0 };
    let interior = |iv: Interval, x: f64| x.clamp(iv.lo + 0.01 * iv.width(), iv.hi - 0.01 * iv.width());
    QubitParams {
        beta: interior(bounds.beta, beta),
        b: interior(bounds.b, intercept / beta),
        eta: interior(bounds.eta, 0.03),
        gamma: interior(bounds.gamma, 0.02),
    }
}

pub(crate) fn least_squares_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Deterministic perturbations of the data-driven start.
fn start_points(first: QubitParams, count: usize, bounds: &ParamBounds) -> Vec<QubitParams> {
    const SCALES: [(f64, f64, f64); 6] = [
        (0.7, 0.08, 0.04),
        (1.4, 0.01, 0.01),
        (1.0, 0.15, 0.005),
        (0.5, 0.05, 0.1),
        (2.0, 0.02, 0.05),
        (1.2, 0.2, 0.03),
    ];
    let interior = |iv: Interval, x: f64| x.clamp(iv.lo + 0.01 * iv.width(), iv.hi - 0.01 * iv.width());
    (0..count)
        .map(|i| {
            if i == 0 {
                return first;
            }
            let (beta_scale, eta, gamma) = SCALES[(i - 1) % SCALES.len()];
            let round = ((i - 1) / SCALES.len()) as f64;
            QubitParams {
                beta: interior(bounds.beta, first.beta * beta_scale * (1.0 + 0.25 * round)),
                b: interior(bounds.b, if i % 2 == 0 { first.b } else { 0.0 }),
                eta: interior(bounds.eta, eta),
                gamma: interior(bounds.gamma, gamma),
            }
        })
        .collect()
}

/// Maximize the likelihood of `data` (sample counts per field in `samples`).
pub fn fit_observations(data: &[Observation], samples: &[u64], config: &FitConfig) -> Result<FitResult> {
    if data.len() != samples.len() {
        return Err(Error::invalid("fit", "observation and sample counts differ in length"));
    }
    let mut distinct: Vec<f64> = data.iter().map(|o| o.h).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 8 {
        return Err(Error::InsufficientData(format!("{} distinct fields, need at least 8", distinct.len())));
    }
    if !(distinct[0] < 0.0 && distinct[distinct.len() - 1] > 0.0) {
        return Err(Error::InsufficientData("fields must include both signs of h".into()));
    }
    if config.starts == 0 {
        return Err(Error::invalid("fit", "at least one start is required"));
    }
    // validates the observations
    log_likelihood(&QubitParams::classical(1.0)?, data)?;

    let bounds = config.bounds;
    let options = SimplexOptions {
        rel_tolerance: config.rel_tolerance,
        max_iterations: config.max_iterations,
    };
    let first = data_driven_start(data, samples, &bounds);
    let mut best: Option<(usize, QubitParams, f64, bool)> = None;
    let mut any_converged = false;
    let mut iterations = 0;
    let mut evaluations = 0;
    for (index, start) in start_points(first, config.starts, &bounds).into_iter().enumerate() {
        let u0 = bounds.coordinates_of(&start);
        let run = nelder_mead(
            |u| -log_likelihood_unchecked(&bounds.params_at(u), data),
            &u0,
            &[0.1; 4],
            &options,
        );
        iterations += run.iterations;
        evaluations += run.evaluations;
        any_converged |= run.converged;
        let params = bounds.params_at(&run.x);
        let value = log_likelihood_unchecked(&params, data);
        if best.as_ref().is_none_or(|b| value > b.2) {
            best = Some((index, params, value, run.converged));
        }
    }
    let (start_index, params, value, _) = best.expect("at least one start");

    let z = z_for_confidence(config.confidence)?;
    let inside = data
        .iter()
        .zip(samples)
        .filter(|(o, &s)| {
            let minus = ((1.0 - o.mean) * s as f64 / 2.0).round() as u64;
            let est = estimate_field(o.h, s, minus, z);
            let model = effective_field_unchecked(o.h, &params);
            model >= est.ci_low && model <= est.ci_high
        })
        .count();

    Ok(FitResult {
        params,
        log_likelihood: value,
        converged: any_converged,
        start_index,
        n_points: data.len(),
        total_samples: samples.iter().sum(),
        diagnostics: FitDiagnostics {
            at_bound: bounds.touching(&params),
            low_noise: params.eta < LOW_NOISE_THRESHOLD,
            fields_out_of_range: data.iter().filter(|o| o.h.abs() > 1.0).count(),
            ci_agreement: Some(inside as f64 / data.len() as f64),
            iterations,
            evaluations,
        },
    })
}

pub fn fit_qubit(counts: &RawCounts, qubit: u32, config: &FitConfig) -> Result<FitResult> {
    let data = observations(counts, qubit)?;
    let samples: Vec<u64> = counts.rows().iter().map(|r| r.samples).collect();
    fit_observations(&data, &samples, config)
}

/// Fits for every qubit of a chip. Failures are collected, not propagated.
#[derive(Debug, Default)]
pub struct ChipFit {
    pub results: BTreeMap<u32, FitResult>,
    pub failures: BTreeMap<u32, Error>,
}

impl ChipFit {
    /// Ids that errored or whose fit did not converge.
    pub fn failed_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.failures.keys().copied().collect();
        ids.extend(self.results.iter().filter(|(_, r)| !r.converged).map(|(&id, _)| id));
        ids.sort_unstable();
        ids
    }
}

/// Fit all qubits in parallel; the outcome is independent of the worker count.
pub fn fit_chip(counts: &RawCounts, config: &FitConfig) -> ChipFit {
    let outcomes: Vec<(u32, Result<FitResult>)> = counts
        .qubits()
        .par_iter()
        .map(|&q| (q, fit_qubit(counts, q, config)))
        .collect();
    let mut fit = ChipFit::default();
    for (q, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                fit.results.insert(q, r);
            }
            Err(e) => {
                fit.failures.insert(q, e);
            }
        }
    }
    fit
}
