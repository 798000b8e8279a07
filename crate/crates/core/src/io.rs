//! CSV and JSON formats.
//!
//! Raw counts: header `h,samples,spin_<id>,...`, one row per field, the
//! number of `-1` readouts per qubit. Parameter table: one row per fitted
//! qubit with the four model parameters first, then fit diagnostics and
//! topology columns. Writers are canonical: `h` in fixed point with six
//! decimals, other reals in shortest round-trip form, columns sorted by
//! qubit id, `\n` line endings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{EffectiveFieldEstimate, FitResult};
use crate::model::QubitParams;
use crate::analysis::{AnnealSweepPoint, HasParams, Parameter, TrendFit};
use crate::simulate::{quantize_field, CountRow, RawCounts};
use crate::topology::ChimeraSpec;

pub const PARAMS_HEADER: [&str; 13] = [
    "qubit_id",
    "beta",
    "b",
    "eta",
    "gamma",
    "log_likelihood",
    "n_points",
    "total_samples",
    "converged",
    "row",
    "col",
    "k",
    "orientation",
];

pub const ESTIMATES_HEADER: &str = "h,mean,h_eff,ci_low,ci_high";

/// Fixed-point field value, never `-0.000000`.
pub fn format_field(h: f64) -> String {
    let s = format!("{h:.6}");
    if s.strip_prefix('-').is_some_and(|rest| rest.chars().all(|c| c == '0' || c == '.')) {
        s[1..].to_string()
    } else {
        s
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn parse_error(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(path, line, e.to_string())
}

fn parse_cell<T: std::str::FromStr>(path: &Path, line: u64, column: &str, cell: &str) -> Result<T> {
    cell.parse()
        .map_err(|_| parse_error(path, line, format!("column {column}: cannot parse {cell:?}")))
}

fn parse_finite(path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = parse_cell(path, line, column, cell)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_error(path, line, format!("column {column}: non-finite value {cell:?}")))
    }
}

/// Parse raw counts. `source` only labels error messages.
pub fn parse_raw<R: Read>(reader: R, source: &Path) -> Result<RawCounts> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(source, e))?,
        None => return Err(parse_error(source, 1, "empty file, expected header h,samples,spin_<id>,...")),
    };
    let header_line = header.position().map_or(1, |p| p.line());
    let mut h_col = None;
    let mut samples_col = None;
    let mut spins: Vec<(usize, u32)> = Vec::new();
    for (i, name) in header.iter().enumerate() {
        match name {
            "h" if h_col.is_none() => h_col = Some(i),
            "samples" if samples_col.is_none() => samples_col = Some(i),
            _ => {
                let id = name
                    .strip_prefix("spin_")
                    .and_then(|id| id.parse::<u32>().ok())
                    .ok_or_else(|| parse_error(source, header_line, format!("unexpected column {name:?}")))?;
                if spins.iter().any(|&(_, other)| other == id) {
                    return Err(parse_error(source, header_line, format!("duplicate column spin_{id}")));
                }
                spins.push((i, id));
            }
        }
    }
    let h_col = h_col.ok_or_else(|| parse_error(source, header_line, "missing column h"))?;
    let samples_col = samples_col.ok_or_else(|| parse_error(source, header_line, "missing column samples"))?;

    let width = header.len();
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_error(
                source,
                line,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let h = quantize_field(parse_finite(source, line, "h", &record[h_col])?);
        let samples: u64 = parse_cell(source, line, "samples", &record[samples_col])?;
        if samples == 0 {
            return Err(parse_error(source, line, "samples must be positive"));
        }
        let mut minus = Vec::with_capacity(spins.len());
        for &(col, id) in &spins {
            let column = format!("spin_{id}");
            let count: u64 = parse_cell(source, line, &column, &record[col])?;
            if count > samples {
                return Err(parse_error(
                    source,
                    line,
                    format!("{column}: count {count} exceeds samples {samples}"),
                ));
            }
            minus.push(count);
        }
        rows.push(CountRow { h, samples, minus });
    }
    RawCounts::new(spins.into_iter().map(|(_, id)| id).collect(), rows)
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawCounts> {
    let path = path.as_ref();
    parse_raw(open(path)?, path)
}

pub fn format_raw(counts: &RawCounts) -> String {
    let mut out = String::from("h,samples");
    for id in counts.qubits() {
        let _ = write!(out, ",spin_{id}");
    }
    out.push('\n');
    if counts.qubits().is_empty() {
        return out;
    }
    for row in counts.rows() {
        out.push_str(&format_field(row.h));
        let _ = write!(out, ",{}", row.samples);
        for c in &row.minus {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub fn write_raw(counts: &RawCounts, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_raw(counts))
}

/// One row of a parameter table. Only the leading `qubit_id,beta,b,eta,gamma`
/// columns are required when reading; topology columns are recomputed from
/// the chip and ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsRecord {
    pub qubit_id: u32,
    pub params: QubitParams,
    pub log_likelihood: Option<f64>,
    pub n_points: Option<usize>,
    pub total_samples: Option<u64>,
    pub converged: Option<bool>,
}

impl HasParams for ParamsRecord {
    fn params(&self) -> &QubitParams {
        &self.params
    }
}

pub fn format_params(results: &BTreeMap<u32, FitResult>, spec: &ChimeraSpec) -> Result<String> {
    let mut out = PARAMS_HEADER.join(",");
    out.push('\n');
    for (&id, r) in results {
        let site = spec.site_of(id)?;
        let p = &r.params;
        for (name, v) in [("beta", p.beta), ("b", p.b), ("eta", p.eta), ("gamma", p.gamma), ("log_likelihood", r.log_likelihood)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("qubit {id}"), format!("non-finite {name} = {v}")));
            }
        }
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.beta,
            p.b,
            p.eta,
            p.gamma,
            r.log_likelihood,
            r.n_points,
            r.total_samples,
            r.converged,
            site.row,
            site.col,
            site.k,
            site.orientation
        );
    }
    Ok(out)
}

pub fn write_params(results: &BTreeMap<u32, FitResult>, spec: &ChimeraSpec, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_params(results, spec)?)
}

pub fn parse_params<R: Read>(reader: R, source: &Path) -> Result<BTreeMap<u32, ParamsRecord>> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(source, e))?,
        None => return Err(parse_error(source, 1, "empty file, expected parameter table header")),
    };
    let header_line = header.position().map_or(1, |p| p.line());
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 5 || names[..5] != PARAMS_HEADER[..5] {
        return Err(parse_error(
            source,
            header_line,
            format!("header must start with {}", PARAMS_HEADER[..5].join(",")),
        ));
    }
    let col = |name: &str| names.iter().position(|n| *n == name);
    let (ll_col, np_col, ts_col, cv_col) = (col("log_likelihood"), col("n_points"), col("total_samples"), col("converged"));

    let mut out = BTreeMap::new();
    let mut last: Option<u32> = None;
    for record in records {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(parse_error(
                source,
                line,
                format!("expected {} columns, found {}", names.len(), record.len()),
            ));
        }
        let id: u32 = parse_cell(source, line, "qubit_id", &record[0])?;
        if last.is_some_and(|prev| id <= prev) {
            return Err(parse_error(source, line, format!("qubit_id {id} is not strictly increasing")));
        }
        last = Some(id);
        let params = QubitParams {
            beta: parse_finite(source, line, "beta", &record[1])?,
            b: parse_finite(source, line, "b", &record[2])?,
            eta: parse_finite(source, line, "eta", &record[3])?,
            gamma: parse_finite(source, line, "gamma", &record[4])?,
        };
        params
            .validate()
            .map_err(|e| parse_error(source, line, e.to_string()))?;
        let log_likelihood = ll_col.map(|c| parse_finite(source, line, "log_likelihood", &record[c])).transpose()?;
        let n_points = np_col.map(|c| parse_cell(source, line, "n_points", &record[c])).transpose()?;
        let total_samples = ts_col.map(|c| parse_cell(source, line, "total_samples", &record[c])).transpose()?;
        let converged = cv_col.map(|c| parse_cell(source, line, "converged", &record[c])).transpose()?;
        out.insert(
            id,
            ParamsRecord {
                qubit_id: id,
                params,
                log_likelihood,
                n_points,
                total_samples,
                converged,
            },
        );
    }
    Ok(out)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<BTreeMap<u32, ParamsRecord>> {
    let path = path.as_ref();
    parse_params(open(path)?, path)
}

pub fn format_estimates(estimates: &[EffectiveFieldEstimate]) -> String {
    let mut out = format!("{ESTIMATES_HEADER}\n");
    for e in estimates {
        let _ = writeln!(out, "{},{},{},{},{}", format_field(e.h), e.mean, e.h_eff, e.ci_low, e.ci_high);
    }
    out
}

pub fn write_estimates(estimates: &[EffectiveFieldEstimate], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_estimates(estimates))
}

/// Pretty JSON with a trailing newline. Key order follows struct field order.
pub fn format_report<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_report(report)?)
}

/// One dataset of an anneal-time sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub anneal_time_us: f64,
    pub params_file: PathBuf,
}

/// Reads `anneal_time_us,params_file` rows. Relative paths resolve against
/// the manifest's directory.
pub fn read_sweep_manifest(path: impl AsRef<Path>) -> Result<Vec<SweepEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rdr = csv_reader(open(path)?);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(parse_error(path, 1, "empty manifest")),
    };
    if header.iter().collect::<Vec<_>>() != ["anneal_time_us", "params_file"] {
        return Err(parse_error(path, 1, "header must be anneal_time_us,params_file"));
    }
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 columns, found {}", record.len())));
        }
        let anneal_time_us = parse_finite(path, line, "anneal_time_us", &record[0])?;
        if anneal_time_us <= 0.0 {
            return Err(parse_error(path, line, "anneal_time_us must be positive"));
        }
        out.push(SweepEntry {
            anneal_time_us,
            params_file: base.join(&record[1]),
        });
    }
    Ok(out)
}

pub const TREND_HEADER: &str = "anneal_time_us,parameter,n_qubits,mean,std,trend_value,c0,c1,residual_rms";

/// One row per dataset; the trend coefficients repeat on every row.
pub fn format_trend(points: &[AnnealSweepPoint], parameter: Parameter, fit: &TrendFit) -> String {
    let mut out = format!("{TREND_HEADER}\n");
    for p in points {
        let stats = p.get(parameter);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.anneal_time_us,
            parameter,
            p.n_qubits,
            stats.mean,
            stats.std,
            fit.predict(p.anneal_time_us),
            fit.c0,
            fit.c1,
            fit.residual_rms
        );
    }
    out
}

pub fn write_trend(points: &[AnnealSweepPoint], parameter: Parameter, fit: &TrendFit, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_trend(points, parameter, fit))
}
