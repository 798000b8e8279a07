//! Synthetic device output: per-qubit, per-field tallies of `-1` readouts.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{effective_field, outcome_probability, QubitParams};
use crate::topology::{ChimeraSpec, Orientation};

/// Input fields are stored on a 1e-6 lattice so that they survive a trip
/// through the fixed-point CSV representation unchanged.
pub const FIELD_SCALE: f64 = 1e6;

pub fn quantize_field(h: f64) -> f64 {
    let q = (h * FIELD_SCALE).round() / FIELD_SCALE;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// The set of input fields probed, samples per field and RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDesign {
    fields: Vec<f64>,
    samples_per_field: u64,
    seed: u64,
    label: String,
}

impl SweepDesign {
    pub fn new(fields: Vec<f64>, samples_per_field: u64, seed: u64, label: impl Into<String>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Design("no input fields".into()));
        }
        if let Some(h) = fields.iter().find(|h| !h.is_finite()) {
            return Err(Error::Design(format!("non-finite field {h}")));
        }
        if fields.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Design("fields must be strictly increasing".into()));
        }
        if samples_per_field == 0 {
            return Err(Error::Design("samples per field must be at least 1".into()));
        }
        Ok(Self {
            fields,
            samples_per_field,
            seed,
            label: label.into(),
        })
    }

    /// Uniform grid from `min` to `max` inclusive.
    pub fn uniform(min: f64, max: f64, step: f64, samples_per_field: u64, seed: u64, label: impl Into<String>) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::Design(format!("step must be positive, got {step}")));
        }
        if !min.is_finite() || !max.is_finite() || min > max {
            return Err(Error::Design(format!("invalid range [{min}, {max}]")));
        }
        let intervals = ((max - min) / step + 1e-9).floor();
        if intervals > 1e7 {
            return Err(Error::Design(format!("{intervals} fields is too many")));
        }
        let fields = (0..=intervals as u64)
            .map(|i| quantize_field(min + i as f64 * step))
            .collect();
        Self::new(fields, samples_per_field, seed, label)
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn samples_per_field(&self) -> u64 {
        self.samples_per_field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_samples(mut self, samples_per_field: u64) -> Result<Self> {
        if samples_per_field == 0 {
            return Err(Error::Design("samples per field must be at least 1".into()));
        }
        self.samples_per_field = samples_per_field;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for SweepDesign {
    /// 81 fields over `[-1, 1]` at step 0.025, five million samples each.
    fn default() -> Self {
        Self::uniform(-1.0, 1.0, 0.025, 5_000_000, 0, "1us").expect("default design is valid")
    }
}

pub fn default_sweep() -> SweepDesign {
    SweepDesign::default()
}

/// Ground-truth parameters for every operational qubit of a chip.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipTruth {
    params: BTreeMap<u32, QubitParams>,
}

impl ChipTruth {
    pub fn new(spec: &ChimeraSpec, params: BTreeMap<u32, QubitParams>) -> Result<Self> {
        let missing: Vec<u32> = spec
            .operational()
            .iter()
            .filter(|id| !params.contains_key(id))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(Error::Coverage { missing });
        }
        if let Some(&id) = params.keys().find(|id| !spec.is_operational(**id)) {
            return Err(if id >= spec.capacity() {
                Error::QubitOutOfRange {
                    id,
                    capacity: spec.capacity(),
                }
            } else {
                Error::invalid("truth", format!("qubit {id} is not operational on this chip"))
            });
        }
        for p in params.values() {
            p.validate()?;
        }
        Ok(Self { params })
    }

    /// The same parameters on every operational qubit.
    pub fn uniform(spec: &ChimeraSpec, p: QubitParams) -> Result<Self> {
        Self::new(spec, spec.operational().iter().map(|&id| (id, p)).collect())
    }

    /// Separate parameters for horizontal and vertical qubits.
    pub fn orientation_split(spec: &ChimeraSpec, horizontal: QubitParams, vertical: QubitParams) -> Result<Self> {
        let params = spec
            .operational()
            .iter()
            .map(|&id| {
                let p = match spec.site_of(id)?.orientation {
                    Orientation::Horizontal => horizontal,
                    Orientation::Vertical => vertical,
                };
                Ok((id, p))
            })
            .collect::<Result<_>>()?;
        Self::new(spec, params)
    }

    pub fn params(&self) -> &BTreeMap<u32, QubitParams> {
        &self.params
    }
}

/// Reference parameter sets used as simulation fixtures.
pub mod presets {
    use crate::model::QubitParams;

    /// Chip-wide medians.
    pub const MEDIAN: QubitParams = QubitParams {
        beta: 10.54,
        b: 0.0025,
        eta: 0.0367,
        gamma: 0.0176,
    };

    /// Horizontal-qubit medians for β and γ; b and η from the chip medians.
    pub const HORIZONTAL: QubitParams = QubitParams {
        beta: 10.76,
        b: 0.0025,
        eta: 0.0367,
        gamma: 0.0187,
    };

    pub const VERTICAL: QubitParams = QubitParams {
        beta: 10.37,
        b: 0.0025,
        eta: 0.0367,
        gamma: 0.0165,
    };

    /// The representative qubit 305.
    pub const QUBIT_305: QubitParams = QubitParams {
        beta: 11.18,
        b: 0.0046,
        eta: 0.0514,
        gamma: 0.0196,
    };
}

/// One input field with the `-1` tallies of every qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRow {
    pub h: f64,
    pub samples: u64,
    /// Aligned with [`RawCounts::qubits`].
    pub minus: Vec<u64>,
}

/// Tallies of `-1` outcomes per (field, qubit).
///
/// Canonical form: qubit columns sorted by id, rows sorted by field with
/// duplicate fields merged by summing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCounts {
    qubits: Vec<u32>,
    rows: Vec<CountRow>,
}

impl RawCounts {
    pub fn new(qubits: Vec<u32>, rows: Vec<CountRow>) -> Result<Self> {
        let mut order: Vec<usize> = (0..qubits.len()).collect();
        order.sort_by_key(|&i| qubits[i]);
        if let Some(w) = order.windows(2).find(|w| qubits[w[0]] == qubits[w[1]]) {
            return Err(Error::invalid("raw counts", format!("duplicate qubit {}", qubits[w[0]])));
        }
        let mut merged: Vec<CountRow> = Vec::with_capacity(rows.len());
        let mut rows = rows;
        for row in &rows {
            if !row.h.is_finite() {
                return Err(Error::invalid("raw counts", format!("non-finite field {}", row.h)));
            }
            if row.samples == 0 {
                return Err(Error::invalid("raw counts", format!("zero samples at h = {}", row.h)));
            }
            if row.minus.len() != qubits.len() {
                return Err(Error::invalid(
                    "raw counts",
                    format!("row h = {} has {} counts for {} qubits", row.h, row.minus.len(), qubits.len()),
                ));
            }
            if let Some(i) = row.minus.iter().position(|&c| c > row.samples) {
                return Err(Error::invalid(
                    "raw counts",
                    format!("qubit {} has {} > {} samples at h = {}", qubits[i], row.minus[i], row.samples, row.h),
                ));
            }
        }
        rows.sort_by(|a, b| a.h.total_cmp(&b.h));
        for row in rows {
            let row = CountRow {
                h: if row.h == 0.0 { 0.0 } else { row.h },
                samples: row.samples,
                minus: order.iter().map(|&i| row.minus[i]).collect(),
            };
            match merged.last_mut() {
                Some(last) if last.h == row.h => {
                    last.samples = last
                        .samples
                        .checked_add(row.samples)
                        .ok_or_else(|| Error::invalid("raw counts", "sample total overflows"))?;
                    for (acc, c) in last.minus.iter_mut().zip(&row.minus) {
                        *acc += c;
                    }
                }
                _ => merged.push(row),
            }
        }
        if qubits.is_empty() {
            merged.clear();
        }
        Ok(Self {
            qubits: order.iter().map(|&i| qubits[i]).collect(),
            rows: merged,
        })
    }

    pub fn qubits(&self) -> &[u32] {
        &self.qubits
    }

    pub fn rows(&self) -> &[CountRow] {
        &self.rows
    }

    pub fn column_index(&self, qubit: u32) -> Result<usize> {
        self.qubits
            .binary_search(&qubit)
            .map_err(|_| Error::UnknownQubit(qubit))
    }

    /// `(h, samples, minus)` for one qubit, in field order.
    pub fn column(&self, qubit: u32) -> Result<Vec<(f64, u64, u64)>> {
        let i = self.column_index(qubit)?;
        Ok(self.rows.iter().map(|r| (r.h, r.samples, r.minus[i])).collect())
    }

    /// Restrict to a subset of qubit columns.
    pub fn select(&self, qubits: &[u32]) -> Result<Self> {
        let idx: Vec<usize> = qubits.iter().map(|&q| self.column_index(q)).collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| CountRow {
                h: r.h,
                samples: r.samples,
                minus: idx.iter().map(|&i| r.minus[i]).collect(),
            })
            .collect();
        Self::new(qubits.to_vec(), rows)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha stream for one (seed, stream, field) cell. The key comes from the
/// seed, the ChaCha stream id is the qubit, and each field owns a disjoint
/// block-counter window.
fn cell_rng(seed: u64, stream_key: u64, field_index: usize) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_key);
    rng.set_word_pos((field_index as u128) << 40);
    rng
}

/// One binomial draw of `-1` outcomes per field.
pub fn sample_counts(p: &QubitParams, design: &SweepDesign, stream_key: u64) -> Result<Vec<u64>> {
    p.validate()?;
    let m = design.samples_per_field;
    design
        .fields
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let p_minus = outcome_probability(effective_field(h, p)?)?.minus;
            let binomial = Binomial::new(m, p_minus)
                .map_err(|e| Error::invalid("sampling", format!("{e} (p = {p_minus})")))?;
            Ok(binomial.sample(&mut cell_rng(design.seed, stream_key, i)))
        })
        .collect()
}

/// Simulate every qubit of `truth` over `design`. Qubits are sampled in
/// parallel; the result does not depend on the number of workers.
pub fn simulate_chip(truth: &ChipTruth, design: &SweepDesign) -> Result<RawCounts> {
    let entries: Vec<(u32, QubitParams)> = truth.params.iter().map(|(&id, &p)| (id, p)).collect();
    let columns: Vec<Vec<u64>> = entries
        .par_iter()
        .map(|(id, p)| sample_counts(p, design, u64::from(*id)))
        .collect::<Result<_>>()?;
    let rows = design
        .fields
        .iter()
        .enumerate()
        .map(|(i, &h)| CountRow {
            h,
            samples: design.samples_per_field,
            minus: columns.iter().map(|c| c[i]).collect(),
        })
        .collect();
    RawCounts::new(entries.iter().map(|(id, _)| *id).collect(), rows)
}
