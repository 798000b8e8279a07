//! Single-qubit characterization of quantum annealers.
//!
//! Each qubit is summarized by four effective-model parameters (inverse
//! temperature `β`, bias `b`, noise `η`, transverse gain `γ`) recovered by
//! maximum likelihood from tallies of `-1` readouts over a sweep of input
//! fields. The crate covers the model, a synthetic device, the estimator,
//! Chimera topology bookkeeping, chip-level analysis and the file formats.

pub mod analysis;
pub mod error;
pub mod estimate;
pub mod io;
pub mod model;
pub mod optimize;
pub mod simulate;
pub mod topology;

pub use error::{Error, Result};
pub use estimate::{
    empirical_estimates, fit_chip, fit_qubit, log_likelihood, ChipFit, EffectiveFieldEstimate, FitConfig,
    FitResult, Observation,
};
pub use model::{
    density_matrix_expectation, effective_field, outcome_probability, spin_expectation, OutcomeProbabilities,
    QubitParams,
};
pub use simulate::{default_sweep, presets, sample_counts, simulate_chip, ChipTruth, CountRow, RawCounts, SweepDesign};
pub use topology::{ChimeraSpec, HeatmapRecord, Orientation, OrientationConvention, QubitSite};
