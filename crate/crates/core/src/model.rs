//! Effective single-qubit model.
//!
//! A qubit driven by a longitudinal input field `h` returns `+1`/`-1` with a
//! Gibbs law characterized by one number, the effective field `h_eff`:
//!
//! ```text
//! P(σ = ±1) = exp(±h_eff) / (2 cosh h_eff)
//! ```
//!
//! The effective field follows from a uniform two-point mixture of quantum
//! Gibbs states of the Hamiltonian `γh·σx + (h + b + sη)·σz`, `s = ±1`,
//! at inverse temperature `β`. The model lives in the x-z plane; `σy` never
//! appears.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this Hamiltonian norm the `tanh(βr)/r` ratio is replaced by its limit `β`.
const DEGENERATE_NORM: f64 = 1e-12;

/// The four effective-model parameters of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Inverse temperature.
    pub beta: f64,
    /// Additive field bias.
    pub b: f64,
    /// Magnitude of the binary field noise.
    pub eta: f64,
    /// Transverse-field gain. Only `(γh)²` enters the model, so the sign is fixed to `≥ 0`.
    pub gamma: f64,
}

impl QubitParams {
    pub fn new(beta: f64, b: f64, eta: f64, gamma: f64) -> Result<Self> {
        let p = Self { beta, b, eta, gamma };
        p.validate()?;
        Ok(p)
    }

    /// The purely classical qubit `h_eff = βh`.
    pub fn classical(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &'static str); 4] = [
            ("beta", self.beta, self.beta > 0.0, "must be positive"),
            ("b", self.b, true, ""),
            ("eta", self.eta, self.eta >= 0.0, "must be non-negative"),
            ("gamma", self.gamma, self.gamma >= 0.0, "must be non-negative"),
        ];
        for (name, value, ok, reason) in checks {
            if !value.is_finite() {
                return Err(Error::ParameterDomain {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
            if !ok {
                return Err(Error::ParameterDomain { name, value, reason });
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.beta, self.b, self.eta, self.gamma]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            beta: v[0],
            b: v[1],
            eta: v[2],
            gamma: v[3],
        }
    }
}

/// Outcome distribution of a single readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    pub plus: f64,
    pub minus: f64,
}

fn check_field(h: f64) -> Result<()> {
    if h.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name: "h",
            value: h,
            reason: "must be finite",
        })
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// One mixture component: returns `(ln(1 - u·t), ln(1 + u·t))` where
/// `u·t = c·tanh(βr)/r` is the component's z-magnetization.
fn component_logs(c: f64, g: f64, beta: f64) -> (f64, f64) {
    let r = c.hypot(g);
    if r < DEGENERATE_NORM {
        let m = c * beta;
        return ((-m).ln_1p(), m.ln_1p());
    }
    let x = beta * r;
    let abs_u = c.abs() / r;
    // 1 - tanh(x) = 2 e^{-2x} / (1 + e^{-2x})
    let ln_one_minus_t = LN_2 - 2.0 * x - (-2.0 * x).exp().ln_1p();
    // 1 - |c|/r = g² / (r (r + |c|))
    let ln_one_minus_u = if g == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * g.abs().ln() - r.ln() - (r + c.abs()).ln()
    };
    let ln_small = if abs_u == 0.0 {
        0.0
    } else {
        log_add_exp(ln_one_minus_u, abs_u.ln() + ln_one_minus_t)
    };
    let ln_big = (abs_u * x.tanh()).ln_1p();
    if c >= 0.0 {
        (ln_small, ln_big)
    } else {
        (ln_big, ln_small)
    }
}

/// Effective output field `h_eff = arctanh E[σ | h]`.
///
/// Evaluated in log space so that saturated qubits (`βr` in the thousands)
/// still produce finite, accurate fields.
pub fn effective_field(h: f64, p: &QubitParams) -> Result<f64> {
    p.validate()?;
    check_field(h)?;
    Ok(effective_field_unchecked(h, p))
}

pub(crate) fn effective_field_unchecked(h: f64, p: &QubitParams) -> f64 {
    let g = p.gamma * h;
    let (m_plus, p_plus) = component_logs(h + p.b + p.eta, g, p.beta);
    let (m_minus, p_minus) = component_logs(h + p.b - p.eta, g, p.beta);
    // ln(1 ± T) = logaddexp over components - ln 2; the ln 2 cancels.
    0.5 * (log_add_exp(p_plus, p_minus) - log_add_exp(m_plus, m_minus))
}

/// `E[σ | h]` from the closed-form mixture, in `(-1, 1)`.
pub fn spin_expectation(h: f64, p: &QubitParams) -> Result<f64> {
    p.validate()?;
    check_field(h)?;
    let g = p.gamma * h;
    let component = |c: f64| {
        let r = c.hypot(g);
        if r < DEGENERATE_NORM {
            c * p.beta
        } else {
            c * (p.beta * r).tanh() / r
        }
    };
    Ok(0.5 * (component(h + p.b + p.eta) + component(h + p.b - p.eta)))
}

/// Gibbs outcome law for an effective field, computed through the logistic
/// `p_± = 1 / (1 + e^{∓2 h_eff})`. The smaller probability is evaluated
/// directly and the larger as its complement, so the pair sums to exactly 1.
pub fn outcome_probability(h_eff: f64) -> Result<OutcomeProbabilities> {
    if h_eff.is_nan() {
        return Err(Error::ParameterDomain {
            name: "h_eff",
            value: h_eff,
            reason: "must not be NaN",
        });
    }
    let small = 1.0 / (1.0 + (2.0 * h_eff.abs()).exp());
    let large = 1.0 - small;
    Ok(if h_eff >= 0.0 {
        OutcomeProbabilities {
            plus: large,
            minus: small,
        }
    } else {
        OutcomeProbabilities {
            plus: small,
            minus: large,
        }
    })
}

type Mat2 = [[f64; 2]; 2];

fn outer(v: [f64; 2]) -> Mat2 {
    [[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

const SIGMA_X: Mat2 = [[0.0, 1.0], [1.0, 0.0]];
const SIGMA_Z: Mat2 = [[1.0, 0.0], [0.0, -1.0]];

/// Canonical density matrix `exp(βH) / Tr exp(βH)` of a real symmetric 2×2
/// Hamiltonian, built from its spectral decomposition.
fn gibbs_state(hamiltonian: &Mat2, beta: f64) -> Mat2 {
    let [[a, g], [_, d]] = *hamiltonian;
    let center = 0.5 * (a + d);
    let half_gap = (0.5 * (a - d)).hypot(g);
    // Eigenvectors of the traceless part, parametrized by the half angle.
    let theta = g.atan2(0.5 * (a - d));
    let upper = [(0.5 * theta).cos(), (0.5 * theta).sin()];
    let lower = [-(0.5 * theta).sin(), (0.5 * theta).cos()];
    let lambda_up = center + half_gap;
    let lambda_down = center - half_gap;
    // exp(βH) scaled by exp(-βλ_up) to stay finite.
    let w_up = 1.0;
    let w_down = (beta * (lambda_down - lambda_up)).exp();
    let p_up = outer(upper);
    let p_down = outer(lower);
    let mut unnormalized = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            unnormalized[i][j] = w_up * p_up[i][j] + w_down * p_down[i][j];
        }
    }
    let trace = unnormalized[0][0] + unnormalized[1][1];
    unnormalized.map(|row| row.map(|x| x / trace))
}

/// `Tr(ρ σz)` for the noise-mixed density matrix, evaluated by explicit
/// diagonalization. Serves as an oracle for [`spin_expectation`].
pub fn density_matrix_expectation(h: f64, p: &QubitParams) -> Result<f64> {
    p.validate()?;
    check_field(h)?;
    let mut total = 0.0;
    for s in [1.0, -1.0] {
        let longitudinal = h + p.b + s * p.eta;
        let mut hamiltonian = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hamiltonian[i][j] =
                    p.gamma * h * SIGMA_X[i][j] + longitudinal * SIGMA_Z[i][j];
            }
        }
        let rho = gibbs_state(&hamiltonian, p.beta);
        let z = mat_mul(&rho, &SIGMA_Z);
        total += 0.5 * (z[0][0] + z[1][1]);
    }
    Ok(total)
}
