//! Nelder-Mead simplex minimization with box constraints handled by a
//! smooth sine transform.

/// Closed interval for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Unbounded coordinate to box coordinate.
    pub fn to_box(&self, u: f64) -> f64 {
        let x = self.lo + 0.5 * self.width() * (1.0 + u.sin());
        x.clamp(self.lo, self.hi)
    }

    /// Box coordinate to unbounded coordinate; points on the boundary are
    /// pulled slightly inside so the transform is not stationary there.
    pub fn to_unbounded(&self, x: f64) -> f64 {
        let margin = 1e-6;
        let s = (2.0 * (x - self.lo) / self.width() - 1.0).clamp(-1.0 + margin, 1.0 - margin);
        s.asin()
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Stop when the spread of objective values over the simplex falls below
    /// this fraction of the best value.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn spread_small(best: f64, worst: f64, rel: f64) -> bool {
    (worst - best).abs() <= rel * best.abs().max(f64::MIN_POSITIVE) || worst == best
}

/// Minimize `f` starting from `x0` with an axis-aligned initial simplex of
/// edge `step[i]`. After a converged pass the simplex is rebuilt around the
/// best vertex and the search repeats until a pass no longer improves the
/// objective, which guards against premature collapse.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], options: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_v = eval(&best_x);
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < options.max_iterations {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += step[i];
            let v = eval(&x);
            simplex.push((x, v));
        }

        let pass_start = best_v;
        let mut pass_converged = false;
        while iterations < options.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if spread_small(simplex[0].1, simplex[n].1, options.rel_tolerance) {
                pass_converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64, worst: &[f64]| -> Vec<f64> {
                centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
            };

            let worst = simplex[n].0.clone();
            let reflected = along(1.0, &worst);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(2.0, &worst);
                let fe = eval(&expanded);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < simplex[n].1 {
                    let x = along(0.5, &worst);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = along(-0.5, &worst);
                    let v = eval(&x);
                    (x, v)
                };
                if fc < fr.min(simplex[n].1) {
                    simplex[n] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = anchor
                            .iter()
                            .zip(&vertex.0)
                            .map(|(a, v)| a + 0.5 * (v - a))
                            .collect();
                        let v = eval(&x);
                        *vertex = (x, v);
                    }
                }
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        if !pass_converged {
            break;
        }
        if spread_small(best_v, pass_start, options.rel_tolerance) {
            converged = true;
            break;
        }
    }

    SimplexResult {
        x: best_x,
        value: best_v,
        iterations,
        evaluations,
        converged,
    }
}
