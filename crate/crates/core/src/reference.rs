//! Reference solver for the boxed dual, used to obtain `J_opt` on small data.
//!
//! Cyclic exact coordinate ascent on
//! `max sum_k alpha_k - ||sum_k alpha_k y_k||^2 / 2` subject to `0 <= alpha_k <= C`.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::objective::primal_at;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// Primal objective at `w`.
    pub j_opt: f64,
    /// Dual objective at `alpha`; `dual <= J_opt(true) <= j_opt`.
    pub dual: f64,
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sweeps: usize,
}

impl ReferenceSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.j_opt - self.dual) / self.j_opt.abs().max(f64::MIN_POSITIVE)
    }
}

pub const DEFAULT_MAX_SWEEPS: usize = 200_000;

/// Solves until the largest projected-gradient violation is at most `tol`.
pub fn reference_solve(dataset: &Dataset, c: f64, tol: f64) -> Result<ReferenceSolution> {
    reference_solve_with_limit(dataset, c, tol, DEFAULT_MAX_SWEEPS)
}

pub fn reference_solve_with_limit(
    dataset: &Dataset,
    c: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<ReferenceSolution> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!("C must be positive, got {c}")));
    }
    let patterns = dataset.patterns();
    let mut alpha = vec![0.0; patterns.len()];
    let mut w = vec![0.0; dataset.dim()];
    let mut violation = f64::INFINITY;

    for sweep in 1..=max_sweeps {
        violation = 0.0f64;
        for (k, p) in patterns.iter().enumerate() {
            // gradient of the minimisation form: w . y_k - 1
            let g = p.y.dot(&w) - 1.0;
            let pg = if alpha[k] <= 0.0 {
                g.min(0.0)
            } else if alpha[k] >= c {
                g.max(0.0)
            } else {
                g
            };
            violation = violation.max(pg.abs());
            if pg == 0.0 {
                continue;
            }
            let target = if p.sq_norm > 0.0 {
                (alpha[k] - g / p.sq_norm).clamp(0.0, c)
            } else {
                c
            };
            let delta = target - alpha[k];
            if delta != 0.0 {
                alpha[k] = target;
                p.y.add_to(&mut w, delta);
            }
        }
        if violation <= tol {
            return Ok(finish(dataset, c, w, alpha, sweep));
        }
    }
    let sol = finish(dataset, c, w, alpha, max_sweeps);
    Err(Error::NoConvergence {
        sweeps: max_sweeps,
        primal: sol.j_opt,
        dual: sol.dual,
        violation,
    })
}

fn finish(dataset: &Dataset, c: f64, w: Vec<f64>, alpha: Vec<f64>, sweeps: usize) -> ReferenceSolution {
    let j_opt = primal_at(&w, dataset, c);
    let dual = alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    ReferenceSolution {
        j_opt,
        dual,
        w,
        alpha,
        sweeps,
    }
}
