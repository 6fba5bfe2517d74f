//! Primal objective, dual lower bound and the stopping rule.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::ModelState;
use crate::error::{Error, Result};

/// Slack allowed in the norm-bound check.
pub const NORM_BOUND_SLACK: f64 = 1e-12;

/// Outcome of the stopping check at an epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopDecision {
    Continue,
    /// The approximate gap passed, the exact one did not.
    ExactCheckTriggered,
    Stopped,
    Budget,
}

/// Per-epoch log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// Scheduled epochs completed.
    pub epoch: u64,
    pub t_eff: u64,
    pub t: u64,
    pub margin_errors: u64,
    pub j_approx: f64,
    pub j_exact: Option<f64>,
    pub l_t: f64,
    /// `(J - L) / L`, present when `J` was computed exactly and `L > 0`.
    pub gap: Option<f64>,
    pub w_norm: f64,
    pub decision: StopDecision,
    /// Wall time since the start of training.
    pub seconds: f64,
}

/// `w = a / (lambda t)`, or zero at `t = 0`.
pub fn weight_vector(a: &[f64], t: u64, lambda: f64) -> Vec<f64> {
    if t == 0 {
        return vec![0.0; a.len()];
    }
    let s = 1.0 / (lambda * t as f64);
    a.iter().map(|v| v * s).collect()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `J(w) = ||w||^2 / 2 + C sum_k max(0, 1 - w . y_k)` with `w = a / (lambda t)`.
pub fn primal_objective(a: &[f64], t: u64, dataset: &Dataset, c: f64, lambda: f64) -> f64 {
    if t == 0 {
        return c * dataset.len() as f64;
    }
    let scale = lambda * t as f64;
    let loss: f64 = dataset
        .patterns()
        .iter()
        .map(|p| (1.0 - p.y.dot(a) / scale).max(0.0))
        .sum();
    0.5 * sq_norm(a) / (scale * scale) + c * loss
}

/// Primal objective at an explicit weight vector.
pub fn primal_at(w: &[f64], dataset: &Dataset, c: f64) -> f64 {
    let loss: f64 = dataset
        .patterns()
        .iter()
        .map(|p| (1.0 - p.y.dot(w)).max(0.0))
        .sum();
    0.5 * sq_norm(w) + c * loss
}

/// `L = C M / T_eff - ||w||^2 / 2`, a lower bound on the optimal objective.
///
/// Only valid after complete epochs, so `t` must equal `m * t_eff`.
pub fn dual_lagrangian(
    margin_errors: u64,
    t_eff: u64,
    a: &[f64],
    t: u64,
    c: f64,
    lambda: f64,
    m: usize,
) -> Result<f64> {
    if t_eff == 0 || t != m as u64 * t_eff {
        return Err(Error::Contract(format!(
            "dual bound needs complete epochs: t = {t}, m = {m}, T_eff = {t_eff}"
        )));
    }
    let scale = lambda * t as f64;
    Ok(c * margin_errors as f64 / t_eff as f64 - 0.5 * sq_norm(a) / (scale * scale))
}

/// Objective with each pattern's loss taken from the dot product cached at
/// its last presentation. The norm term uses the current `a`.
pub fn approximate_objective(
    state: &ModelState,
    dataset: &Dataset,
    c: f64,
    lambda: f64,
) -> Result<f64> {
    let mut loss = 0.0;
    for k in 0..dataset.len() {
        let (dot, threshold) = state.cached(k).ok_or_else(|| {
            Error::Contract(format!("pattern {k} has not been presented yet"))
        })?;
        // threshold = lambda t_k; at t_k = 0 the weight vector was zero
        let margin = if threshold > 0.0 { dot / threshold } else { 0.0 };
        loss += (1.0 - margin).max(0.0);
    }
    let t = state.t();
    let w_sq = if t == 0 {
        0.0
    } else {
        let scale = lambda * t as f64;
        sq_norm(state.a()) / (scale * scale)
    };
    Ok(0.5 * w_sq + c * loss)
}

/// `(j - l) / l`, or `None` when `l <= 0`.
pub fn relative_gap(j: f64, l: f64) -> Option<f64> {
    (l > 0.0).then(|| (j - l) / l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCheck {
    pub decision: StopDecision,
    /// Exact objective, if the approximate test triggered its evaluation.
    pub j_exact: Option<f64>,
}

/// Two-stage stopping rule. The exact objective is only evaluated when the
/// approximate gap is within `f * epsilon`; stopping requires the exact gap
/// to be within `epsilon`.
pub fn stopping_check<F: FnOnce() -> f64>(
    l_t: f64,
    j_approx: f64,
    epsilon: f64,
    f: f64,
    exact: F,
) -> StopCheck {
    let Some(approx_gap) = relative_gap(j_approx, l_t) else {
        return StopCheck {
            decision: StopDecision::Continue,
            j_exact: None,
        };
    };
    if approx_gap > f * epsilon {
        return StopCheck {
            decision: StopDecision::Continue,
            j_exact: None,
        };
    }
    let j = exact();
    let decision = if (j - l_t) / l_t <= epsilon {
        StopDecision::Stopped
    } else {
        StopDecision::ExactCheckTriggered
    };
    StopCheck {
        decision,
        j_exact: Some(j),
    }
}

/// Upper bound on `||w_t||` after `t >= 1` steps:
/// `sqrt(1 + (R^2/lambda - 1) / t) / sqrt(lambda)`.
pub fn norm_bound(t: u64, lambda: f64, radius: f64) -> f64 {
    let t = t as f64;
    (1.0 + (radius * radius / lambda - 1.0) / t).sqrt() / lambda.sqrt()
}

/// Checks `||a / (lambda t)||` against [`norm_bound`]. Returns whether it holds
/// (within [`NORM_BOUND_SLACK`]) and the slack `bound - ||w||`.
pub fn norm_bound_check(a: &[f64], t: u64, lambda: f64, radius: f64) -> (bool, f64) {
    assert!(t >= 1, "norm bound is stated for t >= 1");
    let w_norm = sq_norm(a).sqrt() / (lambda * t as f64);
    let slack = norm_bound(t, lambda, radius) - w_norm;
    (slack >= -NORM_BOUND_SLACK, slack)
}
