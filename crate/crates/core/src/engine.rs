//! The training loop in perceptron form.
//!
//! Stochastic subgradient descent on the L1-SVM objective with learning rate
//! `1/(t+1)` is run on the rescaled vector `a_t = lambda * t * w_t`. In these
//! variables a presentation of pattern `y_k` adds `y_k` to `a` when
//! `a . y_k <= lambda * t` and otherwise only advances `t`, so the shrinking
//! of `w` never touches the dense vector.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{AugReflPattern, Dataset};
use crate::error::{Error, Result};
use crate::objective::{self, EpochMetrics, StopDecision};
use crate::report::{RunStatus, TrainReport};
use crate::rng::SplitMix64;

/// Pattern scheduling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Uniform random selection for a fixed number of steps.
    #[serde(rename = "r")]
    Random,
    /// Complete epochs, one presentation per pattern.
    #[serde(rename = "s")]
    Single,
    /// Complete epochs, some of them with multiple presentations.
    #[serde(rename = "m")]
    Multiple,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Random => "r",
            Variant::Single => "s",
            Variant::Multiple => "m",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(Variant::Random),
            "s" => Ok(Variant::Single),
            "m" => Ok(Variant::Multiple),
            _ => Err(Error::InvalidParam(format!("unknown variant '{s}' (expected r, s or m)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c: f64,
    /// Always `1 / (c * m)`; set through the constructors.
    pub lambda: f64,
    pub rho: f64,
    /// Target relative accuracy `(J - L) / L`.
    pub epsilon: f64,
    /// Comparison coefficient gating the exact objective evaluation.
    pub f: f64,
    /// Multiplicity used by the multiple-update epochs.
    pub ell: u64,
    /// Step budget of the random variant.
    pub t_max: u64,
    /// Epoch budget of the epoch variants.
    pub epochs_max: u64,
    pub variant: Variant,
    pub seed: u64,
    pub permute_each_epoch: bool,
    /// Exact objective is also computed every this many epochs for the log.
    pub exact_every: u64,
}

impl Hyperparams {
    pub const DEFAULT_EPSILON: f64 = 0.01;
    pub const DEFAULT_F: f64 = 1.2;
    pub const DEFAULT_ELL: u64 = 5;
    pub const DEFAULT_EPOCHS_MAX: u64 = 100_000;
    pub const DEFAULT_EXACT_EVERY: u64 = 50;

    /// Parameters for penalty `c` on a training set of `m` patterns.
    pub fn from_c(c: f64, m: usize) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParam(format!("C must be positive, got {c}")));
        }
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            c,
            lambda: 1.0 / (c * m as f64),
            rho: 0.0,
            epsilon: Self::DEFAULT_EPSILON,
            f: Self::DEFAULT_F,
            ell: Self::DEFAULT_ELL,
            t_max: 0,
            epochs_max: Self::DEFAULT_EPOCHS_MAX,
            variant: Variant::Single,
            seed: 0,
            permute_each_epoch: false,
            exact_every: Self::DEFAULT_EXACT_EVERY,
        })
    }

    /// Parameters for regularization `lambda`; `c` is derived as `1 / (lambda m)`.
    pub fn from_lambda(lambda: f64, m: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParam(format!("lambda must be positive, got {lambda}")));
        }
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut p = Self::from_c(1.0 / (lambda * m as f64), m)?;
        p.lambda = lambda;
        Ok(p)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_f(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    pub fn with_ell(mut self, ell: u64) -> Self {
        self.ell = ell;
        self
    }

    pub fn with_t_max(mut self, t_max: u64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_epochs_max(mut self, epochs_max: u64) -> Self {
        self.epochs_max = epochs_max;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_permute_each_epoch(mut self, on: bool) -> Self {
        self.permute_each_epoch = on;
        self
    }

    pub fn with_exact_every(mut self, k: u64) -> Self {
        self.exact_every = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.f >= 1.0 && self.f.is_finite()) {
            return bad(format!("f must be >= 1, got {}", self.f));
        }
        if self.ell == 0 {
            return bad("ell must be >= 1".into());
        }
        if self.exact_every == 0 {
            return bad("exact_every must be >= 1".into());
        }
        Ok(())
    }
}

/// Training state in the rescaled variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    a: Vec<f64>,
    t: u64,
    epochs: u64,
    t_eff: u64,
    margin_errors: u64,
    counts: Vec<u64>,
    // a . y_k and lambda * t at the last presentation of pattern k
    cached_dot: Vec<f64>,
    cached_threshold: Vec<f64>,
    presented: Vec<bool>,
}

impl ModelState {
    /// Zero state for `m` patterns in augmented dimension `dim`.
    pub fn new(dim: usize, m: usize) -> Self {
        Self {
            a: vec![0.0; dim],
            t: 0,
            epochs: 0,
            t_eff: 0,
            margin_errors: 0,
            counts: vec![0; m],
            cached_dot: vec![0.0; m],
            cached_threshold: vec![0.0; m],
            presented: vec![false; m],
        }
    }

    pub fn for_dataset(dataset: &Dataset) -> Self {
        Self::new(dataset.dim(), dataset.len())
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Presentations so far, counting multiplicity.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Completed scheduled epochs.
    pub fn epochs(&self) -> u64 {
        self.epochs
    }

    /// Completed epochs in single-presentation units.
    pub fn t_eff(&self) -> u64 {
        self.t_eff
    }

    /// Total margin errors `M`.
    pub fn margin_errors(&self) -> u64 {
        self.margin_errors
    }

    /// Per-pattern margin-error counts `I_k`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Cached `(a . y_k, lambda * t)` from the last presentation of pattern
    /// `k`, or `None` if it has not been presented yet.
    pub fn cached(&self, k: usize) -> Option<(f64, f64)> {
        self.presented[k].then(|| (self.cached_dot[k], self.cached_threshold[k]))
    }

    pub fn all_presented(&self) -> bool {
        self.presented.iter().all(|&p| p)
    }

    /// The SGD weight vector `w = a / (lambda t)`; zero at `t = 0`.
    pub fn weights(&self, lambda: f64) -> Vec<f64> {
        objective::weight_vector(&self.a, self.t, lambda)
    }

    pub fn a_norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns `(a . y <= lambda t, a . y)`. Equality counts as a margin error.
    #[inline]
    pub fn margin_condition(&self, pattern: &AugReflPattern, lambda: f64) -> (bool, f64) {
        let dot = pattern.y.dot(&self.a);
        (dot <= lambda * self.t as f64, dot)
    }

    /// One presentation of pattern `k`. Returns whether it was a margin error.
    #[inline]
    pub fn single_update(&mut self, k: usize, pattern: &AugReflPattern, lambda: f64) -> bool {
        let (hit, dot) = self.margin_condition(pattern, lambda);
        self.remember(k, dot, lambda);
        if hit {
            pattern.y.add_to(&mut self.a, 1.0);
            self.counts[k] += 1;
            self.margin_errors += 1;
        }
        self.t += 1;
        hit
    }

    /// `ell` consecutive presentations of pattern `k` from a single dot
    /// product. Returns the number of margin errors among them.
    #[inline]
    pub fn multiple_update(
        &mut self,
        k: usize,
        pattern: &AugReflPattern,
        lambda: f64,
        ell: u64,
    ) -> u64 {
        debug_assert!(ell >= 1);
        let dot = pattern.y.dot(&self.a);
        self.remember(k, dot, lambda);
        let p = dot - lambda * self.t as f64;
        let hits = multiplicity(p, ell, lambda, pattern.sq_norm);
        if hits > 0 {
            pattern.y.add_to(&mut self.a, hits as f64);
            self.counts[k] += hits;
            self.margin_errors += hits;
        }
        self.t += ell;
        hits
    }

    fn remember(&mut self, k: usize, dot: f64, lambda: f64) {
        self.cached_dot[k] = dot;
        self.cached_threshold[k] = lambda * self.t as f64;
        self.presented[k] = true;
    }

    /// Largest `I_k / (lambda t) - C` over all patterns: positive values mean
    /// the implied dual variables leave the box `[0, C]`.
    pub fn box_excess(&self, c: f64, lambda: f64) -> f64 {
        if self.t == 0 {
            return -c;
        }
        let max_count = self.counts.iter().copied().max().unwrap_or(0);
        max_count as f64 / (lambda * self.t as f64) - c
    }
}

/// Number of margin errors among `ell` consecutive presentations of one
/// pattern, given `p = a . y - lambda t` at the first of them.
pub fn multiplicity(p: f64, ell: u64, lambda: f64, y_sq_norm: f64) -> u64 {
    let slack = (ell - 1) as f64 * lambda - p;
    if slack < 0.0 {
        return 0;
    }
    let steps = (slack / y_sq_norm.max(lambda)).floor();
    // saturating float-to-int cast
    let steps = steps as u64;
    ell.min(steps.saturating_add(1))
}

/// Multiplicity of the epoch at schedule position `position` (0-based):
/// `ell` when `0 < position mod 9 < 5`, otherwise 1.
pub fn scheduled_multiplicity(position: u64, ell: u64) -> u64 {
    let r = position % 9;
    if r > 0 && r < 5 {
        ell
    } else {
        1
    }
}

/// Callbacks for inspecting a run. Default methods do nothing.
pub trait Observer {
    /// After every presentation (or multiple-presentation block).
    fn on_step(&mut self, _state: &ModelState) {}
    /// After every epoch's metrics are computed.
    fn on_epoch(&mut self, _state: &ModelState, _metrics: &EpochMetrics) {}
}

impl Observer for () {}

/// Presents every pattern once in `order`, each `ell` times in a row.
pub fn run_epoch<O: Observer>(
    state: &mut ModelState,
    dataset: &Dataset,
    order: &[usize],
    ell: u64,
    lambda: f64,
    observer: &mut O,
) {
    debug_assert_eq!(order.len(), dataset.len());
    let patterns = dataset.patterns();
    if ell == 1 {
        for &k in order {
            state.single_update(k, &patterns[k], lambda);
            observer.on_step(state);
        }
    } else {
        for &k in order {
            state.multiple_update(k, &patterns[k], lambda, ell);
            observer.on_step(state);
        }
    }
    state.epochs += 1;
    state.t_eff += ell;
}

/// Trains with the variant selected in `params`.
pub fn train(dataset: &Dataset, params: &Hyperparams) -> Result<(ModelState, TrainReport)> {
    train_observed(dataset, params, &mut ())
}

pub fn train_observed<O: Observer>(
    dataset: &Dataset,
    params: &Hyperparams,
    observer: &mut O,
) -> Result<(ModelState, TrainReport)> {
    match params.variant {
        Variant::Random => run_sgd_r_observed(dataset, params, observer),
        Variant::Single | Variant::Multiple => run_epochs(dataset, params, observer),
    }
}

pub fn run_sgd_r(dataset: &Dataset, params: &Hyperparams) -> Result<(ModelState, TrainReport)> {
    run_sgd_r_observed(dataset, params, &mut ())
}

/// Uniformly random pattern selection until `t_max` presentations.
pub fn run_sgd_r_observed<O: Observer>(
    dataset: &Dataset,
    params: &Hyperparams,
    observer: &mut O,
) -> Result<(ModelState, TrainReport)> {
    params.validate()?;
    let start = Instant::now();
    let m = dataset.len();
    let mut rng = SplitMix64::new(params.seed);
    let mut state = ModelState::for_dataset(dataset);
    let patterns = dataset.patterns();
    for _ in 0..params.t_max {
        let k = rng.below(m as u64) as usize;
        state.single_update(k, &patterns[k], params.lambda);
        observer.on_step(&state);
    }
    let seconds = start.elapsed().as_secs_f64();
    let j = objective::primal_objective(&state.a, state.t, dataset, params.c, params.lambda);
    let mut report = TrainReport::new(params, dataset, Variant::Random);
    report.status = RunStatus::StepLimit;
    report.t = state.t;
    report.margin_errors = state.margin_errors;
    report.final_objective = j;
    report.seconds = seconds;
    report.box_excess = Some(state.box_excess(params.c, params.lambda));
    Ok((state, report))
}

pub fn run_sgd_s(dataset: &Dataset, params: &Hyperparams) -> Result<(ModelState, TrainReport)> {
    let params = params.clone().with_variant(Variant::Single);
    run_epochs(dataset, &params, &mut ())
}

pub fn run_sgd_m(dataset: &Dataset, params: &Hyperparams) -> Result<(ModelState, TrainReport)> {
    let params = params.clone().with_variant(Variant::Multiple);
    run_epochs(dataset, &params, &mut ())
}

fn run_epochs<O: Observer>(
    dataset: &Dataset,
    params: &Hyperparams,
    observer: &mut O,
) -> Result<(ModelState, TrainReport)> {
    params.validate()?;
    if params.epochs_max == 0 {
        return Err(Error::InvalidParam("epoch budget must be >= 1".into()));
    }
    let start = Instant::now();
    let m = dataset.len();
    let (c, lambda) = (params.c, params.lambda);
    let mut rng = SplitMix64::new(params.seed);
    let mut order = rng.permutation(m);
    let mut state = ModelState::for_dataset(dataset);
    let mut report = TrainReport::new(params, dataset, params.variant);
    report.status = RunStatus::BudgetExhausted;

    for position in 0..params.epochs_max {
        if position > 0 && params.permute_each_epoch {
            rng.shuffle(&mut order);
        }
        let ell = match params.variant {
            Variant::Multiple => scheduled_multiplicity(position, params.ell),
            _ => 1,
        };
        run_epoch(&mut state, dataset, &order, ell, lambda, observer);
        debug_assert!(state.counts.iter().all(|&i| i <= state.t_eff));

        let l_t = objective::dual_lagrangian(
            state.margin_errors,
            state.t_eff,
            &state.a,
            state.t,
            c,
            lambda,
            m,
        )?;
        let j_approx = objective::approximate_objective(&state, dataset, c, lambda)?;
        let check = objective::stopping_check(l_t, j_approx, params.epsilon, params.f, || {
            objective::primal_objective(&state.a, state.t, dataset, c, lambda)
        });
        let mut decision = check.decision;
        let mut j_exact = check.j_exact;
        if j_exact.is_none() && state.epochs % params.exact_every == 0 {
            j_exact = Some(objective::primal_objective(&state.a, state.t, dataset, c, lambda));
        }
        let last = position + 1 == params.epochs_max;
        if last && decision != StopDecision::Stopped {
            decision = StopDecision::Budget;
        }
        let metrics = EpochMetrics {
            epoch: state.epochs,
            t_eff: state.t_eff,
            t: state.t,
            margin_errors: state.margin_errors,
            j_approx,
            j_exact,
            l_t,
            gap: j_exact.and_then(|j| objective::relative_gap(j, l_t)),
            w_norm: state.a_norm() / (lambda * state.t as f64),
            decision,
            seconds: start.elapsed().as_secs_f64(),
        };
        observer.on_epoch(&state, &metrics);
        report.epochs.push(metrics);
        if decision == StopDecision::Stopped {
            report.status = RunStatus::Converged;
            break;
        }
    }

    let last = report.epochs.last().expect("at least one epoch");
    report.final_objective = match last.j_exact {
        Some(j) => j,
        None => objective::primal_objective(&state.a, state.t, dataset, c, lambda),
    };
    report.final_lagrangian = Some(last.l_t);
    report.final_gap = objective::relative_gap(report.final_objective, last.l_t);
    report.t = state.t;
    report.t_eff = state.t_eff;
    report.epochs_run = state.epochs;
    report.margin_errors = state.margin_errors;
    report.seconds = start.elapsed().as_secs_f64();
    Ok((state, report))
}
