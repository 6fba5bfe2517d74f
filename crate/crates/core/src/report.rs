//! Training report: one CSV row per epoch plus a JSON summary.
//!
//! CSV columns, in order:
//!
//! | column    | meaning                                                  |
//! |-----------|----------------------------------------------------------|
//! | `T`       | scheduled epochs completed                               |
//! | `T_eff`   | epochs in single-presentation units                      |
//! | `t`       | presentations so far                                     |
//! | `M`       | total margin errors                                      |
//! | `J_approx`| objective from cached dot products                       |
//! | `J_exact` | exact objective, blank when not evaluated that epoch     |
//! | `L_T`     | dual lower bound                                         |
//! | `gap`     | `(J_exact - L_T) / L_T`, blank without `J_exact` or `L_T > 0` |
//! | `seconds` | wall time since training started                         |
//!
//! Floats use Rust's shortest round-trip formatting, so everything except
//! `seconds` is reproducible bit for bit from the seed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::{Hyperparams, Variant};
use crate::objective::EpochMetrics;

pub const CSV_HEADER: &str = "T,T_eff,t,M,J_approx,J_exact,L_T,gap,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Stopped by the relative-accuracy criterion.
    Converged,
    /// Ran out of epochs before the criterion was met.
    BudgetExhausted,
    /// Random variant finished its step budget.
    StepLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: Variant,
    pub seed: u64,
    pub c: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub f: f64,
    pub ell: u64,
    pub permute_each_epoch: bool,
    pub m: usize,
    pub dim: usize,
    pub status: RunStatus,
    pub t: u64,
    pub t_eff: u64,
    pub epochs_run: u64,
    pub margin_errors: u64,
    pub final_objective: f64,
    pub final_lagrangian: Option<f64>,
    pub final_gap: Option<f64>,
    /// Random variant only: `max_k I_k / (lambda t) - C`.
    pub box_excess: Option<f64>,
    pub seconds: f64,
    #[serde(skip)]
    pub epochs: Vec<EpochMetrics>,
}

impl TrainReport {
    pub(crate) fn new(params: &Hyperparams, dataset: &Dataset, variant: Variant) -> Self {
        Self {
            variant,
            seed: params.seed,
            c: params.c,
            lambda: params.lambda,
            epsilon: params.epsilon,
            f: params.f,
            ell: params.ell,
            permute_each_epoch: params.permute_each_epoch,
            m: dataset.len(),
            dim: dataset.dim(),
            status: RunStatus::StepLimit,
            t: 0,
            t_eff: 0,
            epochs_run: 0,
            margin_errors: 0,
            final_objective: f64::NAN,
            final_lagrangian: None,
            final_gap: None,
            box_excess: None,
            seconds: 0.0,
            epochs: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.epochs.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.6}",
                e.epoch,
                e.t_eff,
                e.t,
                e.margin_errors,
                e.j_approx,
                opt(e.j_exact),
                e.l_t,
                opt(e.gap),
                e.seconds
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{augment_reflect, LabeledExample, SparseVector};
    use crate::engine::run_sgd_s;

    #[test]
    fn csv_shape() {
        let ex: Vec<_> = [(1.0, 1i8), (-0.5, 1), (0.2, -1)]
            .iter()
            .map(|&(x, l)| LabeledExample {
                features: SparseVector::new(vec![(0, x), (1, 1.0)]).unwrap(),
                label: l,
            })
            .collect();
        let ds = augment_reflect(&ex, 0.0).unwrap();
        let p = Hyperparams::from_c(1.0, 3).unwrap().with_epsilon(1e-9).with_epochs_max(7);
        let (_, r) = run_sgd_s(&ds, &p).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 8);
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 9);
        }
        assert!(lines[1].starts_with("1,1,3,"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["variant"], "s");
        assert_eq!(json["status"], "budget-exhausted");
        assert_eq!(json["epochs_run"], 7);
    }
}
