//! Time-to-accuracy benchmark: every variant is run until the primal
//! objective is within a relative `target` of `J_opt`.
//!
//! The epoch variants take `epsilon` as input. For each seed the largest
//! `epsilon` on the grid `target * 2^k, k = epsilon_steps..=0` whose run ends
//! within the target is used; `epsilon = target` always qualifies because the
//! duality gap bounds the relative accuracy. The random variant is given the
//! same number of steps the single-update variant used for the same seed.
//! Reported times exclude parsing and include the initial permutation.

use std::fmt::Write as _;

use crate::data::Dataset;
use crate::engine::{train, Hyperparams, Variant};
use crate::error::{Error, Result};
use crate::reference::reference_solve;

/// Projected-gradient tolerance of the reference solve.
pub const REFERENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cs: Vec<f64>,
    pub variants: Vec<Variant>,
    pub target: f64,
    pub seeds: u64,
    /// Known optimum; only meaningful with a single `C`.
    pub jopt: Option<f64>,
    pub f: f64,
    pub ell: u64,
    pub epochs_max: u64,
    pub permute_each_epoch: bool,
    /// Number of doublings of `target` tried as `epsilon`.
    pub epsilon_steps: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            cs: vec![1.0],
            variants: vec![Variant::Random, Variant::Single, Variant::Multiple],
            target: 0.01,
            seeds: 10,
            jopt: None,
            f: Hyperparams::DEFAULT_F,
            ell: Hyperparams::DEFAULT_ELL,
            epochs_max: Hyperparams::DEFAULT_EPOCHS_MAX,
            permute_each_epoch: false,
            epsilon_steps: 8,
        }
    }
}

/// One run of one variant.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub seed: u64,
    /// `epsilon` used by the run; NaN for the random variant.
    pub epsilon: f64,
    /// Steps divided by `m`, i.e. single-presentation epochs.
    pub epochs: f64,
    pub seconds: f64,
    /// `(J - J_opt) / J_opt` at the end of the run.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct BenchCell {
    pub variant: Variant,
    pub c: f64,
    pub jopt: f64,
    pub runs: Vec<BenchRun>,
}

impl BenchCell {
    pub fn median_seconds(&self) -> f64 {
        median(self.runs.iter().map(|r| r.seconds))
    }

    pub fn median_epochs(&self) -> f64 {
        median(self.runs.iter().map(|r| r.epochs))
    }

    pub fn median_epsilon(&self) -> f64 {
        median(self.runs.iter().map(|r| r.epsilon))
    }

    pub fn median_gap(&self) -> f64 {
        median(self.runs.iter().map(|r| r.gap))
    }

    pub fn reached(&self, target: f64) -> usize {
        self.runs.iter().filter(|r| r.gap <= target).count()
    }
}

pub fn median<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn run_bench(dataset: &Dataset, cfg: &BenchConfig) -> Result<Vec<BenchCell>> {
    if cfg.jopt.is_some() && cfg.cs.len() != 1 {
        return Err(Error::InvalidParam("--jopt requires exactly one C value".into()));
    }
    if !(cfg.target > 0.0) || cfg.seeds == 0 {
        return Err(Error::InvalidParam("target must be positive and seeds >= 1".into()));
    }
    let m = dataset.len() as f64;
    let mut cells = Vec::new();
    for &c in &cfg.cs {
        let jopt = match cfg.jopt {
            Some(j) => j,
            None => reference_solve(dataset, c, REFERENCE_TOL)?.j_opt,
        };
        let base = Hyperparams::from_c(c, dataset.len())?
            .with_rho(dataset.rho())
            .with_epsilon(cfg.target)
            .with_f(cfg.f)
            .with_ell(cfg.ell)
            .with_epochs_max(cfg.epochs_max)
            .with_permute_each_epoch(cfg.permute_each_epoch);
        let mut by_variant: Vec<BenchCell> = cfg
            .variants
            .iter()
            .map(|&variant| BenchCell {
                variant,
                c,
                jopt,
                runs: Vec::new(),
            })
            .collect();
        for seed in 0..cfg.seeds {
            let mut single_steps = None;
            for variant in [Variant::Single, Variant::Multiple] {
                let wanted = by_variant.iter().any(|c| c.variant == variant);
                if !wanted && !(variant == Variant::Single && cfg.variants.contains(&Variant::Random)) {
                    continue;
                }
                let p = base.clone().with_seed(seed).with_variant(variant);
                let run = tuned_run(dataset, &p, cfg, jopt)?;
                if variant == Variant::Single {
                    single_steps = Some((run.epochs * m).round() as u64);
                }
                if let Some(cell) = by_variant.iter_mut().find(|c| c.variant == variant) {
                    cell.runs.push(run);
                }
            }
            if let Some(cell) = by_variant.iter_mut().find(|c| c.variant == Variant::Random) {
                let p = base
                    .clone()
                    .with_seed(seed)
                    .with_variant(Variant::Random)
                    .with_t_max(single_steps.expect("single-update run precedes random"));
                let (_, report) = train(dataset, &p)?;
                cell.runs.push(BenchRun {
                    seed,
                    epsilon: f64::NAN,
                    epochs: report.t as f64 / m,
                    seconds: report.seconds,
                    gap: (report.final_objective - jopt) / jopt,
                });
            }
        }
        cells.extend(by_variant);
    }
    Ok(cells)
}

/// Runs an epoch variant with the largest grid `epsilon` that meets the target.
fn tuned_run(dataset: &Dataset, base: &Hyperparams, cfg: &BenchConfig, jopt: f64) -> Result<BenchRun> {
    let m = dataset.len() as f64;
    let mut last = None;
    for k in (0..=cfg.epsilon_steps).rev() {
        let epsilon = cfg.target * f64::from(2u32.pow(k));
        let (_, report) = train(dataset, &base.clone().with_epsilon(epsilon))?;
        let run = BenchRun {
            seed: base.seed,
            epsilon,
            epochs: report.t as f64 / m,
            seconds: report.seconds,
            gap: (report.final_objective - jopt) / jopt,
        };
        if run.gap <= cfg.target {
            return Ok(run);
        }
        last = Some(run);
    }
    Ok(last.expect("grid is non-empty"))
}

/// Plain-text table, one row per (variant, C).
pub fn format_table(cells: &[BenchCell], target: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>10} {:>14} {:>10} {:>12} {:>12} {:>12} {:>8}",
        "variant", "C", "J_opt", "epsilon", "epochs", "seconds", "gap", "reached"
    );
    for cell in cells {
        let name = match cell.variant {
            Variant::Random => "SGD-r",
            Variant::Single => "SGD-s",
            Variant::Multiple => "SGD-m",
        };
        let _ = writeln!(
            s,
            "{:<8} {:>10} {:>14.8} {:>10} {:>12.1} {:>12.6} {:>12.3e} {:>5}/{}",
            name,
            cell.c,
            cell.jopt,
            if cell.variant == Variant::Random {
                "-".to_string()
            } else {
                format!("{:.4}", cell.median_epsilon())
            },
            cell.median_epochs(),
            cell.median_seconds(),
            cell.median_gap(),
            cell.reached(target),
            cell.runs.len()
        );
    }
    s
}
