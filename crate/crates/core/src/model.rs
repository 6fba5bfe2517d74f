//! Text model file and prediction.
//!
//! ```text
//! sgdsvm-model 1
//! dim <augmented dimension d+1>
//! rho <rho>
//! C <C>
//! lambda <lambda>
//! variant <r|s|m>
//! seed <seed>
//! T_eff <epochs in single-presentation units>
//! M <margin errors>
//! t <presentations>
//! weights
//! <w_0>
//! ...
//! <w_d>
//! ```
//!
//! Reals are written in shortest round-trip exponent form, so a load/save
//! cycle reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{Dataset, LabeledExample};
use crate::engine::{Hyperparams, ModelState, Variant};
use crate::error::{Error, Result};

const MAGIC: &str = "sgdsvm-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub rho: f64,
    pub c: f64,
    pub lambda: f64,
    pub variant: Variant,
    pub seed: u64,
    pub t_eff: u64,
    pub margin_errors: u64,
    pub t: u64,
    /// `w = a / (lambda t)` over the augmented coordinates; the last entry
    /// multiplies `rho`.
    pub weights: Vec<f64>,
}

impl ModelFile {
    pub fn from_training(state: &ModelState, dataset: &Dataset, params: &Hyperparams) -> Self {
        Self {
            rho: dataset.rho(),
            c: params.c,
            lambda: params.lambda,
            variant: params.variant,
            seed: params.seed,
            t_eff: state.t_eff(),
            margin_errors: state.margin_errors(),
            t: state.t(),
            weights: state.weights(params.lambda),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Number of original features the model accepts.
    pub fn features(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(32 * (self.weights.len() + 12));
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "rho {:e}", self.rho);
        let _ = writeln!(s, "C {:e}", self.c);
        let _ = writeln!(s, "lambda {:e}", self.lambda);
        let _ = writeln!(s, "variant {}", self.variant);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "T_eff {}", self.t_eff);
        let _ = writeln!(s, "M {}", self.margin_errors);
        let _ = writeln!(s, "t {}", self.t);
        s.push_str("weights\n");
        for w in &self.weights {
            let _ = writeln!(s, "{w:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Model(format!("missing '{key}' line")))?;
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| Error::Model(format!("malformed line '{line}'")))?;
            if k != key {
                return Err(Error::Model(format!("expected '{key}', found '{k}'")));
            }
            Ok(v.trim().to_string())
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Model(format!("bad value for {key}: '{v}'")))
        }
        let version: u32 = num("version", &next(MAGIC)?)?;
        if version != VERSION {
            return Err(Error::Model(format!("unsupported version {version}")));
        }
        let dim: usize = num("dim", &next("dim")?)?;
        let rho = num("rho", &next("rho")?)?;
        let c = num("C", &next("C")?)?;
        let lambda = num("lambda", &next("lambda")?)?;
        let variant: Variant = next("variant")?.parse()?;
        let seed = num("seed", &next("seed")?)?;
        let t_eff = num("T_eff", &next("T_eff")?)?;
        let margin_errors = num("M", &next("M")?)?;
        let t = num("t", &next("t")?)?;
        drop(next);
        let mut rest = text.lines().skip(10);
        if rest.next() != Some("weights") {
            return Err(Error::Model("missing 'weights' line".into()));
        }
        let weights = rest
            .filter(|l| !l.trim().is_empty())
            .map(|l| num::<f64>("weight", l.trim()))
            .collect::<Result<Vec<_>>>()?;
        if weights.len() != dim {
            return Err(Error::Model(format!(
                "header says dim {dim} but {} weights follow",
                weights.len()
            )));
        }
        Ok(Self {
            rho,
            c,
            lambda,
            variant,
            seed,
            t_eff,
            margin_errors,
            t,
            weights,
        })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// `w . [x, rho]` for one un-reflected example.
    pub fn decision_value(&self, ex: &LabeledExample) -> f64 {
        let d = self.features();
        ex.features.dot(&self.weights[..d]) + self.weights[d] * self.rho
    }

    /// Predicted labels; a zero decision value maps to +1.
    pub fn predict(&self, examples: &[LabeledExample]) -> Result<Vec<i8>> {
        let data_dim = examples.iter().map(|e| e.features.dim()).max().unwrap_or(0);
        if data_dim > self.features() {
            return Err(Error::DimMismatch {
                data: data_dim,
                model: self.features(),
            });
        }
        Ok(examples
            .iter()
            .map(|e| if self.decision_value(e) >= 0.0 { 1 } else { -1 })
            .collect())
    }
}

/// Fraction of `predicted` matching the examples' labels.
pub fn accuracy(examples: &[LabeledExample], predicted: &[i8]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hits = examples
        .iter()
        .zip(predicted)
        .filter(|(e, &p)| e.label == p)
        .count();
    hits as f64 / examples.len() as f64
}
