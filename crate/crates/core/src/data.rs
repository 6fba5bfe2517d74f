//! Sparse datasets: LIBSVM text parsing, feature scaling and the
//! augmented-and-reflected pattern representation used by the trainer.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Sparse feature vector with strictly increasing 0-based indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector, checking index order and finiteness.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParam(format!(
                    "indices not strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(i, v)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite value {v} at index {i}")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// One past the largest stored index, or 0 for an empty vector.
    pub fn dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn sq_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Dot product against a dense vector. Indices past the end of `dense`
    /// contribute zero.
    #[inline]
    pub fn dot(&self, dense: &[f64]) -> f64 {
        let mut s = 0.0;
        for &(i, v) in &self.entries {
            if let Some(d) = dense.get(i) {
                s += v * d;
            }
        }
        s
    }

    /// `dense += scale * self`. `dense` must cover every stored index.
    #[inline]
    pub fn add_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: SparseVector,
    /// +1 or -1
    pub label: i8,
}

/// A training pattern `y = [l x, l rho]` with its squared norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct AugReflPattern {
    pub y: SparseVector,
    pub sq_norm: f64,
}

/// Augmented-and-reflected training set. Immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    patterns: Vec<AugReflPattern>,
    features: usize,
    rho: f64,
    radius: f64,
}

impl Dataset {
    pub fn patterns(&self) -> &[AugReflPattern] {
        &self.patterns
    }

    pub fn pattern(&self, k: usize) -> &AugReflPattern {
        &self.patterns[k]
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Number of original features `d`.
    pub fn features(&self) -> usize {
        self.features
    }

    /// Augmented dimension `d + 1`; the last coordinate carries `rho`.
    pub fn dim(&self) -> usize {
        self.features + 1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Largest pattern norm, `R = max_k ||y_k||`.
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Reads `<label> <idx>:<val> ...` lines. Indices in the file are 1-based.
/// Blank lines and `#` comments are skipped.
///
/// Labels are mapped to ±1. If every label is exactly +1 or -1 they are kept;
/// if there are two distinct values the smaller one becomes -1; a single
/// distinct value maps to +1 when positive and -1 otherwise.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Vec<LabeledExample>> {
    let mut raw: Vec<(f64, SparseVector)> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("invalid label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(perr(format!("invalid label '{label_tok}'")));
        }
        let mut entries = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("invalid index '{idx}'")))?;
            if idx == 0 {
                return Err(perr("feature indices start at 1".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("invalid value '{val}'")))?;
            if !val.is_finite() {
                return Err(perr(format!("non-finite value '{val}'")));
            }
            let idx = idx - 1;
            if prev.is_some_and(|p| idx <= p) {
                return Err(perr(format!("index {} is not increasing", idx + 1)));
            }
            prev = Some(idx);
            entries.push((idx, val));
        }
        raw.push((label, SparseVector { entries }));
    }

    let mut distinct: Vec<f64> = Vec::new();
    for &(l, _) in &raw {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    distinct.sort_by(f64::total_cmp);
    if distinct.len() > 2 {
        return Err(Error::TooManyLabels(distinct));
    }
    let pm_one = distinct.iter().all(|&l| l == 1.0 || l == -1.0);
    let map = |l: f64| -> i8 {
        if pm_one {
            l as i8
        } else if distinct.len() == 2 {
            if l == distinct[0] {
                -1
            } else {
                1
            }
        } else if l > 0.0 {
            1
        } else {
            -1
        }
    };
    Ok(raw
        .into_iter()
        .map(|(l, features)| LabeledExample {
            features,
            label: map(l),
        })
        .collect())
}

pub fn load_libsvm<P: AsRef<std::path::Path>>(path: P) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file))
}

/// Writes examples back out in LIBSVM format (1-based indices, shortest
/// round-tripping float representation).
pub fn write_libsvm(examples: &[LabeledExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(if ex.label > 0 { "+1" } else { "-1" });
        for &(i, v) in ex.features.entries() {
            let _ = write!(out, " {}:{}", i + 1, v);
        }
        out.push('\n');
    }
    out
}

pub fn scale_features(examples: &[LabeledExample], factor: f64) -> Result<Vec<LabeledExample>> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidParam(format!(
            "scale factor must be positive and finite, got {factor}"
        )));
    }
    Ok(examples
        .iter()
        .map(|ex| LabeledExample {
            features: SparseVector {
                entries: ex
                    .features
                    .entries
                    .iter()
                    .map(|&(i, v)| (i, v * factor))
                    .collect(),
            },
            label: ex.label,
        })
        .collect())
}

/// Builds the training set, taking the feature count from the data.
pub fn augment_reflect(examples: &[LabeledExample], rho: f64) -> Result<Dataset> {
    let features = examples.iter().map(|e| e.features.dim()).max().unwrap_or(0);
    augment_reflect_with_features(examples, rho, features)
}

/// Builds the training set with an explicit feature count `d`, which must
/// cover every index in the data.
pub fn augment_reflect_with_features(
    examples: &[LabeledExample],
    rho: f64,
    features: usize,
) -> Result<Dataset> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidParam(format!("rho must be >= 0, got {rho}")));
    }
    let data_dim = examples.iter().map(|e| e.features.dim()).max().unwrap_or(0);
    if data_dim > features {
        return Err(Error::DimMismatch {
            data: data_dim,
            model: features,
        });
    }
    let mut patterns = Vec::with_capacity(examples.len());
    let mut max_sq = 0.0f64;
    for ex in examples {
        let l = f64::from(ex.label);
        let mut entries: Vec<(usize, f64)> =
            ex.features.entries.iter().map(|&(i, v)| (i, l * v)).collect();
        if rho > 0.0 {
            entries.push((features, l * rho));
        }
        let y = SparseVector { entries };
        let sq_norm = y.sq_norm();
        max_sq = max_sq.max(sq_norm);
        patterns.push(AugReflPattern { y, sq_norm });
    }
    Ok(Dataset {
        patterns,
        features,
        rho,
        radius: max_sq.sqrt(),
    })
}
