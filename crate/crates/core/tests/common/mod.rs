#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sgdsvm::{augment_reflect, Dataset, LabeledExample, SparseVector};

/// Two noisy sparse classes: each feature is present with probability
/// `density`, drawn from N(label * shift_j, 1), and 5% of labels are flipped.
pub fn random_examples(seed: u64, m: usize, d: usize, density: f64) -> Vec<LabeledExample> {
    generate(seed, m, d, density, 0.5, 0.05, false)
}

/// Benchmark-style data: rows scaled to unit norm (as for tf-idf text),
/// stronger class separation and 2% label noise.
pub fn bench_examples(seed: u64, m: usize, d: usize, density: f64) -> Vec<LabeledExample> {
    generate(seed, m, d, density, 1.5, 0.02, true)
}

pub fn bench_dataset(seed: u64, m: usize, d: usize, density: f64) -> Dataset {
    augment_reflect(&bench_examples(seed, m, d, density), 0.0).unwrap()
}

fn generate(
    seed: u64,
    m: usize,
    d: usize,
    density: f64,
    separation: f64,
    flip: f64,
    unit_rows: bool,
) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let shifts: Vec<f64> = (0..d).map(|_| separation * normal.sample(&mut rng)).collect();
    (0..m)
        .map(|_| {
            let label: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
            let mut entries = Vec::new();
            for (j, s) in shifts.iter().enumerate() {
                if rng.gen_bool(density) {
                    let v = normal.sample(&mut rng) + f64::from(label) * s;
                    entries.push((j, v));
                }
            }
            if unit_rows {
                let n = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    entries.iter_mut().for_each(|(_, v)| *v /= n);
                }
            }
            let observed = if rng.gen_bool(flip) { -label } else { label };
            LabeledExample {
                features: SparseVector::new(entries).unwrap(),
                label: observed,
            }
        })
        .collect()
}

pub fn random_dataset(seed: u64, m: usize, d: usize, density: f64) -> Dataset {
    augment_reflect(&random_examples(seed, m, d, density), 0.0).unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
