//! Acceptance suite. Runs every criterion in a fixed order inside one test so
//! that the timing comparison is not disturbed by concurrently running tests,
//! prints one PASS/FAIL line per criterion and fails if any hard-gated
//! criterion fails.
//!
//! Run with `cargo test -p sgdsvm --test acceptance -- --nocapture` to see
//! the report.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bench_dataset, dist, norm, random_dataset};
use sgdsvm::bench::{run_bench, BenchConfig};
use sgdsvm::engine::{run_epoch, scheduled_multiplicity};
use sgdsvm::objective::{norm_bound_check, primal_objective};
use sgdsvm::rng::SplitMix64;
use sgdsvm::{
    multiplicity, reference_solve, train, train_observed, Dataset, EpochMetrics, Hyperparams,
    ModelState, Observer, RunStatus, Variant,
};

struct Outcome {
    id: u32,
    pass: bool,
    /// Soft-gated criteria are reported but do not fail the suite.
    gated: bool,
    detail: String,
}

impl Outcome {
    fn hard(id: u32, pass: bool, detail: String) -> Self {
        Self { id, pass, gated: true, detail }
    }
}

const MULTIPLICITY_TUPLES: usize = 100_000;
const BOX_DATASETS: u64 = 20;
const BOX_EPOCHS: u64 = 200;
const PENALTIES: [f64; 3] = [0.05, 1.0, 10.0];
const WEAK_DUALITY_TOL: f64 = 1e-9;
const SANDWICH_TOL: f64 = 1e-6;
const STOPPED_ACCURACY: f64 = 0.011;
const GAP_TARGET: f64 = 1e-3;
const GAP_EPOCH_BUDGET: u64 = 100_000;
const EQUIVALENCE_STEPS: u64 = 10_000;
const EQUIVALENCE_TOL: f64 = 1e-6;
const TRAJECTORY_TOL: f64 = 1e-12;
const MACROCYCLE_TOL: f64 = 1e-8;
const REFERENCE_TOL: f64 = 1e-10;

/// Brute-force count of margin errors over `ell` presentations, stepping
/// `p = a.y - lambda t` one presentation at a time.
fn simulate_hits(mut p: f64, ell: u64, lambda: f64, sq: f64) -> u64 {
    let mut hits = 0;
    for _ in 0..ell {
        if p <= 0.0 {
            hits += 1;
            p += sq - lambda;
        } else {
            p -= lambda;
        }
    }
    hits
}

fn criterion_1() -> Outcome {
    let lambdas = [0.01, 0.5, 1.0, 2.0, 10.0];
    let norms = [0.1, 1.0, 2.0, 10.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..MULTIPLICITY_TUPLES {
        let p = rng.gen_range(-10.0..=10.0);
        let ell = rng.gen_range(1..=8u64);
        let lambda = lambdas[rng.gen_range(0..lambdas.len())];
        let sq = norms[rng.gen_range(0..norms.len())];
        if multiplicity(p, ell, lambda, sq) != simulate_hits(p, ell, lambda, sq) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::hard(
        1,
        mismatches == 0 && secs < 5.0,
        format!("{MULTIPLICITY_TUPLES} tuples, {mismatches} mismatches, {secs:.3} s"),
    )
}

/// Checks run on every step and epoch boundary of a training run.
struct Checker<'a> {
    ds: &'a Dataset,
    c: f64,
    lambda: f64,
    /// Reference optimum (primal value) and its dual certificate.
    jopt: Option<(f64, f64)>,
    box_violations: u64,
    weak_violations: u64,
    sandwich_violations: u64,
    norm_violations: u64,
    weak_norm_violations: u64,
    norm_checks: u64,
    epochs: u64,
    min_slack: f64,
}

impl<'a> Checker<'a> {
    fn new(ds: &'a Dataset, c: f64, lambda: f64, jopt: Option<(f64, f64)>) -> Self {
        Self {
            ds,
            c,
            lambda,
            jopt,
            box_violations: 0,
            weak_violations: 0,
            sandwich_violations: 0,
            norm_violations: 0,
            weak_norm_violations: 0,
            norm_checks: 0,
            epochs: 0,
            min_slack: f64::INFINITY,
        }
    }
}

impl Observer for Checker<'_> {
    fn on_step(&mut self, state: &ModelState) {
        let t = state.t();
        if t % 100 != 0 {
            return;
        }
        let (holds, slack) = norm_bound_check(state.a(), t, self.lambda, self.ds.radius());
        self.norm_checks += 1;
        self.min_slack = self.min_slack.min(slack);
        if !holds {
            self.norm_violations += 1;
        }
        let w_norm = norm(state.a()) / (self.lambda * t as f64);
        if w_norm > self.ds.radius() / self.lambda {
            self.weak_norm_violations += 1;
        }
    }

    fn on_epoch(&mut self, state: &ModelState, metrics: &EpochMetrics) {
        self.epochs += 1;
        if state.counts().iter().any(|&i| i > state.t_eff()) {
            self.box_violations += 1;
        }
        let j = primal_objective(state.a(), state.t(), self.ds, self.c, self.lambda);
        if metrics.l_t > j + WEAK_DUALITY_TOL * (1.0 + j.abs()) {
            self.weak_violations += 1;
        }
        if let Some((jopt, dual)) = self.jopt {
            let tol = SANDWICH_TOL * jopt.abs();
            if metrics.l_t > jopt + tol || dual > j + tol {
                self.sandwich_violations += 1;
            }
        }
    }
}

#[derive(Default)]
struct SuiteTotals {
    runs: u64,
    epochs: u64,
    box_violations: u64,
    weak_violations: u64,
    sandwich_violations: u64,
    norm_violations: u64,
    weak_norm_violations: u64,
    norm_checks: u64,
    stopped_runs: u64,
    unstopped_runs: u64,
    worst_stopped_accuracy: f64,
    worst_reference_gap: f64,
}

impl SuiteTotals {
    fn absorb(&mut self, ch: &Checker<'_>) {
        self.runs += 1;
        self.epochs += ch.epochs;
        self.box_violations += ch.box_violations;
        self.weak_violations += ch.weak_violations;
        self.sandwich_violations += ch.sandwich_violations;
        self.norm_violations += ch.norm_violations;
        self.weak_norm_violations += ch.weak_norm_violations;
        self.norm_checks += ch.norm_checks;
    }
}

fn box_dataset(i: u64) -> Dataset {
    let m = 40 + ((i * 37) % 161) as usize;
    let d = 5 + ((i * 13) % 46) as usize;
    let density = [0.2, 0.5, 1.0][(i % 3) as usize];
    random_dataset(100 + i, m, d, density)
}

/// Criteria 2, 3 and 5, plus the step checks of criterion 6.
fn epoch_suite() -> SuiteTotals {
    let mut totals = SuiteTotals::default();
    for i in 0..BOX_DATASETS {
        let ds = box_dataset(i);
        for &c in &PENALTIES {
            let reference = reference_solve(&ds, c, REFERENCE_TOL).expect("reference solve");
            totals.worst_reference_gap = totals.worst_reference_gap.max(reference.relative_gap());
            let jopt = (reference.j_opt, reference.dual);
            for variant in [Variant::Single, Variant::Multiple] {
                let p = Hyperparams::from_c(c, ds.len())
                    .unwrap()
                    .with_variant(variant)
                    .with_seed(i)
                    .with_epsilon(f64::MIN_POSITIVE)
                    .with_epochs_max(BOX_EPOCHS);
                let mut ch = Checker::new(&ds, c, p.lambda, Some(jopt));
                let (state, _) = train_observed(&ds, &p, &mut ch).unwrap();
                assert_eq!(state.epochs(), BOX_EPOCHS);
                totals.absorb(&ch);

                let p = p.with_epsilon(0.01).with_epochs_max(GAP_EPOCH_BUDGET);
                let (_, report) = train(&ds, &p).unwrap();
                if report.status == RunStatus::Converged {
                    totals.stopped_runs += 1;
                    let acc = (report.final_objective - jopt.0) / jopt.0;
                    totals.worst_stopped_accuracy = totals.worst_stopped_accuracy.max(acc);
                } else {
                    totals.unstopped_runs += 1;
                }
            }
        }
    }
    totals
}

struct GapRun {
    epochs: u64,
    gap: f64,
    converged: bool,
}

/// Criterion 4 plus the step checks of criterion 6 on those runs.
fn gap_suite(totals: &mut SuiteTotals) -> Vec<GapRun> {
    let shapes = [(500, 20, 1.0), (500, 50, 0.3), (400, 100, 0.1), (500, 200, 0.05), (300, 30, 0.5)];
    let c = 0.1;
    shapes
        .iter()
        .enumerate()
        .map(|(i, &(m, d, density))| {
            let ds = random_dataset(500 + i as u64, m, d, density);
            let p = Hyperparams::from_c(c, ds.len())
                .unwrap()
                .with_seed(i as u64)
                .with_epsilon(GAP_TARGET)
                .with_epochs_max(GAP_EPOCH_BUDGET);
            let mut ch = Checker::new(&ds, c, p.lambda, None);
            let (state, report) = train_observed(&ds, &p, &mut ch).unwrap();
            totals.absorb(&ch);
            GapRun {
                epochs: state.t_eff(),
                gap: report.final_gap.unwrap_or(f64::INFINITY),
                converged: report.status == RunStatus::Converged,
            }
        })
        .collect()
}

/// Best-effort run at the tighter target; reported only.
fn tight_gap_report() -> String {
    let ds = random_dataset(500, 500, 20, 1.0);
    let p = Hyperparams::from_c(0.1, ds.len())
        .unwrap()
        .with_epsilon(1e-5)
        .with_epochs_max(GAP_EPOCH_BUDGET);
    let (state, report) = train(&ds, &p).unwrap();
    format!(
        "1e-5 target on first dataset: {:?} after {} epochs, gap {:.3e}",
        report.status,
        state.t_eff(),
        report.final_gap.unwrap_or(f64::NAN)
    )
}

/// Literal SGD in the original variables with learning rate 1/(t+1).
fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..5u64 {
        let ds = random_dataset(700 + i, 100 + 50 * i as usize, 10 + 5 * i as usize, 0.5);
        let c = [0.05, 0.1, 1.0, 10.0, 0.5][i as usize];
        let lambda = 1.0 / (c * ds.len() as f64);
        let mut rng = SplitMix64::new(i);
        let mut state = ModelState::for_dataset(&ds);
        let mut w = vec![0.0; ds.dim()];
        for t in 0..EQUIVALENCE_STEPS {
            let k = rng.below(ds.len() as u64) as usize;
            let y = &ds.pattern(k).y;
            let hit = y.dot(&w) <= 1.0;
            let shrink = t as f64 / (t as f64 + 1.0);
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if hit {
                y.add_to(&mut w, 1.0 / (lambda * (t as f64 + 1.0)));
            }
            state.single_update(k, ds.pattern(k), lambda);
            let from_a = state.weights(lambda);
            let rel = dist(&w, &from_a) / (1.0 + norm(&w));
            worst = worst.max(rel);
        }
    }
    Outcome::hard(
        7,
        worst <= EQUIVALENCE_TOL,
        format!("5 datasets x {EQUIVALENCE_STEPS} steps, worst relative error {worst:.3e}"),
    )
}

/// Records counters and `a` after every presentation.
#[derive(Default)]
struct Trajectory {
    steps: Vec<(u64, u64, Vec<f64>)>,
}

impl Observer for Trajectory {
    fn on_step(&mut self, s: &ModelState) {
        self.steps
            .push((s.t(), s.margin_errors(), s.a().to_vec()));
    }
}

fn criterion_8() -> Outcome {
    let ds = random_dataset(800, 120, 15, 0.5);
    let mut counter_mismatch = 0;
    let mut worst_drift = 0.0f64;
    for seed in 0..10u64 {
        let base = Hyperparams::from_c(1.0, ds.len())
            .unwrap()
            .with_seed(seed)
            .with_ell(1)
            .with_epsilon(1e-4)
            .with_epochs_max(100)
            .with_permute_each_epoch(seed % 2 == 1);
        let mut ts = Trajectory::default();
        let mut tm = Trajectory::default();
        let (ss, _) =
            train_observed(&ds, &base.clone().with_variant(Variant::Single), &mut ts).unwrap();
        let (sm, _) =
            train_observed(&ds, &base.clone().with_variant(Variant::Multiple), &mut tm).unwrap();
        if ts.steps.len() != tm.steps.len() || ss.counts() != sm.counts() {
            counter_mismatch += 1;
            continue;
        }
        for (a, b) in ts.steps.iter().zip(&tm.steps) {
            if a.0 != b.0 || a.1 != b.1 {
                counter_mismatch += 1;
            }
            worst_drift = worst_drift.max(dist(&a.2, &b.2));
        }
    }

    // one macrocycle versus its expansion into single presentations
    let mut macro_drift = 0.0f64;
    let mut macro_counter_mismatch = 0;
    for seed in 0..5u64 {
        let ds = random_dataset(810 + seed, 80, 12, 0.6);
        let lambda = 1.0 / (1.0 * ds.len() as f64);
        let order = SplitMix64::new(seed).permutation(ds.len());
        let mut fast = ModelState::for_dataset(&ds);
        let mut slow = ModelState::for_dataset(&ds);
        for position in 0..9 {
            let ell = scheduled_multiplicity(position, 5);
            run_epoch(&mut fast, &ds, &order, ell, lambda, &mut ());
            for &k in &order {
                for _ in 0..ell {
                    slow.single_update(k, ds.pattern(k), lambda);
                }
            }
        }
        assert_eq!(fast.t_eff(), 25);
        if fast.t() != slow.t() || fast.counts() != slow.counts() {
            macro_counter_mismatch += 1;
        }
        macro_drift = macro_drift.max(dist(fast.a(), slow.a()) / (1.0 + norm(slow.a())));
    }

    let pass = counter_mismatch == 0
        && worst_drift <= TRAJECTORY_TOL
        && macro_counter_mismatch == 0
        && macro_drift <= MACROCYCLE_TOL;
    Outcome::hard(
        8,
        pass,
        format!(
            "ell=1 vs s over 10 seeds: {counter_mismatch} counter mismatches, drift {worst_drift:.1e}; \
             macrocycle expansion: {macro_counter_mismatch} mismatches, drift {macro_drift:.1e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let shapes = [
        ("dense-20", 20_000, 20, 1.0),
        ("sparse-2000", 20_000, 2000, 0.01),
        ("mid-100", 10_000, 100, 0.3),
        ("sparse-500", 30_000, 500, 0.02),
        ("dense-50", 5_000, 50, 0.5),
    ];
    let cfg = BenchConfig {
        cs: vec![1.0],
        seeds: 10,
        ..BenchConfig::default()
    };
    let mut ordered = 0;
    let mut lines = Vec::new();
    for (i, &(name, m, d, density)) in shapes.iter().enumerate() {
        let ds = bench_dataset(900 + i as u64, m, d, density);
        let cells = run_bench(&ds, &cfg).expect("bench");
        let time = |v: Variant| cells.iter().find(|c| c.variant == v).unwrap().median_seconds();
        let epochs = |v: Variant| cells.iter().find(|c| c.variant == v).unwrap().median_epochs();
        let (r, s, mm) = (time(Variant::Random), time(Variant::Single), time(Variant::Multiple));
        let ok = mm <= s && s <= r;
        if ok {
            ordered += 1;
        }
        lines.push(format!(
            "    {name:<12} m={m:<6} r {r:.4}s  s {s:.4}s ({:.0} ep)  m {mm:.4}s ({:.0} ep)  {}",
            epochs(Variant::Single),
            epochs(Variant::Multiple),
            if ok { "ordered" } else { "not ordered" }
        ));
    }
    Outcome {
        id: 9,
        pass: ordered >= 3,
        gated: false,
        detail: format!("m <= s <= r on {ordered}/5 datasets (soft)\n{}", lines.join("\n")),
    }
}

fn run_cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_sgdsvm"))
        .args(args)
        .output()
        .expect("run binary")
        .status
        .code()
        .unwrap_or(-1)
}

fn strip_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_10(dir: &Path) -> Outcome {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy.svm");
    let mut models = Vec::new();
    let mut reports = Vec::new();
    for run in 0..3 {
        let model = dir.join(format!("model{run}.txt"));
        let report = dir.join(format!("report{run}.csv"));
        let code = run_cli(&[
            "train",
            "--data",
            data,
            "--variant",
            "m",
            "--C",
            "1",
            "--seed",
            "17",
            "--permute-each-epoch",
            "--model",
            model.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        models.push(std::fs::read(&model).unwrap());
        reports.push(strip_seconds(&std::fs::read_to_string(&report).unwrap()));
    }
    let pass = models.windows(2).all(|w| w[0] == w[1]) && reports.windows(2).all(|w| w[0] == w[1]);
    Outcome::hard(
        10,
        pass,
        format!("3 CLI runs: model files {} bytes each, identical = {pass}", models[0].len()),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut outcomes = Vec::new();

    outcomes.push(criterion_1());

    let start = Instant::now();
    let mut totals = epoch_suite();
    outcomes.push(Outcome::hard(
        2,
        totals.box_violations == 0,
        format!(
            "{} runs, {} epoch boundaries, {} box violations",
            totals.runs, totals.epochs, totals.box_violations
        ),
    ));
    outcomes.push(Outcome::hard(
        3,
        totals.weak_violations == 0,
        format!("{} epoch boundaries, {} weak-duality violations", totals.epochs, totals.weak_violations),
    ));
    outcomes.push(Outcome::hard(
        5,
        totals.sandwich_violations == 0
            && totals.unstopped_runs == 0
            && totals.worst_stopped_accuracy <= STOPPED_ACCURACY,
        format!(
            "{} sandwich violations (reference gap <= {:.1e}); {} eps=0.01 runs stopped, {} did not, \
             worst (J - J_opt)/J_opt = {:.5}",
            totals.sandwich_violations,
            totals.worst_reference_gap,
            totals.stopped_runs,
            totals.unstopped_runs,
            totals.worst_stopped_accuracy
        ),
    ));
    let suite_secs = start.elapsed().as_secs_f64();

    let gap_runs = gap_suite(&mut totals);
    let epochs: Vec<String> = gap_runs
        .iter()
        .map(|g| format!("{}{}", g.epochs, if g.converged { "" } else { "(budget)" }))
        .collect();
    outcomes.push(Outcome::hard(
        4,
        gap_runs.iter().all(|g| g.converged && g.gap <= GAP_TARGET),
        format!(
            "C=0.1, gap <= {GAP_TARGET:e}: epochs [{}]; {}",
            epochs.join(", "),
            tight_gap_report()
        ),
    ));
    outcomes.push(Outcome::hard(
        6,
        totals.norm_violations == 0 && totals.weak_norm_violations == 0,
        format!(
            "{} checks, {} bound violations, {} R/lambda violations",
            totals.norm_checks, totals.norm_violations, totals.weak_norm_violations
        ),
    ));

    outcomes.push(criterion_7());
    outcomes.push(criterion_8());
    outcomes.push(criterion_9());
    outcomes.push(criterion_10(dir.path()));

    outcomes.sort_by_key(|o| o.id);
    println!("\nacceptance ({suite_secs:.1} s for the epoch suite)");
    for o in &outcomes {
        let tag = match (o.pass, o.gated) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "SOFT-FAIL",
        };
        println!("[{tag}] criterion {:>2}: {}", o.id, o.detail);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| o.gated && !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
