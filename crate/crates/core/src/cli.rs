//! Command-line front end: `train`, `predict` and `bench`.
//!
//! Exit codes: 0 when training met its criterion (or finished its step
//! budget), 2 when the epoch budget ran out first, 1 on any error.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::bench::{format_table, run_bench, BenchConfig};
use crate::data::{augment_reflect, load_libsvm, scale_features, LabeledExample};
use crate::engine::{train, Hyperparams, Variant};
use crate::model::{accuracy, ModelFile};
use crate::report::RunStatus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sgdsvm", version, about = "Linear L1-SVM training by SGD with a duality-gap stopping rule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model.
    Train(TrainArgs),
    /// Predict labels with a trained model.
    Predict(PredictArgs),
    /// Time each variant to a relative accuracy against J_opt.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    data: PathBuf,
    /// r (random selection), s (single-update epochs) or m (multiple-update epochs).
    #[arg(long, default_value = "s", value_parser = parse_variant)]
    variant: Variant,
    /// Penalty parameter C.
    #[arg(long = "C", conflicts_with = "lambda", required_unless_present = "lambda")]
    c: Option<f64>,
    /// Regularization parameter; C is then 1/(lambda m).
    #[arg(long)]
    lambda: Option<f64>,
    /// Target relative accuracy (J - L) / L.
    #[arg(long, default_value_t = Hyperparams::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Comparison coefficient for the approximate-objective test.
    #[arg(long, default_value_t = Hyperparams::DEFAULT_F)]
    f: f64,
    /// Multiplicity of the multiple-update epochs.
    #[arg(long, default_value_t = Hyperparams::DEFAULT_ELL)]
    ell: u64,
    /// Step budget (required for variant r).
    #[arg(long)]
    tmax: Option<u64>,
    /// Epoch budget for variants s and m.
    #[arg(long = "Tmax", default_value_t = Hyperparams::DEFAULT_EPOCHS_MAX)]
    epochs_max: u64,
    /// Augmentation coordinate (0 means no bias).
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Multiply every feature value by this factor before training.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw a fresh permutation before every epoch.
    #[arg(long)]
    permute_each_epoch: bool,
    /// Also evaluate the exact objective every this many epochs.
    #[arg(long, default_value_t = Hyperparams::DEFAULT_EXACT_EVERY)]
    exact_every: u64,
    /// Output model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Per-epoch CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON run summary.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Feature scale factor; use the one given at training time.
    #[arg(long)]
    scale: Option<f64>,
    /// Write predicted labels here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated penalty values.
    #[arg(long = "C", value_delimiter = ',', default_value = "1")]
    cs: Vec<f64>,
    /// Comma-separated variants.
    #[arg(long, value_delimiter = ',', default_value = "r,s,m", value_parser = parse_variant)]
    variants: Vec<Variant>,
    /// Relative accuracy (J - J_opt) / J_opt to reach.
    #[arg(long, default_value_t = 0.01)]
    target: f64,
    /// Number of seeds per cell.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Known optimal objective; skips the reference solve.
    #[arg(long)]
    jopt: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = Hyperparams::DEFAULT_F)]
    f: f64,
    #[arg(long, default_value_t = Hyperparams::DEFAULT_ELL)]
    ell: u64,
    #[arg(long = "Tmax", default_value_t = Hyperparams::DEFAULT_EPOCHS_MAX)]
    epochs_max: u64,
    #[arg(long)]
    permute_each_epoch: bool,
    /// Try epsilon = target * 2^k for k from this value down to 0.
    #[arg(long, default_value_t = 8)]
    epsilon_steps: u32,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a).map(|_| EXIT_OK),
        Command::Bench(a) => cmd_bench(a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn load(path: &PathBuf, scale: Option<f64>) -> anyhow::Result<Vec<LabeledExample>> {
    let examples = load_libsvm(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match scale {
        Some(f) => scale_features(&examples, f)?,
        None => examples,
    })
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<i32> {
    if a.variant == Variant::Random && a.tmax.is_none() {
        bail!("--variant r requires --tmax");
    }
    let examples = load(&a.data, a.scale)?;
    let dataset = augment_reflect(&examples, a.rho)?;
    let m = dataset.len();
    let base = match (a.c, a.lambda) {
        (Some(c), _) => Hyperparams::from_c(c, m)?,
        (None, Some(l)) => Hyperparams::from_lambda(l, m)?,
        (None, None) => bail!("one of --C or --lambda is required"),
    };
    let params = base
        .with_variant(a.variant)
        .with_rho(a.rho)
        .with_epsilon(a.epsilon)
        .with_f(a.f)
        .with_ell(a.ell)
        .with_t_max(a.tmax.unwrap_or(0))
        .with_epochs_max(a.epochs_max)
        .with_seed(a.seed)
        .with_permute_each_epoch(a.permute_each_epoch)
        .with_exact_every(a.exact_every);

    let (state, report) = train(&dataset, &params)?;

    if let Some(path) = &a.model {
        ModelFile::from_training(&state, &dataset, &params)
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.report {
        std::fs::write(path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.summary {
        std::fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }

    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.10}"));
    println!("variant     {}", report.variant);
    println!("status      {:?}", report.status);
    println!("J           {:.10}", report.final_objective);
    println!("L_T         {}", fmt_opt(report.final_lagrangian));
    println!("gap         {}", fmt_opt(report.final_gap));
    println!("epochs      {} (T_eff {})", report.epochs_run, report.t_eff);
    println!("steps       {}", report.t);
    println!("seconds     {:.6}", report.seconds);
    if let Some(x) = report.box_excess {
        println!("box excess  {x:.6e}");
    }

    Ok(match report.status {
        RunStatus::BudgetExhausted => EXIT_BUDGET,
        RunStatus::Converged | RunStatus::StepLimit => EXIT_OK,
    })
}

fn cmd_predict(a: PredictArgs) -> anyhow::Result<()> {
    let model = ModelFile::load(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let examples = load(&a.data, a.scale)?;
    let predicted = model.predict(&examples)?;
    let acc = accuracy(&examples, &predicted);
    let hits = (acc * examples.len() as f64).round() as usize;
    let mut labels = String::with_capacity(3 * predicted.len());
    for p in &predicted {
        labels.push_str(if *p > 0 { "+1\n" } else { "-1\n" });
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "accuracy {acc:.6} ({hits}/{})", examples.len())?;
    match &a.out {
        Some(path) => std::fs::write(path, labels).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(labels.as_bytes())?,
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let examples = load(&a.data, a.scale)?;
    let dataset = augment_reflect(&examples, a.rho)?;
    let cfg = BenchConfig {
        cs: a.cs,
        variants: a.variants,
        target: a.target,
        seeds: a.seeds,
        jopt: a.jopt,
        f: a.f,
        ell: a.ell,
        epochs_max: a.epochs_max,
        permute_each_epoch: a.permute_each_epoch,
        epsilon_steps: a.epsilon_steps,
    };
    let cells = run_bench(&dataset, &cfg)?;
    print!("{}", format_table(&cells, cfg.target));
    Ok(())
}
