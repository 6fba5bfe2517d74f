//! Linear L1-SVM training by stochastic subgradient descent, run in
//! perceptron-with-margin form, with a dual lower bound that certifies the
//! relative accuracy reached.
//!
//! ```no_run
//! use sgdsvm::{augment_reflect, load_libsvm, train, Hyperparams, Variant};
//!
//! let examples = load_libsvm("train.svm")?;
//! let dataset = augment_reflect(&examples, 0.0)?;
//! let params = Hyperparams::from_c(1.0, dataset.len())?.with_variant(Variant::Multiple);
//! let (state, report) = train(&dataset, &params)?;
//! println!("J = {} after {} epochs", report.final_objective, state.t_eff());
//! # Ok::<(), sgdsvm::Error>(())
//! ```

pub mod bench;
pub mod cli;
pub mod data;
pub mod engine;
mod error;
pub mod model;
pub mod objective;
pub mod reference;
pub mod report;
pub mod rng;

pub use data::{
    augment_reflect, load_libsvm, parse_libsvm, scale_features, AugReflPattern, Dataset,
    LabeledExample, SparseVector,
};
pub use engine::{
    multiplicity, run_epoch, run_sgd_m, run_sgd_r, run_sgd_s, train, train_observed, Hyperparams,
    ModelState, Observer, Variant,
};
pub use error::{Error, Result};
pub use model::ModelFile;
pub use objective::{EpochMetrics, StopDecision};
pub use reference::{reference_solve, ReferenceSolution};
pub use report::{RunStatus, TrainReport};
