//! Experiment harness for the MAP searchers in `bamc`: seeded multi-run
//! experiments, per-iteration CSV records, quantile and rolling-median
//! summaries, and plot-ready tables.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figure;
pub mod summary;

pub use config::{Algorithm, ExperimentConfig, ModelId, Settings};
pub use error::HarnessError;
pub use experiment::{run_experiment, RunRecord};

/// Annealing rates tried for each schedule.
pub const SA_RATES: [f64; 4] = [0.8, 0.85, 0.9, 0.95];

/// Default smoothing window for single-run sample weights.
pub const DEFAULT_WINDOW: usize = 101;
