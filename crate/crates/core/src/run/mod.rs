//! Batch orchestration: run configuration, the bundled synthetic corpus,
//! analysis runs with persistent artifacts, scoring of run directories and
//! the five-row ablation sweep.

mod ablate;
mod analyze;
mod config;
mod evaluate;
mod io;
pub mod synthetic;

pub use ablate::{ablate, AblationEntry, AblationReport};
pub use analyze::{analyze, run_timestamp, RunManifest, RunSummary, TrialFailureRecord};
pub use config::{
    AblationRow, BackendConfig, BackendKind, EmbedderConfig, EmbedderKind, Paths, RunConfig, Switches,
};
pub use evaluate::{evaluate_run, read_predictions, write_predictions, write_summary, EvaluateOptions, PredictionRow};
pub use io::{read_json, write_atomic, write_json};
