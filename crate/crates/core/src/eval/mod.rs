//! Metrics, the five-run reporting protocol, and the two ablation harnesses.

mod ablation;
mod metrics;
mod protocol;
mod report_io;

pub use ablation::{ablate_same_size, ablate_source_size, AblationRow, AblationTable};
pub use metrics::{evaluate, relative_improvement, ClassMetrics, EvalReport};
pub use protocol::{run_protocol, BestResult, RunResult, RunSummary};
pub use report_io::{eval_report_csv, history_csv};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    EmptyPredictions,
    #[error("label index {index} out of range for {classes} classes")]
    LabelIndexOutOfRange { index: usize, classes: usize },
    #[error("relative improvement undefined for zero baseline F1")]
    ZeroBaseline,
    #[error("protocol needs at least one run")]
    BadRunCount,
    #[error("run {index} failed: {message}")]
    RunFailed { index: usize, message: String },
    #[error("run {index} produced no evaluation (empty test set?)")]
    RunWithoutEvaluation { index: usize },
    #[error("source {name:?} has {size} training instances, fewer than the requested {requested}")]
    SourceTooSmall { name: String, size: usize, requested: usize },
    #[error("ablation supports mixed and multi frameworks, not {0}")]
    UnsupportedFramework(String),
    #[error("ablation fraction {0} outside (0, 1]")]
    BadFraction(f64),
}
