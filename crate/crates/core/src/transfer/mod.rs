//! The baseline trainer and the three transfer frameworks: mixed-batch
//! co-training under a label bijection, sequential parameter transplanting
//! (full or all-but-head), and multi-task training with one head per task.

mod bijection;
mod stream;
mod trainers;

pub use bijection::{check_bijection, LabelBijection};
pub use stream::{sample_task, BatchStream, TaskChoice};
pub use trainers::{
    evaluate_task, run_framework, train_baseline, train_baseline_with_vocab, train_mixed,
    train_multi, train_seq, train_step, transfer_params, EpochRecord, Framework, TrainHistory,
    TrainOutcome, TransferMode,
};

use thiserror::Error;

use crate::eval::EvalError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("label sets have different sizes: {source_len} vs {target_len}")]
    BijectionCardinality { source_len: usize, target_len: usize },
    #[error("mapping misses source label {label:?}")]
    BijectionIncomplete { label: String },
    #[error("mapping sends two source labels to target label {target_label:?}")]
    BijectionNotInjective { target_label: String },
    #[error("mapping repeats source label {label:?}")]
    BijectionDuplicateSource { label: String },
    #[error("unknown {side} label {label:?} in mapping")]
    BijectionUnknownLabel { side: &'static str, label: String },
    #[error("no usable bijection: {0}")]
    MissingBijection(String),
    #[error("task {0:?} has an empty training set")]
    EmptyTrainSet(String),
    #[error("full transfer needs matching head sizes: source {source_size}, target {target_size}")]
    HeadSizeMismatch { source_size: usize, target_size: usize },
    #[error("the {0} framework requires a source task")]
    MissingSource(String),
    #[error("multi-task training needs distinct task names, both are {0:?}")]
    DuplicateTaskNames(String),
    #[error("label {label:?} missing from task {task:?} label set")]
    LabelNotInTask { task: String, label: String },
}
