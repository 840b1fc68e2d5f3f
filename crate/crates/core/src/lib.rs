//! Bidirectional-LSTM relation classification with three transfer-learning
//! training schemes (mixed batches, sequential pretraining, multi-task
//! heads), plus the preprocessing, sampling, and evaluation protocol around
//! them.
//!
//! The numeric core is self-contained: hand-derived reverse-mode gradients
//! for the fixed architecture, Adam, and a finite-difference checker that
//! verifies the whole pipeline in double precision.

pub mod corpus;
pub mod eval;
pub mod model;
pub mod nn;
pub mod real;
pub mod tensor;
pub mod transfer;

pub use corpus::{
    build_vocabulary, load_jsonl_dataset, load_task, normalize_token, stratified_partition,
    synth_tasks, CorpusError, LabelSet, RawSentence, RelationInstance, SynthConfig, TaskSpec,
    Vocabulary,
};
pub use eval::{
    ablate_same_size, ablate_source_size, eval_report_csv, evaluate, history_csv,
    relative_improvement, run_protocol, AblationTable, BestResult, EvalError, EvalReport,
    RunSummary,
};
pub use model::{
    checkpoint_dtype, finite_diff_gradcheck, forward_predict, init_params, load_checkpoint,
    load_pretrained_embeddings, loss_and_grads, save_checkpoint, Checkpoint, GradCheckReport,
    GradSet, ModelError, ModelParams, Precision, TrainConfig,
};
pub use nn::{AdamConfig, AdamState, BiLstmParams, LstmParams, NnError};
pub use real::{sigmoid, Dtype, Real};
pub use tensor::{Tensor1, Tensor2};
pub use transfer::{
    check_bijection, run_framework, train_baseline, train_mixed, train_multi, train_seq,
    transfer_params, Framework, LabelBijection, TrainHistory, TrainOutcome, TransferError,
    TransferMode,
};
