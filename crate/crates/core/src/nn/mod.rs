//! The numeric engine: LSTM cell and bidirectional encoder with masked
//! max-pooling, softmax/cross-entropy, and Adam. Gradients are hand-derived
//! reverse-mode for this fixed architecture.

mod adam;
mod head;
mod lstm;

pub use adam::{AdamConfig, AdamState};
pub use head::{cross_entropy, head_forward, softmax_xent_backward, CE_FLOOR};
pub use lstm::{
    bilstm_backward, bilstm_encode, lstm_cell_forward, BiLstmParams, EncodeCache, LstmParams,
    LstmStep, GATE_COUNT, GATE_NAMES,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("valid_len must be at least 1")]
    EmptySequence,
    #[error("valid_len {valid_len} exceeds sequence length {len}")]
    ValidLenTooLong { valid_len: usize, len: usize },
    #[error("gold label index {gold} out of range for {classes} classes")]
    GoldOutOfRange { gold: usize, classes: usize },
}
