//! The assembled relation classifier: word + dual position embeddings →
//! bidirectional encoder → one or more dense+softmax heads, plus parameter
//! initialization, checkpointing, and pretrained-vector loading.

mod checkpoint;
mod embed;
mod forward;
mod gradcheck;
mod pretrained;

pub use checkpoint::{checkpoint_dtype, load_checkpoint, save_checkpoint, Checkpoint};
pub use embed::{embed_instance, pad_bucket, position_bucket};
pub use forward::{batch_loss, forward_predict, loss_and_grads, loss_and_grads_ids};
pub use gradcheck::{finite_diff_gradcheck, gradcheck_against, GradCheckReport, TensorCheck,
                    DEFAULT_DELTA, DEFAULT_SAMPLES_PER_TENSOR};
pub use pretrained::{load_pretrained_embeddings, CoverageReport};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AdamConfig, BiLstmParams, LstmParams, NnError, GATE_NAMES};
use crate::real::{Dtype, Real};
use crate::tensor::{Tensor1, Tensor2};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown head {0:?}")]
    UnknownHead(String),
    #[error("batch mixes tasks: expected {expected:?}, found {found:?}")]
    MixedTaskBatch { expected: String, found: String },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("label {0:?} not present in the provided label set")]
    UnknownLabel(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("pretrained vectors line {line}: {message}")]
    Pretrained { line: usize, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint version {found} unsupported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("checkpoint is truncated: expected {expected} data bytes, found {found}")]
    CheckpointTruncated { expected: usize, found: usize },
    #[error("checkpoint is missing tensor {0:?}")]
    MissingTensor(String),
    #[error("checkpoint dtype {found} does not match requested {requested}")]
    DtypeMismatch { found: Dtype, requested: Dtype },
}

/// Numeric mode of a training run. Double precision is reserved for
/// gradient verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Single,
    Double,
}

impl Precision {
    pub fn dtype(self) -> Dtype {
        match self {
            Precision::Single => Dtype::F32,
            Precision::Double => Dtype::F64,
        }
    }
}

/// Every hyperparameter and seed governing a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Word embedding length (d1).
    pub word_dim: usize,
    /// Entity-1 position embedding length (d2).
    pub pos1_dim: usize,
    /// Entity-2 position embedding length (d3).
    pub pos2_dim: usize,
    /// Hidden units per LSTM direction; the pooled vector has twice this.
    pub hidden: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Probability of drawing a source batch under interleaved training.
    pub sample_prob: f64,
    /// Relative token-entity distances clamp to ±this before bucketing.
    pub position_clip: usize,
    pub precision: Precision,
    /// Epoch count for the pretraining phase of sequential transfer;
    /// defaults to `epochs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_epochs: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            word_dim: 100,
            pos1_dim: 10,
            pos2_dim: 10,
            hidden: 100,
            batch_size: 100,
            lr: 0.001,
            epochs: 10,
            seed: 0,
            sample_prob: 0.5,
            position_clip: 30,
            precision: Precision::Single,
            source_epochs: None,
        }
    }
}

impl TrainConfig {
    /// Token feature length: d1 + d2 + d3.
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.pos1_dim + self.pos2_dim
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: &str| Err(ModelError::InvalidConfig(m.into()));
        if self.word_dim == 0 || self.pos1_dim == 0 || self.pos2_dim == 0 || self.hidden == 0 {
            return fail("embedding and hidden dimensions must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.sample_prob > 0.0 && self.sample_prob < 1.0) {
            return fail("sample_prob must lie strictly inside (0, 1)");
        }
        if !(self.lr > 0.0) {
            return fail("lr must be positive");
        }
        if self.position_clip == 0 {
            return fail("position_clip must be at least 1");
        }
        Ok(())
    }
}

/// One classification head: `W` is `|labels| × 2h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head<F: Real> {
    pub w: Tensor2<F>,
    pub b: Tensor1<F>,
}

impl<F: Real> Head<F> {
    pub fn label_count(&self) -> usize {
        self.w.rows()
    }
}

/// All trainable tensors. The same structure serves as the gradient
/// container: a [`GradSet`] is keyed identically by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F: Real> {
    pub word_emb: Tensor2<F>,
    pub pos1_emb: Tensor2<F>,
    pub pos2_emb: Tensor2<F>,
    pub encoder: BiLstmParams<F>,
    pub heads: BTreeMap<String, Head<F>>,
    pub position_clip: usize,
}

/// One gradient tensor per trainable tensor, keyed identically to
/// [`ModelParams`].
pub type GradSet<F> = ModelParams<F>;

impl<F: Real> ModelParams<F> {
    pub fn hidden(&self) -> usize {
        self.encoder.hidden()
    }

    pub fn word_dim(&self) -> usize {
        self.word_emb.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.word_emb.cols() + self.pos1_emb.cols() + self.pos2_emb.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.word_emb.rows()
    }

    pub fn head(&self, name: &str) -> Result<&Head<F>, ModelError> {
        self.heads.get(name).ok_or_else(|| ModelError::UnknownHead(name.to_string()))
    }

    /// Zero tensors mirroring this model's layout (fresh gradient set).
    pub fn zeros_like(&self) -> GradSet<F> {
        let mut heads = BTreeMap::new();
        for (name, head) in &self.heads {
            heads.insert(
                name.clone(),
                Head {
                    w: Tensor2::zeros(head.w.rows(), head.w.cols()),
                    b: Tensor1::zeros(head.b.len()),
                },
            );
        }
        ModelParams {
            word_emb: Tensor2::zeros(self.word_emb.rows(), self.word_emb.cols()),
            pos1_emb: Tensor2::zeros(self.pos1_emb.rows(), self.pos1_emb.cols()),
            pos2_emb: Tensor2::zeros(self.pos2_emb.rows(), self.pos2_emb.cols()),
            encoder: BiLstmParams::zeros(self.hidden(), self.input_dim()),
            heads,
            position_clip: self.position_clip,
        }
    }

    /// `(name, len)` pairs in canonical order, for building optimizer state.
    pub fn tensor_layout(&self) -> Vec<(String, usize)> {
        self.named_tensors().into_iter().map(|(n, s)| (n, s.len())).collect()
    }

    /// `(name, shape)` pairs in canonical order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = vec![
            ("word_emb".to_string(), vec![self.word_emb.rows(), self.word_emb.cols()]),
            ("pos1_emb".to_string(), vec![self.pos1_emb.rows(), self.pos1_emb.cols()]),
            ("pos2_emb".to_string(), vec![self.pos2_emb.rows(), self.pos2_emb.cols()]),
        ];
        for (dir_name, dir) in [("fwd", &self.encoder.fwd), ("bwd", &self.encoder.bwd)] {
            for (k, gate) in GATE_NAMES.iter().enumerate() {
                out.push((
                    format!("encoder.{dir_name}.w_{gate}"),
                    vec![dir.w[k].rows(), dir.w[k].cols()],
                ));
                out.push((
                    format!("encoder.{dir_name}.u_{gate}"),
                    vec![dir.u[k].rows(), dir.u[k].cols()],
                ));
                out.push((format!("encoder.{dir_name}.b_{gate}"), vec![dir.b[k].len()]));
            }
        }
        for (name, head) in &self.heads {
            out.push((format!("head.{name}.w"), vec![head.w.rows(), head.w.cols()]));
            out.push((format!("head.{name}.b"), vec![head.b.len()]));
        }
        out
    }

    /// Flat views of every trainable tensor, canonical order.
    pub fn named_tensors(&self) -> Vec<(String, &[F])> {
        let mut out: Vec<(String, &[F])> = vec![
            ("word_emb".to_string(), self.word_emb.as_slice()),
            ("pos1_emb".to_string(), self.pos1_emb.as_slice()),
            ("pos2_emb".to_string(), self.pos2_emb.as_slice()),
        ];
        for (dir_name, dir) in [("fwd", &self.encoder.fwd), ("bwd", &self.encoder.bwd)] {
            for (k, gate) in GATE_NAMES.iter().enumerate() {
                out.push((format!("encoder.{dir_name}.w_{gate}"), dir.w[k].as_slice()));
                out.push((format!("encoder.{dir_name}.u_{gate}"), dir.u[k].as_slice()));
                out.push((format!("encoder.{dir_name}.b_{gate}"), dir.b[k].as_slice()));
            }
        }
        for (name, head) in &self.heads {
            out.push((format!("head.{name}.w"), head.w.as_slice()));
            out.push((format!("head.{name}.b"), head.b.as_slice()));
        }
        out
    }

    /// Mutable flat views, canonical order.
    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut [F])> {
        let mut out: Vec<(String, &mut [F])> = vec![
            ("word_emb".to_string(), self.word_emb.as_mut_slice()),
            ("pos1_emb".to_string(), self.pos1_emb.as_mut_slice()),
            ("pos2_emb".to_string(), self.pos2_emb.as_mut_slice()),
        ];
        for (dir_name, dir) in [("fwd", &mut self.encoder.fwd), ("bwd", &mut self.encoder.bwd)] {
            let gates = dir.w.iter_mut().zip(dir.u.iter_mut()).zip(dir.b.iter_mut());
            for (k, ((w, u), b)) in gates.enumerate() {
                let gate = GATE_NAMES[k];
                out.push((format!("encoder.{dir_name}.w_{gate}"), w.as_mut_slice()));
                out.push((format!("encoder.{dir_name}.u_{gate}"), u.as_mut_slice()));
                out.push((format!("encoder.{dir_name}.b_{gate}"), b.as_mut_slice()));
            }
        }
        for (name, head) in &mut self.heads {
            out.push((format!("head.{name}.w"), head.w.as_mut_slice()));
            out.push((format!("head.{name}.b"), head.b.as_mut_slice()));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, s)| s.iter().all(|v| v.is_finite()))
    }
}

pub(crate) fn xavier_fill<F: Real>(t: &mut Tensor2<F>, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in t.as_mut_slice() {
        *v = F::from_f64(rng.random_range(-bound..bound));
    }
}

fn uniform_fill<F: Real>(t: &mut Tensor2<F>, bound: f64, rng: &mut ChaCha8Rng) {
    for v in t.as_mut_slice() {
        *v = F::from_f64(rng.random_range(-bound..bound));
    }
}

/// Seeded initialization: Xavier-uniform LSTM/head weights, zero biases
/// except the forget gate at 1.0, embeddings uniform in ±0.05. The draw
/// order is fixed (embeddings, forward gates, backward gates, heads in name
/// order) so identical seeds give identical tensors.
pub fn init_params<F: Real>(
    cfg: &TrainConfig,
    vocab_size: usize,
    heads: &[(String, usize)],
    seed: u64,
) -> Result<ModelParams<F>, ModelError> {
    cfg.validate()?;
    let d_in = cfg.input_dim();
    let h = cfg.hidden;
    let pos_rows = 2 * cfg.position_clip + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut word_emb = Tensor2::zeros(vocab_size, cfg.word_dim);
    uniform_fill(&mut word_emb, 0.05, &mut rng);
    let mut pos1_emb = Tensor2::zeros(pos_rows, cfg.pos1_dim);
    uniform_fill(&mut pos1_emb, 0.05, &mut rng);
    let mut pos2_emb = Tensor2::zeros(pos_rows, cfg.pos2_dim);
    uniform_fill(&mut pos2_emb, 0.05, &mut rng);

    let mut encoder = BiLstmParams::zeros(h, d_in);
    for dir in [&mut encoder.fwd, &mut encoder.bwd] {
        init_direction(dir, h, d_in, &mut rng);
    }

    let mut ordered: BTreeMap<String, usize> = BTreeMap::new();
    for (name, classes) in heads {
        if *classes == 0 {
            return Err(ModelError::InvalidConfig(format!("head {name:?} has zero labels")));
        }
        if ordered.insert(name.clone(), *classes).is_some() {
            return Err(ModelError::InvalidConfig(format!("duplicate head name {name:?}")));
        }
    }
    let mut head_map = BTreeMap::new();
    for (name, classes) in ordered {
        let mut w = Tensor2::zeros(classes, 2 * h);
        xavier_fill(&mut w, 2 * h, classes, &mut rng);
        head_map.insert(name, Head { w, b: Tensor1::zeros(classes) });
    }

    Ok(ModelParams {
        word_emb,
        pos1_emb,
        pos2_emb,
        encoder,
        heads: head_map,
        position_clip: cfg.position_clip,
    })
}

fn init_direction<F: Real>(dir: &mut LstmParams<F>, h: usize, d_in: usize, rng: &mut ChaCha8Rng) {
    for k in 0..GATE_NAMES.len() {
        xavier_fill(&mut dir.w[k], d_in, h, rng);
        xavier_fill(&mut dir.u[k], h, h, rng);
        // forget gate (index 1) opens at init
        dir.b[k].fill(if k == 1 { F::ONE } else { F::ZERO });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            word_dim: 6,
            pos1_dim: 2,
            pos2_dim: 2,
            hidden: 4,
            position_clip: 3,
            ..TrainConfig::default()
        }
    }

    fn heads() -> Vec<(String, usize)> {
        vec![("tgt".to_string(), 2), ("src".to_string(), 3)]
    }

    #[test]
    fn same_seed_same_tensors() {
        let a = init_params::<f64>(&tiny_cfg(), 11, &heads(), 9).unwrap();
        let b = init_params::<f64>(&tiny_cfg(), 11, &heads(), 9).unwrap();
        assert_eq!(a, b);
        let c = init_params::<f64>(&tiny_cfg(), 11, &heads(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn xavier_bound_matches_formula() {
        let cfg = TrainConfig::default();
        let p = init_params::<f64>(&cfg, 5, &[("t".into(), 2)], 1).unwrap();
        // h=100, d_in=120 gate weight: bound = sqrt(6/220) ≈ 0.1651.
        let bound = (6.0f64 / 220.0).sqrt();
        assert!((bound - 0.1651).abs() < 1e-4);
        let w = &p.encoder.fwd.w[0];
        let max = w.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= bound);
        assert!(max > bound * 0.9, "uniform samples should approach the bound");
    }

    #[test]
    fn forget_gate_bias_is_one() {
        let p = init_params::<f32>(&tiny_cfg(), 7, &heads(), 2).unwrap();
        for dir in [&p.encoder.fwd, &p.encoder.bwd] {
            assert!(dir.b[1].iter().all(|&v| v == 1.0));
            assert!(dir.b[0].iter().all(|&v| v == 0.0));
            assert!(dir.b[2].iter().all(|&v| v == 0.0));
            assert!(dir.b[3].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn embeddings_within_init_range() {
        let p = init_params::<f64>(&tiny_cfg(), 40, &heads(), 3).unwrap();
        assert!(p.word_emb.as_slice().iter().all(|v| v.abs() < 0.05));
        assert!(p.pos1_emb.as_slice().iter().all(|v| v.abs() < 0.05));
        assert_eq!(p.pos1_emb.rows(), 2 * 3 + 2);
    }

    #[test]
    fn layout_is_consistent_between_views() {
        let mut p = init_params::<f64>(&tiny_cfg(), 9, &heads(), 4).unwrap();
        let names: Vec<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        let names_mut: Vec<String> = p.named_tensors_mut().into_iter().map(|(n, _)| n).collect();
        let names_shape: Vec<String> = p.tensor_shapes().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, names_mut);
        assert_eq!(names, names_shape);
        // heads come last, sorted by name
        assert_eq!(names[names.len() - 4], "head.src.w");
        assert_eq!(names[names.len() - 1], "head.tgt.b");
        let grads = p.zeros_like();
        let glayout = grads.tensor_layout();
        assert_eq!(p.tensor_layout(), glayout);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut cfg = tiny_cfg();
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_cfg();
        cfg.sample_prob = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_cfg();
        cfg.hidden = 0;
        assert!(cfg.validate().is_err());
    }
}
