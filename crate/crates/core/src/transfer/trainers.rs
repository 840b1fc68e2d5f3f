//! Training loops. One run owns its parameters, optimizer state, and rng
//! streams exclusively; all randomness is derived from the config seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, RelationInstance, TaskSpec, Vocabulary};
use crate::eval::{evaluate, BestResult, EvalReport};
use crate::model::{
    forward_predict, init_params, loss_and_grads_ids, xavier_fill, Head, ModelParams, TrainConfig,
};
use crate::nn::{AdamConfig, AdamState};
use crate::real::Real;
use crate::tensor::{Tensor1, Tensor2};

use super::bijection::{check_bijection, LabelBijection};
use super::stream::{sample_task, BatchStream, TaskChoice};
use super::TransferError;

// ChaCha stream ids under the run seed. Distinct streams keep the task
// sampler, the per-task shuffles, and head re-initialization independent.
// Single-task fitting always uses STREAM_SINGLE_FIT, so sequential
// pretraining consumes batches exactly like a baseline run on the source.
const STREAM_SAMPLER: u64 = 11;
const STREAM_INTERLEAVED_SOURCE: u64 = 12;
const STREAM_SINGLE_FIT: u64 = 13;
const STREAM_TRANSFER_HEAD: u64 = 14;

/// One epoch of bookkeeping. `report` is absent when the task has no test
/// split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub mean_loss: f64,
    pub report: Option<EvalReport>,
}

/// Per-epoch training trace plus the best-F1 epoch index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainHistory {
    /// Evaluation of the initial parameters, before any update.
    pub initial: Option<EvalReport>,
    pub epochs: Vec<EpochRecord>,
    /// Index of the best micro-F1 epoch (first on ties); `None` until an
    /// epoch carries a report.
    pub best: Option<usize>,
}

impl TrainHistory {
    fn push(&mut self, record: EpochRecord) {
        let idx = self.epochs.len();
        if let Some(report) = &record.report {
            let better = match self.best {
                None => true,
                Some(b) => {
                    let best_f1 = self.epochs[b]
                        .report
                        .as_ref()
                        .map(|r| r.micro_f1)
                        .expect("best always points at a reported epoch");
                    report.micro_f1 > best_f1
                }
            };
            if better {
                self.best = Some(idx);
            }
        }
        self.epochs.push(record);
    }

    pub fn best_record(&self) -> Option<&EpochRecord> {
        self.best.map(|i| &self.epochs[i])
    }

    /// Best-epoch (F1, P, R) triple for the run protocol.
    pub fn best_result(&self) -> Option<BestResult> {
        let best_epoch = self.best?;
        let report = self.epochs[best_epoch].report.as_ref()?;
        Some(BestResult {
            f1: report.micro_f1,
            precision: report.micro_precision,
            recall: report.micro_recall,
            best_epoch,
        })
    }
}

/// Trained parameters plus the vocabulary they are indexed against.
#[derive(Debug, Clone)]
pub struct TrainOutcome<F: Real> {
    pub params: ModelParams<F>,
    pub vocab: Vocabulary,
    /// Target-task history (the only history for single-task training).
    pub history: TrainHistory,
    /// Source-phase history for sequential transfer.
    pub pretrain_history: Option<TrainHistory>,
}

/// One optimization step: exact gradients through the named head, then a
/// filtered Adam update that leaves every other head untouched.
pub fn train_step<F: Real>(
    params: &mut ModelParams<F>,
    adam: &mut AdamState<F>,
    adam_cfg: &AdamConfig,
    batch: &[RelationInstance],
    gold_ids: &[usize],
    vocab: &Vocabulary,
    head_name: &str,
) -> Result<f64, TransferError> {
    let (loss, grads) = loss_and_grads_ids(batch, gold_ids, vocab, params, head_name)?;
    let own_prefix = format!("head.{head_name}.");
    adam.step_filtered(
        params.named_tensors_mut(),
        &grads.named_tensors(),
        adam_cfg,
        |name| !name.starts_with("head.") || name.starts_with(&own_prefix),
    );
    Ok(loss)
}

/// Frozen-model evaluation of a task's test split through one head.
/// Returns `None` when the test split is empty.
pub fn evaluate_task<F: Real>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    task: &TaskSpec,
    head_name: &str,
) -> Result<Option<EvalReport>, TransferError> {
    if task.test.is_empty() {
        return Ok(None);
    }
    let mut pairs = Vec::with_capacity(task.test.len());
    for inst in &task.test {
        let gold = lookup_label(task, &inst.label)?;
        let (_, pred) = forward_predict(inst, vocab, params, head_name)?;
        pairs.push((gold, pred));
    }
    Ok(Some(evaluate(&pairs, &task.labels)?))
}

fn lookup_label(task: &TaskSpec, label: &str) -> Result<usize, TransferError> {
    task.labels.index_of(label).ok_or_else(|| TransferError::LabelNotInTask {
        task: task.name.clone(),
        label: label.to_string(),
    })
}

fn gold_ids(task: &TaskSpec, bijection: Option<&LabelBijection>) -> Result<Vec<usize>, TransferError> {
    task.train
        .iter()
        .map(|inst| {
            let own = lookup_label(task, &inst.label)?;
            Ok(match bijection {
                Some(bij) => bij.map_index(own),
                None => own,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn fit_single<F: Real>(
    params: &mut ModelParams<F>,
    adam: &mut AdamState<F>,
    task: &TaskSpec,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    head_name: &str,
    epochs: usize,
    batch_stream: u64,
    record_initial: bool,
) -> Result<TrainHistory, TransferError> {
    if task.train.is_empty() {
        return Err(TransferError::EmptyTrainSet(task.name.clone()));
    }
    let gold = gold_ids(task, None)?;
    let adam_cfg = cfg.adam();
    let mut history = TrainHistory::default();
    if record_initial {
        history.initial = evaluate_task(params, vocab, task, head_name)?;
    }
    let mut stream = BatchStream::new(task.train.len(), cfg.seed, batch_stream);
    let steps_per_epoch = BatchStream::batches_per_epoch(task.train.len(), cfg.batch_size);
    for _ in 0..epochs {
        let mut loss_sum = 0.0;
        for _ in 0..steps_per_epoch {
            let idxs = stream.next_batch(cfg.batch_size);
            let batch: Vec<RelationInstance> = idxs.iter().map(|&i| task.train[i].clone()).collect();
            let batch_gold: Vec<usize> = idxs.iter().map(|&i| gold[i]).collect();
            loss_sum +=
                train_step(params, adam, &adam_cfg, &batch, &batch_gold, vocab, head_name)?;
        }
        let report = evaluate_task(params, vocab, task, head_name)?;
        history.push(EpochRecord { mean_loss: loss_sum / steps_per_epoch as f64, report });
    }
    Ok(history)
}

/// Trains the plain single-task classifier against an externally built
/// vocabulary (the building block for the transfer frameworks).
pub fn train_baseline_with_vocab<F: Real>(
    task: &TaskSpec,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, TransferError> {
    cfg.validate().map_err(TransferError::Model)?;
    let mut params = init_params::<F>(
        cfg,
        vocab.size(),
        &[(task.name.clone(), task.labels.len())],
        cfg.seed,
    )?;
    let mut adam = AdamState::new(&params.tensor_layout());
    let history = fit_single(
        &mut params,
        &mut adam,
        task,
        vocab,
        cfg,
        &task.name,
        cfg.epochs,
        STREAM_SINGLE_FIT,
        true,
    )?;
    Ok(TrainOutcome { params, vocab: vocab.clone(), history, pretrain_history: None })
}

/// Target-only training; the vocabulary comes from the task's own training
/// split.
pub fn train_baseline<F: Real>(
    task: &TaskSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, TransferError> {
    let vocab = build_vocabulary(&[&task.train]);
    train_baseline_with_vocab(task, &vocab, cfg)
}

struct InterleavedSpec<'a> {
    source: &'a TaskSpec,
    target: &'a TaskSpec,
    source_head: String,
    target_head: String,
    source_gold: Vec<usize>,
    target_gold: Vec<usize>,
}

fn fit_interleaved<F: Real>(
    params: &mut ModelParams<F>,
    adam: &mut AdamState<F>,
    spec: &InterleavedSpec<'_>,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TransferError> {
    for task in [spec.source, spec.target] {
        if task.train.is_empty() {
            return Err(TransferError::EmptyTrainSet(task.name.clone()));
        }
    }
    let adam_cfg = cfg.adam();
    let mut sampler = ChaCha8Rng::seed_from_u64(cfg.seed);
    sampler.set_stream(STREAM_SAMPLER);
    let mut source_stream = BatchStream::new(spec.source.train.len(), cfg.seed, STREAM_INTERLEAVED_SOURCE);
    let mut target_stream = BatchStream::new(spec.target.train.len(), cfg.seed, STREAM_SINGLE_FIT);
    // Random interleaving has no natural epoch; one "epoch" is the step
    // budget that would sweep both training sets once.
    let steps_per_epoch =
        (spec.source.train.len() + spec.target.train.len()).div_ceil(cfg.batch_size);

    let mut history = TrainHistory::default();
    history.initial = evaluate_task(params, vocab, spec.target, &spec.target_head)?;
    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for _ in 0..steps_per_epoch {
            let (task, stream, gold, head) = match sample_task(&mut sampler, cfg.sample_prob) {
                TaskChoice::Source => {
                    (spec.source, &mut source_stream, &spec.source_gold, &spec.source_head)
                }
                TaskChoice::Target => {
                    (spec.target, &mut target_stream, &spec.target_gold, &spec.target_head)
                }
            };
            let idxs = stream.next_batch(cfg.batch_size);
            let batch: Vec<RelationInstance> = idxs.iter().map(|&i| task.train[i].clone()).collect();
            let batch_gold: Vec<usize> = idxs.iter().map(|&i| gold[i]).collect();
            loss_sum += train_step(params, adam, &adam_cfg, &batch, &batch_gold, vocab, head)?;
        }
        let report = evaluate_task(params, vocab, spec.target, &spec.target_head)?;
        history.push(EpochRecord { mean_loss: loss_sum / steps_per_epoch as f64, report });
    }
    Ok(history)
}

/// Interleaved co-training of one shared model with a single head over the
/// target label set; source labels are translated through the bijection.
pub fn train_mixed<F: Real>(
    source: &TaskSpec,
    target: &TaskSpec,
    mapping: Option<&[(String, String)]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, TransferError> {
    cfg.validate().map_err(TransferError::Model)?;
    let bijection = check_bijection(&source.labels, &target.labels, mapping)?;
    let vocab = build_vocabulary(&[&source.train, &target.train]);
    let mut params = init_params::<F>(
        cfg,
        vocab.size(),
        &[(target.name.clone(), target.labels.len())],
        cfg.seed,
    )?;
    let mut adam = AdamState::new(&params.tensor_layout());
    let spec = InterleavedSpec {
        source,
        target,
        source_head: target.name.clone(),
        target_head: target.name.clone(),
        source_gold: gold_ids(source, Some(&bijection))?,
        target_gold: gold_ids(target, None)?,
    };
    let history = fit_interleaved(&mut params, &mut adam, &spec, &vocab, cfg)?;
    Ok(TrainOutcome { params, vocab, history, pretrain_history: None })
}

/// Interleaved training of a shared encoder with one head per task; a step
/// updates the shared tensors and the active task's head only.
pub fn train_multi<F: Real>(
    source: &TaskSpec,
    target: &TaskSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, TransferError> {
    cfg.validate().map_err(TransferError::Model)?;
    if source.name == target.name {
        return Err(TransferError::DuplicateTaskNames(source.name.clone()));
    }
    let vocab = build_vocabulary(&[&source.train, &target.train]);
    let mut params = init_params::<F>(
        cfg,
        vocab.size(),
        &[
            (source.name.clone(), source.labels.len()),
            (target.name.clone(), target.labels.len()),
        ],
        cfg.seed,
    )?;
    let mut adam = AdamState::new(&params.tensor_layout());
    let spec = InterleavedSpec {
        source,
        target,
        source_head: source.name.clone(),
        target_head: target.name.clone(),
        source_gold: gold_ids(source, None)?,
        target_gold: gold_ids(target, None)?,
    };
    let history = fit_interleaved(&mut params, &mut adam, &spec, &vocab, cfg)?;
    Ok(TrainOutcome { params, vocab, history, pretrain_history: None })
}

/// How much of a source-trained model seeds the target model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    /// Everything, classification head included (requires matching sizes).
    Full,
    /// Embeddings and encoder; the head is freshly initialized.
    Partial,
}

/// Builds target-initial parameters from a source-trained model. `Full`
/// copies every tensor exactly; `Partial` copies everything except the
/// head, which is re-initialized at the target size under `seed`.
pub fn transfer_params<F: Real>(
    source_params: &ModelParams<F>,
    source_head: &str,
    mode: TransferMode,
    target_head: &str,
    target_label_count: usize,
    seed: u64,
) -> Result<ModelParams<F>, TransferError> {
    let head = source_params.head(source_head)?.clone();
    let mut out = source_params.clone();
    out.heads.clear();
    match mode {
        TransferMode::Full => {
            if head.label_count() != target_label_count {
                return Err(TransferError::HeadSizeMismatch {
                    source_size: head.label_count(),
                    target_size: target_label_count,
                });
            }
            out.heads.insert(target_head.to_string(), head);
        }
        TransferMode::Partial => {
            let h = source_params.hidden();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(STREAM_TRANSFER_HEAD);
            let mut w = Tensor2::zeros(target_label_count, 2 * h);
            xavier_fill(&mut w, 2 * h, target_label_count, &mut rng);
            out.heads
                .insert(target_head.to_string(), Head { w, b: Tensor1::zeros(target_label_count) });
        }
    }
    Ok(out)
}

fn permute_head_rows<F: Real>(head: &mut Head<F>, bijection: &LabelBijection) {
    let original = head.clone();
    for i in 0..original.w.rows() {
        let j = bijection.map_index(i);
        head.w.row_mut(j).copy_from_slice(original.w.row(i));
        head.b[j] = original.b[i];
    }
}

/// Pretrains on the source task, transplants parameters, then trains on the
/// target task with a fresh optimizer. The vocabulary is built over both
/// training sets before any training so transplanted embedding rows keep
/// their meaning. Returned history covers the target phase; the source
/// phase rides along in `pretrain_history`.
pub fn train_seq<F: Real>(
    source: &TaskSpec,
    target: &TaskSpec,
    mapping: Option<&[(String, String)]>,
    cfg: &TrainConfig,
    mode: TransferMode,
) -> Result<TrainOutcome<F>, TransferError> {
    cfg.validate().map_err(TransferError::Model)?;
    let bijection = match mode {
        TransferMode::Full => Some(check_bijection(&source.labels, &target.labels, mapping)?),
        TransferMode::Partial => None,
    };
    let vocab = build_vocabulary(&[&source.train, &target.train]);

    let mut params = init_params::<F>(
        cfg,
        vocab.size(),
        &[(source.name.clone(), source.labels.len())],
        cfg.seed,
    )?;
    let mut adam = AdamState::new(&params.tensor_layout());
    let source_epochs = cfg.source_epochs.unwrap_or(cfg.epochs);
    let pre_history = fit_single(
        &mut params,
        &mut adam,
        source,
        &vocab,
        cfg,
        &source.name,
        source_epochs,
        STREAM_SINGLE_FIT,
        false,
    )?;

    let mut params = transfer_params(
        &params,
        &source.name,
        mode,
        &target.name,
        target.labels.len(),
        cfg.seed,
    )?;
    if let Some(bij) = &bijection {
        if !bij.is_index_identity() {
            let head = params.heads.get_mut(&target.name).expect("head installed above");
            permute_head_rows(head, bij);
        }
    }

    let mut adam = AdamState::new(&params.tensor_layout());
    let history = fit_single(
        &mut params,
        &mut adam,
        target,
        &vocab,
        cfg,
        &target.name,
        cfg.epochs,
        STREAM_SINGLE_FIT,
        true,
    )?;
    Ok(TrainOutcome { params, vocab, history, pretrain_history: Some(pre_history) })
}

/// Training scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    Baseline,
    Mixed,
    SeqFull,
    SeqPartial,
    Multi,
}

impl std::fmt::Display for Framework {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Framework::Baseline => "baseline",
            Framework::Mixed => "mixed",
            Framework::SeqFull => "seq-full",
            Framework::SeqPartial => "seq-partial",
            Framework::Multi => "multi",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Framework {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Framework::Baseline),
            "mixed" => Ok(Framework::Mixed),
            "seq-full" => Ok(Framework::SeqFull),
            "seq-partial" => Ok(Framework::SeqPartial),
            "multi" => Ok(Framework::Multi),
            other => Err(format!(
                "unknown framework {other:?} (expected baseline|mixed|seq-full|seq-partial|multi)"
            )),
        }
    }
}

/// Dispatches one training run. `source` may be `None` only for the
/// baseline.
pub fn run_framework<F: Real>(
    framework: Framework,
    source: Option<&TaskSpec>,
    target: &TaskSpec,
    mapping: Option<&[(String, String)]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>, TransferError> {
    let need_source =
        || source.ok_or_else(|| TransferError::MissingSource(framework.to_string()));
    match framework {
        Framework::Baseline => train_baseline(target, cfg),
        Framework::Mixed => train_mixed(need_source()?, target, mapping, cfg),
        Framework::SeqFull => train_seq(need_source()?, target, mapping, cfg, TransferMode::Full),
        Framework::SeqPartial => {
            train_seq(need_source()?, target, mapping, cfg, TransferMode::Partial)
        }
        Framework::Multi => train_multi(need_source()?, target, cfg),
    }
}
