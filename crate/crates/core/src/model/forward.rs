//! Whole-pipeline forward pass and the batched reverse-mode sweep.

use crate::corpus::{LabelSet, RelationInstance, Vocabulary};
use crate::nn::{
    bilstm_backward, bilstm_encode, cross_entropy, head_forward, softmax_xent_backward,
};
use crate::real::Real;
use crate::tensor::Tensor1;

use super::embed::embed_full;
use super::{GradSet, ModelError, ModelParams};

/// Runs one instance through the named head and returns the class
/// distribution plus the argmax label index (ties: lowest index).
pub fn forward_predict<F: Real>(
    inst: &RelationInstance,
    vocab: &Vocabulary,
    params: &ModelParams<F>,
    head_name: &str,
) -> Result<(Tensor1<F>, usize), ModelError> {
    let head = params.head(head_name)?;
    let e = embed_full(inst, vocab, params);
    let (pooled, _) = bilstm_encode(&e.xs, e.xs.len(), &params.encoder)?;
    let probs = head_forward(pooled.as_slice(), &head.w, &head.b)?;
    let mut best = 0;
    for j in 1..probs.len() {
        if probs[j] > probs[best] {
            best = j;
        }
    }
    Ok((probs, best))
}

/// Mean cross-entropy of a batch through one head, forward only.
pub fn batch_loss<F: Real>(
    batch: &[RelationInstance],
    gold_ids: &[usize],
    vocab: &Vocabulary,
    params: &ModelParams<F>,
    head_name: &str,
) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let head = params.head(head_name)?;
    let mut total = 0.0f64;
    for (inst, &gold) in batch.iter().zip(gold_ids) {
        let e = embed_full(inst, vocab, params);
        let (pooled, _) = bilstm_encode(&e.xs, e.xs.len(), &params.encoder)?;
        let probs = head_forward(pooled.as_slice(), &head.w, &head.b)?;
        total += cross_entropy(probs.as_slice(), gold)?.to_f64();
    }
    Ok(total / batch.len() as f64)
}

/// Mean cross-entropy and exact gradients for a batch through one head.
/// Gold labels are given as indices into that head's label set. Gradients
/// cover all shared tensors plus the named head; other heads stay zero, and
/// embedding rows untouched by the batch stay exactly zero.
pub fn loss_and_grads_ids<F: Real>(
    batch: &[RelationInstance],
    gold_ids: &[usize],
    vocab: &Vocabulary,
    params: &ModelParams<F>,
    head_name: &str,
) -> Result<(f64, GradSet<F>), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    debug_assert_eq!(batch.len(), gold_ids.len());
    let head = params.head(head_name)?;
    let mut grads = params.zeros_like();
    let scale = F::from_f64(1.0 / batch.len() as f64);
    let mut total = 0.0f64;
    let (d1, d2) = (params.word_emb.cols(), params.pos1_emb.cols());

    for (inst, &gold) in batch.iter().zip(gold_ids) {
        let e = embed_full(inst, vocab, params);
        let m = e.xs.len();
        let (pooled, cache) = bilstm_encode(&e.xs, m, &params.encoder)?;
        let probs = head_forward(pooled.as_slice(), &head.w, &head.b)?;
        total += cross_entropy(probs.as_slice(), gold)?.to_f64();

        // dL/dz scaled by the batch mean up front; everything downstream is
        // linear in it.
        let mut dlogits = softmax_xent_backward(probs.as_slice(), gold);
        dlogits.scale(scale);

        let ghead = grads.heads.get_mut(head_name).expect("grad layout mirrors params");
        ghead.w.outer_acc(dlogits.as_slice(), pooled.as_slice());
        ghead.b.axpy(F::ONE, dlogits.as_slice());

        let mut d_pooled = Tensor1::zeros(pooled.len());
        head.w.tr_matvec_acc(dlogits.as_slice(), d_pooled.as_mut_slice());

        let mut dxs: Vec<Tensor1<F>> =
            (0..m).map(|_| Tensor1::zeros(params.input_dim())).collect();
        bilstm_backward(
            d_pooled.as_slice(),
            &e.xs,
            &cache,
            &params.encoder,
            &mut grads.encoder,
            &mut dxs,
        );

        for t in 0..m {
            let dx = dxs[t].as_slice();
            add_into(grads.word_emb.row_mut(e.word_ids[t]), &dx[..d1]);
            add_into(grads.pos1_emb.row_mut(e.buckets1[t]), &dx[d1..d1 + d2]);
            add_into(grads.pos2_emb.row_mut(e.buckets2[t]), &dx[d1 + d2..]);
        }
    }
    Ok((total / batch.len() as f64, grads))
}

fn add_into<F: Real>(dst: &mut [F], src: &[F]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

/// As [`loss_and_grads_ids`], resolving gold indices from each instance's
/// label through the head's label set. Rejects batches that mix tasks.
pub fn loss_and_grads<F: Real>(
    batch: &[RelationInstance],
    vocab: &Vocabulary,
    params: &ModelParams<F>,
    head_name: &str,
    labels: &LabelSet,
) -> Result<(f64, GradSet<F>), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let task = &batch[0].origin_task;
    let mut gold_ids = Vec::with_capacity(batch.len());
    for inst in batch {
        if &inst.origin_task != task {
            return Err(ModelError::MixedTaskBatch {
                expected: task.clone(),
                found: inst.origin_task.clone(),
            });
        }
        let gold = labels
            .index_of(&inst.label)
            .ok_or_else(|| ModelError::UnknownLabel(inst.label.clone()))?;
        gold_ids.push(gold);
    }
    loss_and_grads_ids(batch, &gold_ids, vocab, params, head_name)
}
