//! Position bucketing and per-token feature assembly.

use crate::corpus::{RelationInstance, Vocabulary};
use crate::real::Real;
use crate::tensor::Tensor1;

use super::ModelParams;

/// Bucket id for the signed distance from token `i` to entity `e`, clamped
/// to ±`clip` and shifted to `0..=2·clip`.
pub fn position_bucket(i: usize, e: usize, clip: usize) -> usize {
    let d = (i as i64 - e as i64).clamp(-(clip as i64), clip as i64);
    (d + clip as i64) as usize
}

/// Reserved bucket for padded positions; its embedding row is never used by
/// the encoder because padded steps are masked out.
pub fn pad_bucket(clip: usize) -> usize {
    2 * clip + 1
}

pub(crate) struct EmbeddedInstance<F: Real> {
    pub xs: Vec<Tensor1<F>>,
    pub word_ids: Vec<usize>,
    pub buckets1: Vec<usize>,
    pub buckets2: Vec<usize>,
}

pub(crate) fn embed_full<F: Real>(
    inst: &RelationInstance,
    vocab: &Vocabulary,
    params: &ModelParams<F>,
) -> EmbeddedInstance<F> {
    let clip = params.position_clip;
    let d = params.input_dim();
    let (d1, d2) = (params.word_emb.cols(), params.pos1_emb.cols());
    let mut xs = Vec::with_capacity(inst.tokens.len());
    let mut word_ids = Vec::with_capacity(inst.tokens.len());
    let mut buckets1 = Vec::with_capacity(inst.tokens.len());
    let mut buckets2 = Vec::with_capacity(inst.tokens.len());
    for (i, tok) in inst.tokens.iter().enumerate() {
        let wid = vocab.id_of(tok);
        let b1 = position_bucket(i, inst.e1_index, clip);
        let b2 = position_bucket(i, inst.e2_index, clip);
        let mut x = Tensor1::zeros(d);
        let slice = x.as_mut_slice();
        slice[..d1].copy_from_slice(params.word_emb.row(wid));
        slice[d1..d1 + d2].copy_from_slice(params.pos1_emb.row(b1));
        slice[d1 + d2..].copy_from_slice(params.pos2_emb.row(b2));
        xs.push(x);
        word_ids.push(wid);
        buckets1.push(b1);
        buckets2.push(b2);
    }
    EmbeddedInstance { xs, word_ids, buckets1, buckets2 }
}

/// Per-token concatenation of word and both position embeddings, plus the
/// valid length (= sentence length; padding only ever appears downstream).
pub fn embed_instance<F: Real>(
    inst: &RelationInstance,
    vocab: &Vocabulary,
    params: &ModelParams<F>,
) -> (Vec<Tensor1<F>>, usize) {
    let e = embed_full(inst, vocab, params);
    let len = e.xs.len();
    (e.xs, len)
}
