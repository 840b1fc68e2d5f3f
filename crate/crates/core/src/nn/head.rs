//! Dense + softmax classification head and cross-entropy.

use crate::real::Real;
use crate::tensor::{Tensor1, Tensor2};

use super::NnError;

/// Floor added inside the log so confidently wrong predictions cannot yield
/// an infinite loss in single precision.
pub const CE_FLOOR: f64 = 1e-12;

/// logits = W·v + b, then softmax with max-subtraction for stability.
pub fn head_forward<F: Real>(
    v: &[F],
    w: &Tensor2<F>,
    b: &Tensor1<F>,
) -> Result<Tensor1<F>, NnError> {
    if w.cols() != v.len() || w.rows() != b.len() {
        return Err(NnError::ShapeMismatch(format!(
            "head W is {}×{}, input has {}, bias has {}",
            w.rows(),
            w.cols(),
            v.len(),
            b.len()
        )));
    }
    let mut z = Tensor1::zeros(w.rows());
    w.matvec(v, z.as_mut_slice());
    for (zv, &bv) in z.as_mut_slice().iter_mut().zip(b.iter()) {
        *zv += bv;
    }
    softmax_in_place(z.as_mut_slice());
    Ok(z)
}

pub(crate) fn softmax_in_place<F: Real>(z: &mut [F]) {
    let mut max = F::neg_infinity();
    for &v in z.iter() {
        max = max.maximum(v);
    }
    let mut sum = F::ZERO;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// −log(probs[gold] + ε) with the documented floor.
pub fn cross_entropy<F: Real>(probs: &[F], gold: usize) -> Result<F, NnError> {
    if gold >= probs.len() {
        return Err(NnError::GoldOutOfRange { gold, classes: probs.len() });
    }
    Ok(-(probs[gold] + F::from_f64(CE_FLOOR)).ln())
}

/// Gradient of cross-entropy w.r.t. the logits: probs − onehot(gold).
pub fn softmax_xent_backward<F: Real>(probs: &[F], gold: usize) -> Tensor1<F> {
    let mut d = Tensor1::from_vec(probs.to_vec());
    d[gold] -= F::ONE;
    d
}
