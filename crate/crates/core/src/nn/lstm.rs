//! Vanilla (non-peephole) LSTM cell and the bidirectional encoder with
//! max-pooling over valid timesteps.

use crate::real::{sigmoid, Real};
use crate::tensor::{Tensor1, Tensor2};

use super::NnError;

pub const GATE_COUNT: usize = 4;
/// Gate order everywhere: input, forget, output, candidate.
pub const GATE_NAMES: [&str; GATE_COUNT] = ["i", "f", "o", "g"];

/// Parameters of one LSTM direction. The same struct doubles as the
/// gradient accumulator since gradients mirror the parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<F: Real> {
    /// Input-to-hidden weights per gate, `hidden × d_in`.
    pub w: [Tensor2<F>; 4],
    /// Hidden-to-hidden weights per gate, `hidden × hidden`.
    pub u: [Tensor2<F>; 4],
    /// Biases per gate, `hidden`.
    pub b: [Tensor1<F>; 4],
}

impl<F: Real> LstmParams<F> {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor2::zeros(hidden, input_dim)),
            u: std::array::from_fn(|_| Tensor2::zeros(hidden, hidden)),
            b: std::array::from_fn(|_| Tensor1::zeros(hidden)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w[0].rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].cols()
    }

    fn check_shapes(&self) -> Result<(), NnError> {
        let (h, d) = (self.hidden(), self.input_dim());
        for k in 0..GATE_COUNT {
            if self.w[k].rows() != h
                || self.w[k].cols() != d
                || self.u[k].rows() != h
                || self.u[k].cols() != h
                || self.b[k].len() != h
            {
                return Err(NnError::ShapeMismatch(format!(
                    "gate {} tensors disagree with hidden={h}, d_in={d}",
                    GATE_NAMES[k]
                )));
            }
        }
        Ok(())
    }
}

/// Both directions of the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmParams<F: Real> {
    pub fwd: LstmParams<F>,
    pub bwd: LstmParams<F>,
}

impl<F: Real> BiLstmParams<F> {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self { fwd: LstmParams::zeros(hidden, input_dim), bwd: LstmParams::zeros(hidden, input_dim) }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }
}

/// Everything the backward pass needs from one cell application.
#[derive(Clone, Debug)]
pub struct LstmStep<F: Real> {
    pub i: Tensor1<F>,
    pub f: Tensor1<F>,
    pub o: Tensor1<F>,
    pub g: Tensor1<F>,
    pub c: Tensor1<F>,
    pub tanh_c: Tensor1<F>,
    pub h: Tensor1<F>,
}

/// One LSTM cell application:
/// i = σ(Wᵢx + Uᵢh₋ + bᵢ), f and o analogous, g = tanh(W_g x + U_g h₋ + b_g),
/// c = f⊙c₋ + i⊙g, h = o⊙tanh(c).
pub fn lstm_cell_forward<F: Real>(
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
    p: &LstmParams<F>,
) -> Result<(Tensor1<F>, Tensor1<F>, LstmStep<F>), NnError> {
    p.check_shapes()?;
    let (h, d) = (p.hidden(), p.input_dim());
    if x.len() != d || h_prev.len() != h || c_prev.len() != h {
        return Err(NnError::ShapeMismatch(format!(
            "inputs ({}, {}, {}) disagree with hidden={h}, d_in={d}",
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let step = cell_forward_unchecked(x, h_prev, c_prev, p);
    Ok((step.h.clone(), step.c.clone(), step))
}

fn cell_forward_unchecked<F: Real>(
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
    p: &LstmParams<F>,
) -> LstmStep<F> {
    let h = p.hidden();
    let mut pre: [Tensor1<F>; 4] = std::array::from_fn(|_| Tensor1::zeros(h));
    for k in 0..GATE_COUNT {
        let out = pre[k].as_mut_slice();
        p.w[k].matvec(x, out);
        p.u[k].matvec_acc(h_prev, out);
        for (v, &b) in out.iter_mut().zip(p.b[k].iter()) {
            *v += b;
        }
    }
    let [a_i, a_f, a_o, a_g] = pre;

    let mut step = LstmStep {
        i: Tensor1::zeros(h),
        f: Tensor1::zeros(h),
        o: Tensor1::zeros(h),
        g: Tensor1::zeros(h),
        c: Tensor1::zeros(h),
        tanh_c: Tensor1::zeros(h),
        h: Tensor1::zeros(h),
    };
    for j in 0..h {
        let i = sigmoid(a_i[j]);
        let f = sigmoid(a_f[j]);
        let o = sigmoid(a_o[j]);
        let g = a_g[j].tanh();
        let c = f * c_prev[j] + i * g;
        let tc = c.tanh();
        step.i[j] = i;
        step.f[j] = f;
        step.o[j] = o;
        step.g[j] = g;
        step.c[j] = c;
        step.tanh_c[j] = tc;
        step.h[j] = o * tc;
    }
    step
}

/// Forward/backward traces plus the pooling decisions.
#[derive(Clone, Debug)]
pub struct EncodeCache<F: Real> {
    /// Cell records in time order for the forward direction.
    pub fwd: Vec<LstmStep<F>>,
    /// Cell records in time order for the backward direction (the direction
    /// itself consumed the steps right-to-left).
    pub bwd: Vec<LstmStep<F>>,
    /// Winning time index per pooled unit; ties go to the earliest step.
    pub argmax: Vec<usize>,
    pub valid_len: usize,
}

fn run_direction<F: Real>(xs: &[Tensor1<F>], valid_len: usize, p: &LstmParams<F>, reverse: bool) -> Vec<LstmStep<F>> {
    let h = p.hidden();
    let zero = Tensor1::zeros(h);
    let mut by_time: Vec<Option<LstmStep<F>>> = (0..valid_len).map(|_| None).collect();
    let mut h_prev = zero.clone();
    let mut c_prev = zero;
    for s in 0..valid_len {
        let t = if reverse { valid_len - 1 - s } else { s };
        let step = cell_forward_unchecked(xs[t].as_slice(), h_prev.as_slice(), c_prev.as_slice(), p);
        h_prev = step.h.clone();
        c_prev = step.c.clone();
        by_time[t] = Some(step);
    }
    by_time.into_iter().map(|s| s.expect("all valid steps computed")).collect()
}

/// Encodes a sequence: both directions run over steps `0..valid_len` from
/// zero state, per-step outputs are concatenated to `2h`, and the result is
/// the element-wise max over the valid steps. Steps beyond `valid_len` are
/// never touched, so pad content cannot affect the output.
pub fn bilstm_encode<F: Real>(
    xs: &[Tensor1<F>],
    valid_len: usize,
    p: &BiLstmParams<F>,
) -> Result<(Tensor1<F>, EncodeCache<F>), NnError> {
    if valid_len == 0 {
        return Err(NnError::EmptySequence);
    }
    if valid_len > xs.len() {
        return Err(NnError::ValidLenTooLong { valid_len, len: xs.len() });
    }
    p.fwd.check_shapes()?;
    p.bwd.check_shapes()?;
    let d = p.fwd.input_dim();
    if let Some(bad) = xs[..valid_len].iter().find(|x| x.len() != d) {
        return Err(NnError::ShapeMismatch(format!(
            "input vector length {} does not match d_in={d}",
            bad.len()
        )));
    }

    let h = p.hidden();
    let fwd = run_direction(xs, valid_len, &p.fwd, false);
    let bwd = run_direction(xs, valid_len, &p.bwd, true);

    let mut pooled = Tensor1::zeros(2 * h);
    let mut argmax = vec![0usize; 2 * h];
    for j in 0..2 * h {
        let mut best = F::neg_infinity();
        let mut best_t = 0;
        for t in 0..valid_len {
            let v = if j < h { fwd[t].h[j] } else { bwd[t].h[j - h] };
            if v > best {
                best = v;
                best_t = t;
            }
        }
        pooled[j] = best;
        argmax[j] = best_t;
    }
    Ok((pooled, EncodeCache { fwd, bwd, argmax, valid_len }))
}

fn direction_backward<F: Real>(
    xs: &[Tensor1<F>],
    steps: &[LstmStep<F>],
    d_h_time: &[Tensor1<F>],
    p: &LstmParams<F>,
    reverse: bool,
    grads: &mut LstmParams<F>,
    dxs: &mut [Tensor1<F>],
) {
    let h = p.hidden();
    let valid_len = steps.len();
    let zero = Tensor1::zeros(h);
    let mut dh_carry = Tensor1::zeros(h);
    let mut dc_carry = Tensor1::zeros(h);
    let mut da: [Tensor1<F>; 4] = std::array::from_fn(|_| Tensor1::zeros(h));

    // Walk processing order backwards: last consumed step first.
    for s in (0..valid_len).rev() {
        let t = if reverse { valid_len - 1 - s } else { s };
        let step = &steps[t];
        let (h_prev, c_prev) = if s == 0 {
            (&zero, &zero)
        } else {
            let t_prev = if reverse { t + 1 } else { t - 1 };
            (&steps[t_prev].h, &steps[t_prev].c)
        };

        for j in 0..h {
            let dh = d_h_time[t][j] + dh_carry[j];
            let o = step.o[j];
            let tc = step.tanh_c[j];
            let dc = dh * o * (F::ONE - tc * tc) + dc_carry[j];
            let i = step.i[j];
            let f = step.f[j];
            let g = step.g[j];
            da[0][j] = dc * g * i * (F::ONE - i); // input gate pre-activation
            da[1][j] = dc * c_prev[j] * f * (F::ONE - f); // forget gate
            da[2][j] = dh * tc * o * (F::ONE - o); // output gate
            da[3][j] = dc * i * (F::ONE - g * g); // candidate
            dc_carry[j] = dc * f;
        }

        dh_carry.fill(F::ZERO);
        for k in 0..GATE_COUNT {
            let a = da[k].as_slice();
            grads.w[k].outer_acc(a, xs[t].as_slice());
            grads.u[k].outer_acc(a, h_prev.as_slice());
            grads.b[k].axpy(F::ONE, a);
            p.w[k].tr_matvec_acc(a, dxs[t].as_mut_slice());
            p.u[k].tr_matvec_acc(a, dh_carry.as_mut_slice());
        }
    }
}

/// Backpropagates through pooling and both directions. Gradients accumulate
/// into `grads`; input gradients accumulate into `dxs` (time-indexed).
pub fn bilstm_backward<F: Real>(
    d_pooled: &[F],
    xs: &[Tensor1<F>],
    cache: &EncodeCache<F>,
    p: &BiLstmParams<F>,
    grads: &mut BiLstmParams<F>,
    dxs: &mut [Tensor1<F>],
) {
    let h = p.hidden();
    let valid_len = cache.valid_len;
    debug_assert_eq!(d_pooled.len(), 2 * h);

    let mut d_fwd_h: Vec<Tensor1<F>> = (0..valid_len).map(|_| Tensor1::zeros(h)).collect();
    let mut d_bwd_h: Vec<Tensor1<F>> = (0..valid_len).map(|_| Tensor1::zeros(h)).collect();
    for (j, &dv) in d_pooled.iter().enumerate() {
        let t = cache.argmax[j];
        if j < h {
            d_fwd_h[t][j] += dv;
        } else {
            d_bwd_h[t][j - h] += dv;
        }
    }

    direction_backward(xs, &cache.fwd, &d_fwd_h, &p.fwd, false, &mut grads.fwd, dxs);
    direction_backward(xs, &cache.bwd, &d_bwd_h, &p.bwd, true, &mut grads.bwd, dxs);
}
