//! Bias-corrected Adam over named parameter tensors.

use crate::real::Real;

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Per-tensor first and second moments plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F: Real> {
    names: Vec<String>,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    pub t: u64,
}

impl<F: Real> AdamState<F> {
    /// Fresh zero moments mirroring the given `(name, len)` layout.
    pub fn new(layout: &[(String, usize)]) -> Self {
        Self {
            names: layout.iter().map(|(n, _)| n.clone()).collect(),
            m: layout.iter().map(|&(_, len)| vec![F::ZERO; len]).collect(),
            v: layout.iter().map(|&(_, len)| vec![F::ZERO; len]).collect(),
            t: 0,
        }
    }

    /// One Adam update. `params` and `grads` must follow the layout the
    /// state was built with; tensors for which `active` returns false are
    /// skipped entirely (parameters and moments untouched), which is how
    /// per-task heads stay isolated under multi-task training.
    pub fn step_filtered<S1: AsRef<str>, S2: AsRef<str>>(
        &mut self,
        mut params: Vec<(S1, &mut [F])>,
        grads: &[(S2, &[F])],
        cfg: &AdamConfig,
        active: impl Fn(&str) -> bool,
    ) {
        assert_eq!(params.len(), self.names.len(), "parameter layout changed under Adam");
        assert_eq!(grads.len(), self.names.len(), "gradient layout changed under Adam");
        self.t += 1;
        let c1 = F::from_f64(1.0 / (1.0 - cfg.beta1.powi(self.t as i32)));
        let c2 = F::from_f64(1.0 / (1.0 - cfg.beta2.powi(self.t as i32)));
        let lr = F::from_f64(cfg.lr);
        let b1 = F::from_f64(cfg.beta1);
        let b2 = F::from_f64(cfg.beta2);
        let one_m_b1 = F::ONE - b1;
        let one_m_b2 = F::ONE - b2;
        let eps = F::from_f64(cfg.epsilon);

        for (idx, (name, theta)) in params.iter_mut().enumerate() {
            let name = name.as_ref();
            debug_assert_eq!(name, self.names[idx]);
            debug_assert_eq!(grads[idx].0.as_ref(), self.names[idx]);
            if !active(name) {
                continue;
            }
            let g = grads[idx].1;
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for j in 0..theta.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + one_m_b1 * gj;
                v[j] = b2 * v[j] + one_m_b2 * gj * gj;
                let m_hat = m[j] * c1;
                let v_hat = v[j] * c2;
                theta[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }

    /// Update with every tensor active.
    pub fn step<S1: AsRef<str>, S2: AsRef<str>>(
        &mut self,
        params: Vec<(S1, &mut [F])>,
        grads: &[(S2, &[F])],
        cfg: &AdamConfig,
    ) {
        self.step_filtered(params, grads, cfg, |_| true);
    }
}
