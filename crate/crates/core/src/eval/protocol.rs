//! The n-run reporting protocol: run the trainer under consecutive seeds,
//! keep each run's best-F1 epoch, report the best run and the spread.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Best-epoch result of a single training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResult {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    #[serde(flatten)]
    pub best: BestResult,
}

/// Aggregate over `n` runs with different seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: Vec<RunResult>,
    /// The run with the highest best-epoch F1 (first on ties), whose
    /// precision and recall accompany it.
    pub best: RunResult,
    /// Sample standard deviation of the per-run best F1s.
    pub f1_std: f64,
}

impl RunSummary {
    pub fn n(&self) -> usize {
        self.runs.len()
    }

    pub fn mean_f1(&self) -> f64 {
        self.runs.iter().map(|r| r.best.f1).sum::<f64>() / self.runs.len() as f64
    }
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Executes `train` with seeds `base_seed..base_seed+n`. Runs may execute
/// concurrently; aggregation order is by seed, so the summary is
/// deterministic. The first failing run aborts the protocol with its index.
pub fn run_protocol<E: std::fmt::Display + Send>(
    n: usize,
    base_seed: u64,
    train: impl Fn(u64) -> Result<BestResult, E> + Sync,
) -> Result<RunSummary, EvalError> {
    if n == 0 {
        return Err(EvalError::BadRunCount);
    }
    let outcomes: Vec<Result<BestResult, E>> =
        (0..n).into_par_iter().map(|i| train(base_seed + i as u64)).collect();

    let mut runs = Vec::with_capacity(n);
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(best) => runs.push(RunResult { seed: base_seed + index as u64, best }),
            Err(e) => return Err(EvalError::RunFailed { index, message: e.to_string() }),
        }
    }

    let mut best = runs[0];
    for r in &runs[1..] {
        if r.best.f1 > best.best.f1 {
            best = *r;
        }
    }
    let f1s: Vec<f64> = runs.iter().map(|r| r.best.f1).collect();
    Ok(RunSummary { runs, best, f1_std: sample_std(&f1s) })
}
