//! Confusion-matrix metrics. Micro averages pool over every class except
//! the designated negative ("no relation") class, following the SemEval DDI
//! scoring convention the published numbers compare against.

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instance count for this class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub negative_index: usize,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

impl EvalReport {
    /// Unweighted mean of per-class precision/recall/F1 over all classes,
    /// negative included. Diagnostic only; the headline numbers are micro.
    pub fn macro_prf(&self) -> (f64, f64, f64) {
        let n = self.per_class.len() as f64;
        let p = self.per_class.iter().map(|c| c.precision).sum::<f64>() / n;
        let r = self.per_class.iter().map(|c| c.recall).sum::<f64>() / n;
        let f = self.per_class.iter().map(|c| c.f1).sum::<f64>() / n;
        (p, r, f)
    }
}

/// Builds the confusion matrix and per-class plus micro metrics from
/// `(gold, predicted)` label-index pairs.
pub fn evaluate(predictions: &[(usize, usize)], labels: &LabelSet) -> Result<EvalReport, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let classes = labels.len();
    let mut confusion = vec![vec![0usize; classes]; classes];
    for &(gold, pred) in predictions {
        for index in [gold, pred] {
            if index >= classes {
                return Err(EvalError::LabelIndexOutOfRange { index, classes });
            }
        }
        confusion[gold][pred] += 1;
    }

    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let (precision, recall, f1) = prf(tp, predicted - tp, support - tp);
        per_class.push(ClassMetrics {
            label: labels.name(c).to_string(),
            precision,
            recall,
            f1,
            support,
        });
    }

    let negative = labels.negative_index();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for c in 0..classes {
        if c == negative {
            continue;
        }
        let diag = confusion[c][c];
        tp += diag;
        fp += confusion.iter().map(|row| row[c]).sum::<usize>() - diag;
        fn_ += confusion[c].iter().sum::<usize>() - diag;
    }
    let (micro_precision, micro_recall, micro_f1) = prf(tp, fp, fn_);

    Ok(EvalReport {
        per_class,
        micro_precision,
        micro_recall,
        micro_f1,
        confusion,
        negative_index: negative,
    })
}

/// Relative percentage improvement of a transfer F1 over the baseline F1:
/// `100·(f_tl − f_base)/f_base`. Exact value; render with two decimals for
/// reporting.
pub fn relative_improvement(f_tl: f64, f_base: f64) -> Result<f64, EvalError> {
    if f_base <= 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(100.0 * (f_tl - f_base) / f_base)
}
