//! Ablation harnesses: source-size sweep and equal-size source comparison.

use serde::{Deserialize, Serialize};

use crate::corpus::{stratified_partition, TaskSpec};
use crate::real::Real;
use crate::transfer::{run_framework, Framework};

use super::protocol::run_protocol;
use super::{EvalError, RunSummary};

/// One ablation setting with its n-run summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: String,
    /// Source training instances actually used.
    pub source_size: usize,
    pub n_runs: usize,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub best_f1: f64,
    pub best_precision: f64,
    pub best_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// One CSV row per setting with mean/std/best columns.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("setting,source_size,n_runs,mean_f1,std_f1,best_f1,best_precision,best_recall\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.setting,
                r.source_size,
                r.n_runs,
                r.mean_f1,
                r.std_f1,
                r.best_f1,
                r.best_precision,
                r.best_recall
            ));
        }
        out
    }
}

fn summarize(setting: String, source_size: usize, summary: &RunSummary) -> AblationRow {
    AblationRow {
        setting,
        source_size,
        n_runs: summary.n(),
        mean_f1: summary.mean_f1(),
        std_f1: summary.f1_std,
        best_f1: summary.best.best.f1,
        best_precision: summary.best.best.precision,
        best_recall: summary.best.best.recall,
    }
}

fn check_interleaved(framework: Framework) -> Result<(), EvalError> {
    match framework {
        Framework::Mixed | Framework::Multi => Ok(()),
        other => Err(EvalError::UnsupportedFramework(other.to_string())),
    }
}

#[allow(clippy::too_many_arguments)]
fn protocol_for<F: Real>(
    framework: Framework,
    source: &TaskSpec,
    target: &TaskSpec,
    mapping: Option<&[(String, String)]>,
    cfg: &crate::model::TrainConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<RunSummary, EvalError> {
    run_protocol(n_runs, base_seed, |seed| {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = seed;
        let outcome = run_framework::<F>(framework, Some(source), target, mapping, &run_cfg)
            .map_err(|e| e.to_string())?;
        outcome
            .history
            .best_result()
            .ok_or_else(|| "run produced no evaluation (empty target test set?)".to_string())
    })
}

/// Sweeps the share of source training data fed to an interleaved framework.
/// Each fraction uses a per-class stratified subsample (fraction 1.0 keeps
/// the full source), then runs the n-seed protocol.
#[allow(clippy::too_many_arguments)]
pub fn ablate_source_size<F: Real>(
    framework: Framework,
    source: &TaskSpec,
    target: &TaskSpec,
    fractions: &[f64],
    mapping: Option<&[(String, String)]>,
    cfg: &crate::model::TrainConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<AblationTable, EvalError> {
    check_interleaved(framework)?;
    let mut rows = Vec::with_capacity(fractions.len());
    for (i, &fraction) in fractions.iter().enumerate() {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(EvalError::BadFraction(fraction));
        }
        let reduced: TaskSpec = if fraction == 1.0 {
            source.clone()
        } else {
            let (selected, _) = stratified_partition(&source.train, fraction, base_seed + i as u64)
                .map_err(|e| EvalError::RunFailed { index: i, message: e.to_string() })?;
            TaskSpec {
                name: source.name.clone(),
                labels: source.labels.clone(),
                train: selected,
                test: source.test.clone(),
            }
        };
        let summary =
            protocol_for::<F>(framework, &reduced, target, mapping, cfg, n_runs, base_seed)?;
        rows.push(summarize(format!("{fraction}"), reduced.train.len(), &summary));
    }
    Ok(AblationTable { rows })
}

/// Compares different source tasks at equal size: each source is
/// per-class-stratified down to about `count` training instances, then run
/// through the n-seed protocol against the same target.
#[allow(clippy::too_many_arguments)]
pub fn ablate_same_size<F: Real>(
    framework: Framework,
    sources: &[TaskSpec],
    target: &TaskSpec,
    count: usize,
    mapping: Option<&[(String, String)]>,
    cfg: &crate::model::TrainConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<AblationTable, EvalError> {
    check_interleaved(framework)?;
    let mut rows = Vec::with_capacity(sources.len());
    for (i, source) in sources.iter().enumerate() {
        let total = source.train.len();
        if total < count {
            return Err(EvalError::SourceTooSmall {
                name: source.name.clone(),
                size: total,
                requested: count,
            });
        }
        let reduced: TaskSpec = if total == count {
            source.clone()
        } else {
            let fraction = count as f64 / total as f64;
            let (selected, _) = stratified_partition(&source.train, fraction, base_seed + i as u64)
                .map_err(|e| EvalError::RunFailed { index: i, message: e.to_string() })?;
            TaskSpec {
                name: source.name.clone(),
                labels: source.labels.clone(),
                train: selected,
                test: source.test.clone(),
            }
        };
        let summary =
            protocol_for::<F>(framework, &reduced, target, mapping, cfg, n_runs, base_seed)?;
        rows.push(summarize(source.name.clone(), reduced.train.len(), &summary));
    }
    Ok(AblationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_tasks, SynthConfig};
    use crate::model::TrainConfig;

    fn tasks() -> (TaskSpec, TaskSpec) {
        let cfg = SynthConfig {
            source_train: 40,
            source_test: 10,
            target_train: 20,
            target_test: 12,
            vocab_size: 20,
            triggers_per_label: 3,
            len_min: 5,
            len_max: 7,
            similarity: 1.0,
            ..SynthConfig::default()
        };
        synth_tasks(&cfg, 5).unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            word_dim: 6,
            pos1_dim: 2,
            pos2_dim: 2,
            hidden: 4,
            batch_size: 10,
            epochs: 1,
            position_clip: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn source_size_rows_shrink_with_fraction() {
        let (source, target) = tasks();
        let table = ablate_source_size::<f32>(
            Framework::Mixed,
            &source,
            &target,
            &[0.5, 1.0],
            None,
            &cfg(),
            1,
            3,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].source_size, 20);
        assert_eq!(table.rows[1].source_size, 40);
        let csv = table.to_csv();
        assert!(csv.starts_with("setting,source_size"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn full_fraction_row_equals_plain_run() {
        let (source, target) = tasks();
        let table = ablate_source_size::<f32>(
            Framework::Multi,
            &source,
            &target,
            &[1.0],
            None,
            &cfg(),
            2,
            9,
        )
        .unwrap();
        let direct =
            protocol_for::<f32>(Framework::Multi, &source, &target, None, &cfg(), 2, 9).unwrap();
        assert_eq!(table.rows[0].best_f1, direct.best.best.f1);
        assert_eq!(table.rows[0].mean_f1, direct.mean_f1());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let (source, target) = tasks();
        assert!(matches!(
            ablate_source_size::<f32>(
                Framework::Baseline,
                &source,
                &target,
                &[1.0],
                None,
                &cfg(),
                1,
                0
            ),
            Err(EvalError::UnsupportedFramework(_))
        ));
        assert!(matches!(
            ablate_source_size::<f32>(
                Framework::Mixed,
                &source,
                &target,
                &[0.0],
                None,
                &cfg(),
                1,
                0
            ),
            Err(EvalError::BadFraction(_))
        ));
        assert!(matches!(
            ablate_same_size::<f32>(
                Framework::Multi,
                std::slice::from_ref(&source),
                &target,
                1000,
                None,
                &cfg(),
                1,
                0
            ),
            Err(EvalError::SourceTooSmall { .. })
        ));
    }

    #[test]
    fn same_size_downsamples_preserving_classes() {
        let (source, target) = tasks();
        let table = ablate_same_size::<f32>(
            Framework::Multi,
            std::slice::from_ref(&source),
            &target,
            20,
            None,
            &cfg(),
            1,
            4,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].source_size, 20);
        assert_eq!(table.rows[0].setting, source.name);
    }

    #[test]
    fn tables_are_deterministic_per_seed() {
        let (source, target) = tasks();
        let run = || {
            ablate_source_size::<f32>(
                Framework::Mixed,
                &source,
                &target,
                &[0.5, 1.0],
                None,
                &cfg(),
                2,
                11,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }
}
