//! Template-based synthetic task pairs for desk-scale transfer experiments.
//!
//! Each sentence carries two entity sentinels with a class-specific trigger
//! token placed strictly between them, so the label is a deterministic
//! function of the trigger and every task is learnable by construction. The
//! `similarity` knob ρ controls the fraction of trigger tokens and content
//! vocabulary shared between source and target: ρ=1 yields one generative
//! process, ρ=0 fully disjoint vocabularies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normalize::blind_and_expand;
use super::{CorpusError, EntitySpan, LabelSet, PairLabel, RawSentence, TaskSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub source_name: String,
    pub target_name: String,
    pub source_train: usize,
    pub source_test: usize,
    pub target_train: usize,
    pub target_test: usize,
    /// Label count per task, negative class included.
    pub source_labels: usize,
    pub target_labels: usize,
    /// Content (non-trigger) vocabulary size per task.
    pub vocab_size: usize,
    pub triggers_per_label: usize,
    /// Inclusive sentence-length bounds; at least 4 so a trigger fits
    /// strictly between the two entities.
    pub len_min: usize,
    pub len_max: usize,
    /// Shared fraction ρ of triggers and content vocabulary.
    pub similarity: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            source_name: "synth-src".into(),
            target_name: "synth-tgt".into(),
            source_train: 2000,
            source_test: 400,
            target_train: 100,
            target_test: 400,
            source_labels: 2,
            target_labels: 2,
            vocab_size: 120,
            triggers_per_label: 30,
            len_min: 6,
            len_max: 12,
            similarity: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |m: &str| Err(CorpusError::BadSynthConfig(m.into()));
        if self.source_labels < 2 || self.target_labels < 2 {
            return fail("each task needs at least 2 labels (negative plus one relation)");
        }
        if self.triggers_per_label == 0 {
            return fail("labels outnumber triggers: triggers_per_label must be at least 1");
        }
        if self.vocab_size < 2 {
            return fail("vocab_size must be at least 2");
        }
        if self.len_min < 4 {
            return fail("len_min must be at least 4 to fit two entities and a trigger");
        }
        if self.len_max < self.len_min {
            return fail("len_max must be >= len_min");
        }
        if !(0.0..=1.0).contains(&self.similarity) {
            return fail("similarity must lie in [0, 1]");
        }
        if [self.source_train, self.source_test, self.target_train, self.target_test]
            .iter()
            .any(|&n| n == 0)
        {
            return fail("all split sizes must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Source,
    Target,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::Source => "x",
            Side::Target => "y",
        }
    }
}

/// Spells an index with lowercase letters so generated tokens survive the
/// digit-to-DG normalization unchanged.
fn alpha_id(mut n: usize) -> String {
    let mut rev = Vec::new();
    loop {
        rev.push(b'a' + (n % 26) as u8);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    rev.reverse();
    String::from_utf8(rev).expect("ascii by construction")
}

fn label_names(count: usize) -> Vec<String> {
    (0..count)
        .map(|c| if c == 0 { "NEG".to_string() } else { format!("R{c}") })
        .collect()
}

fn trigger_token(cfg: &SynthConfig, side: Side, class: usize, slot: usize) -> String {
    let shared = (cfg.similarity * cfg.triggers_per_label as f64).round() as usize;
    if slot < shared {
        format!("trg_{}_s_{}", alpha_id(class), alpha_id(slot))
    } else {
        format!("trg_{}_{}_{}", alpha_id(class), side.tag(), alpha_id(slot))
    }
}

fn content_token(cfg: &SynthConfig, side: Side, j: usize) -> String {
    let shared = (cfg.similarity * cfg.vocab_size as f64).round() as usize;
    if j < shared {
        format!("w_s_{}", alpha_id(j))
    } else {
        format!("w_{}_{}", side.tag(), alpha_id(j))
    }
}

fn generate_split(
    cfg: &SynthConfig,
    side: Side,
    split: &str,
    count: usize,
    label_count: usize,
    labels: &LabelSet,
    task_name: &str,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<super::RelationInstance>, CorpusError> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % label_count;
        let len = rng.random_range(cfg.len_min..=cfg.len_max);
        let p1 = rng.random_range(0..=len - 3);
        let p2 = rng.random_range(p1 + 2..=len - 1);
        let trig_pos = rng.random_range(p1 + 1..=p2 - 1);
        let slot = rng.random_range(0..cfg.triggers_per_label);

        let mut tokens = Vec::with_capacity(len);
        for pos in 0..len {
            if pos == p1 || pos == p2 {
                tokens.push("entity".to_string());
            } else if pos == trig_pos {
                tokens.push(trigger_token(cfg, side, class, slot));
            } else {
                tokens.push(content_token(cfg, side, rng.random_range(0..cfg.vocab_size)));
            }
        }

        let relations = if class == 0 {
            Vec::new()
        } else {
            vec![PairLabel { e1: 0, e2: 1, label: labels.name(class).to_string() }]
        };
        let sentence = RawSentence {
            id: format!("{task_name}-{split}-{i}"),
            tokens,
            entities: vec![
                EntitySpan { start: p1, end: p1 + 1, type_name: "Ent".into() },
                EntitySpan { start: p2, end: p2 + 1, type_name: "Ent".into() },
            ],
            relations,
        };
        out.extend(blind_and_expand(&sentence, labels.negative_label(), task_name)?);
    }
    Ok(out)
}

/// Generates a (source, target) task pair under `seed`. Instances are
/// produced through the same blinding pipeline as file ingestion.
pub fn synth_tasks(cfg: &SynthConfig, seed: u64) -> Result<(TaskSpec, TaskSpec), CorpusError> {
    cfg.validate()?;

    let build = |side: Side, stream: u64| -> Result<TaskSpec, CorpusError> {
        let (name, label_count, n_train, n_test) = match side {
            Side::Source => {
                (&cfg.source_name, cfg.source_labels, cfg.source_train, cfg.source_test)
            }
            Side::Target => {
                (&cfg.target_name, cfg.target_labels, cfg.target_train, cfg.target_test)
            }
        };
        let labels = LabelSet::new(label_names(label_count), 0)
            .expect("generated label names are unique");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let train =
            generate_split(cfg, side, "train", n_train, label_count, &labels, name, &mut rng)?;
        let test =
            generate_split(cfg, side, "test", n_test, label_count, &labels, name, &mut rng)?;
        Ok(TaskSpec { name: name.clone(), labels, train, test })
    };

    let source = build(Side::Source, 1)?;
    let target = build(Side::Target, 2)?;
    Ok((source, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_cfg(similarity: f64) -> SynthConfig {
        SynthConfig {
            source_train: 60,
            source_test: 20,
            target_train: 40,
            target_test: 20,
            vocab_size: 30,
            triggers_per_label: 5,
            similarity,
            ..SynthConfig::default()
        }
    }

    fn token_set(task: &TaskSpec) -> HashSet<String> {
        task.train
            .iter()
            .chain(&task.test)
            .flat_map(|i| i.tokens.iter().cloned())
            .filter(|t| t != "EntA" && t != "EntB")
            .collect()
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = small_cfg(0.9);
        let (s1, t1) = synth_tasks(&cfg, 42).unwrap();
        let (s2, t2) = synth_tasks(&cfg, 42).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(t1, t2);
        let (s3, _) = synth_tasks(&cfg, 43).unwrap();
        assert_ne!(s1, s3);
    }

    #[test]
    fn fully_dissimilar_tasks_share_no_content() {
        let (src, tgt) = synth_tasks(&small_cfg(0.0), 7).unwrap();
        let shared: Vec<String> =
            token_set(&src).intersection(&token_set(&tgt)).cloned().collect();
        assert!(shared.is_empty(), "unexpected shared tokens: {shared:?}");
    }

    #[test]
    fn identical_similarity_uses_one_token_pool() {
        let (src, tgt) = synth_tasks(&small_cfg(1.0), 7).unwrap();
        for tok in token_set(&src).union(&token_set(&tgt)) {
            assert!(
                !tok.contains("_x_") && !tok.contains("_y_"),
                "task-specific token {tok:?} under similarity 1.0"
            );
        }
        assert_eq!(src.labels, tgt.labels);
    }

    #[test]
    fn instances_validate_and_triggers_sit_between_entities() {
        let (src, tgt) = synth_tasks(&small_cfg(0.5), 11).unwrap();
        for task in [&src, &tgt] {
            task.validate().unwrap();
            for inst in task.train.iter().chain(&task.test) {
                let (lo, hi) = (inst.e1_index.min(inst.e2_index), inst.e1_index.max(inst.e2_index));
                let trig = inst
                    .tokens
                    .iter()
                    .position(|t| t.starts_with("trg_"))
                    .expect("every sentence carries a trigger");
                assert!(lo < trig && trig < hi, "trigger outside the entity window");
                // Label must be the deterministic function of the trigger class.
                let class_tag = inst.tokens[trig].split('_').nth(1).unwrap();
                assert_eq!(class_tag.len(), 1, "small label counts spell as one letter");
                let class = (class_tag.as_bytes()[0] - b'a') as usize;
                let expect = if class == 0 { "NEG".to_string() } else { format!("R{class}") };
                assert_eq!(inst.label, expect);
            }
        }
    }

    #[test]
    fn tokens_are_stable_under_normalization() {
        let (src, _) = synth_tasks(&small_cfg(0.5), 3).unwrap();
        for inst in &src.train {
            for (i, tok) in inst.tokens.iter().enumerate() {
                let sentinel = i == inst.e1_index || i == inst.e2_index;
                assert_eq!(&super::super::normalize_token(tok, sentinel), tok);
            }
        }
    }

    #[test]
    fn rejects_inconsistent_config() {
        let mut cfg = small_cfg(0.5);
        cfg.triggers_per_label = 0;
        assert!(matches!(synth_tasks(&cfg, 1), Err(CorpusError::BadSynthConfig(_))));
        let mut cfg = small_cfg(0.5);
        cfg.len_min = 3;
        assert!(synth_tasks(&cfg, 1).is_err());
        let mut cfg = small_cfg(0.5);
        cfg.similarity = 1.5;
        assert!(synth_tasks(&cfg, 1).is_err());
    }

    #[test]
    fn round_robin_labels_balance_classes() {
        let (src, _) = synth_tasks(&small_cfg(1.0), 5).unwrap();
        let counts = src.class_counts(&src.train);
        assert_eq!(counts[0].1, 30);
        assert_eq!(counts[1].1, 30);
    }
}
