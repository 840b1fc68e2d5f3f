//! Dataset ingestion, preprocessing, stratified partitioning, and the
//! synthetic task generator.
//!
//! Instances arrive pre-tokenized. The preprocessing pipeline lowercases
//! tokens, collapses digit runs to the `DG` marker, blinds the two targeted
//! entities to `<Type>A` / `<Type>B` sentinels, and expands multi-entity
//! sentences into one instance per entity pair.

mod jsonl;
mod normalize;
mod split;
mod synth;

pub use jsonl::{load_jsonl_dataset, load_task, parse_labels, read_instances, render_labels,
                write_instances, LoadOptions};
pub use normalize::{blind_and_expand, normalize_token};
pub use split::stratified_partition;
pub use synth::{synth_tasks, SynthConfig};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by dataset loading, validation, and generation.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: {field} index {index} out of bounds for sentence of length {len}")]
    IndexOutOfBounds { line: usize, field: &'static str, index: usize, len: usize },
    #[error("instance {id:?}: {reason}")]
    InvalidInstance { id: String, reason: String },
    #[error("sentence {id:?}: {reason}")]
    InvalidSentence { id: String, reason: String },
    #[error("sentence {id:?} has {count} entities; pairwise expansion needs at least 2")]
    TooFewEntities { id: String, count: usize },
    #[error("input instance collection is empty")]
    EmptyInput,
    #[error("fraction {0} outside the open interval (0, 1)")]
    BadFraction(f64),
    #[error("labels file: {0}")]
    LabelsFile(String),
    #[error("synthetic task config: {0}")]
    BadSynthConfig(String),
}

/// A pre-tokenized sentence with its entity mentions, before blinding and
/// pairwise expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub entities: Vec<EntitySpan>,
    /// Relation annotations by entity index; unannotated pairs fall back to
    /// the task's negative label during expansion.
    #[serde(default)]
    pub relations: Vec<PairLabel>,
}

/// Token-index range of one entity mention, end exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub type_name: String,
}

/// Gold label for one unordered entity pair, by entity index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLabel {
    pub e1: usize,
    pub e2: usize,
    pub label: String,
}

impl RawSentence {
    /// Checks span bounds, non-overlap, and relation references.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let m = self.tokens.len();
        let err = |reason: String| CorpusError::InvalidSentence { id: self.id.clone(), reason };
        for e in &self.entities {
            if e.start >= e.end {
                return Err(err(format!("entity span {}..{} is empty", e.start, e.end)));
            }
            if e.end > m {
                return Err(err(format!("entity span {}..{} exceeds length {m}", e.start, e.end)));
            }
        }
        let mut order: Vec<usize> = (0..self.entities.len()).collect();
        order.sort_by_key(|&i| self.entities[i].start);
        for pair in order.windows(2) {
            let (a, b) = (&self.entities[pair[0]], &self.entities[pair[1]]);
            if b.start < a.end {
                return Err(err(format!(
                    "entity spans {}..{} and {}..{} overlap",
                    a.start, a.end, b.start, b.end
                )));
            }
        }
        for r in &self.relations {
            if r.e1 >= self.entities.len() || r.e2 >= self.entities.len() || r.e1 == r.e2 {
                return Err(err(format!("relation references invalid entity pair ({}, {})", r.e1, r.e2)));
            }
        }
        Ok(())
    }
}

/// One blinded, normalized sentence with two marked entities and a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub id: String,
    pub tokens: Vec<String>,
    pub e1_index: usize,
    pub e2_index: usize,
    pub e1_type: String,
    pub e2_type: String,
    pub label: String,
    pub origin_task: String,
}

impl RelationInstance {
    /// Validator pass over the type invariants. When `labels` is given the
    /// instance's label must be a member.
    pub fn validate(&self, labels: Option<&LabelSet>) -> Result<(), CorpusError> {
        let m = self.tokens.len();
        let err = |reason: String| CorpusError::InvalidInstance { id: self.id.clone(), reason };
        if self.e1_index >= m || self.e2_index >= m {
            return Err(err(format!(
                "entity indices ({}, {}) out of bounds for length {m}",
                self.e1_index, self.e2_index
            )));
        }
        if self.e1_index == self.e2_index {
            return Err(err("entity indices coincide".into()));
        }
        let want1 = format!("{}A", self.e1_type);
        if self.tokens[self.e1_index] != want1 {
            return Err(err(format!(
                "token at e1 is {:?}, expected sentinel {want1:?}",
                self.tokens[self.e1_index]
            )));
        }
        let want2 = format!("{}B", self.e2_type);
        if self.tokens[self.e2_index] != want2 {
            return Err(err(format!(
                "token at e2 is {:?}, expected sentinel {want2:?}",
                self.tokens[self.e2_index]
            )));
        }
        if let Some(ls) = labels {
            if ls.index_of(&self.label).is_none() {
                return Err(err(format!("label {:?} not in task label set", self.label)));
            }
        }
        Ok(())
    }
}

/// Ordered label set with a designated negative ("no relation") class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
    negative: usize,
}

impl LabelSet {
    pub fn new(names: Vec<String>, negative: usize) -> Result<Self, CorpusError> {
        if names.is_empty() {
            return Err(CorpusError::LabelsFile("label set is empty".into()));
        }
        if negative >= names.len() {
            return Err(CorpusError::LabelsFile(format!(
                "negative index {negative} out of range for {} labels",
                names.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.clone(), i).is_some() {
                return Err(CorpusError::LabelsFile(format!("duplicate label {n:?}")));
            }
        }
        Ok(Self { names, negative })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn negative_index(&self) -> usize {
        self.negative
    }

    pub fn negative_label(&self) -> &str {
        &self.names[self.negative]
    }

    /// True when both sets hold the same names, in any order.
    pub fn same_names(&self, other: &LabelSet) -> bool {
        self.len() == other.len() && self.names.iter().all(|n| other.index_of(n).is_some())
    }
}

/// A named task: label set plus train/test instance collections.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub labels: LabelSet,
    pub train: Vec<RelationInstance>,
    pub test: Vec<RelationInstance>,
}

impl TaskSpec {
    /// Validates every instance against the type invariants and the label set.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for inst in self.train.iter().chain(&self.test) {
            inst.validate(Some(&self.labels))?;
        }
        Ok(())
    }

    /// Per-class instance counts over one split, in label-set order.
    pub fn class_counts(&self, instances: &[RelationInstance]) -> Vec<(String, usize)> {
        self.labels
            .names()
            .iter()
            .map(|name| {
                let n = instances.iter().filter(|i| &i.label == name).count();
                (name.clone(), n)
            })
            .collect()
    }
}

pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token-to-id map with reserved PAD and UNK entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Self { words: Vec::new(), index: HashMap::new() };
        v.add(PAD_TOKEN);
        v.add(UNK_TOKEN);
        v
    }

    fn add(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.words.len();
        self.words.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// Id for a token, falling back to UNK for unseen tokens.
    pub fn id_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Id for a token only if it was seen while building.
    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Tokens in id order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Rebuilds a vocabulary from an id-ordered word list (checkpoint load).
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        if words.len() < 2 || words[PAD_ID] != PAD_TOKEN || words[UNK_ID] != UNK_TOKEN {
            return Err(CorpusError::LabelsFile(
                "vocabulary word list must start with the PAD and UNK entries".into(),
            ));
        }
        let mut index = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(CorpusError::LabelsFile(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self { words, index })
    }
}

/// Ids assigned in first-occurrence order over a deterministic scan of the
/// given collections. Sentinel tokens are ordinary entries.
pub fn build_vocabulary(collections: &[&[RelationInstance]]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for coll in collections {
        for inst in *coll {
            for tok in &inst.tokens {
                vocab.add(tok);
            }
        }
    }
    vocab
}
