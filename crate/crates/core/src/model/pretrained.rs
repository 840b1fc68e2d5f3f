//! Loader for whitespace-delimited pretrained word vectors
//! (`word v1 … v_d` per line).

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::real::Real;

use super::{ModelError, ModelParams};

/// Outcome of a pretrained-vector load. `missing` counts vocabulary entries
/// left at their random initialization, which always includes PAD and UNK
/// unless the file happens to define them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub found: usize,
    pub missing: usize,
    pub duplicates: usize,
}

/// Overwrites word-embedding rows for every in-vocabulary word in the file.
/// A word listed twice keeps its last occurrence (warned). Vector length
/// must equal the model's word dimension.
pub fn load_pretrained_embeddings<F: Real>(
    path: &Path,
    vocab: &Vocabulary,
    params: &mut ModelParams<F>,
) -> Result<CoverageReport, ModelError> {
    let d1 = params.word_dim();
    let file = fs::File::open(path)?;
    let mut seen = vec![false; vocab.size()];
    let mut duplicates = 0usize;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts
            .next()
            .ok_or_else(|| ModelError::Pretrained { line: line_no, message: "empty line".into() })?;
        let values: Vec<&str> = parts.collect();
        if values.len() != d1 {
            return Err(ModelError::Pretrained {
                line: line_no,
                message: format!("expected {d1} vector components, found {}", values.len()),
            });
        }
        let Some(id) = vocab.lookup(word) else { continue };
        if seen[id] {
            duplicates += 1;
            log::warn!("pretrained vectors: word {word:?} appears more than once; last occurrence wins");
        }
        let row = params.word_emb.row_mut(id);
        for (slot, raw) in row.iter_mut().zip(&values) {
            let v: f64 = raw.parse().map_err(|e| ModelError::Pretrained {
                line: line_no,
                message: format!("bad float {raw:?}: {e}"),
            })?;
            *slot = F::from_f64(v);
        }
        seen[id] = true;
    }

    let found = seen.iter().filter(|&&s| s).count();
    Ok(CoverageReport { found, missing: vocab.size() - found, duplicates })
}
