//! Label-set bijection validation for full-model transfer.

use crate::corpus::LabelSet;

use super::TransferError;

/// A validated one-to-one, onto mapping from source labels to target labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelBijection {
    /// Target label index per source label index.
    src_to_tgt: Vec<usize>,
    pairs: Vec<(String, String)>,
}

impl LabelBijection {
    pub fn map_index(&self, source_index: usize) -> usize {
        self.src_to_tgt[source_index]
    }

    /// Source→target pairs in source label order.
    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// True when every source index maps to the same target index, i.e. the
    /// two ordered label lists already align.
    pub fn is_index_identity(&self) -> bool {
        self.src_to_tgt.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// Validates a mapping between two label sets, or derives the identity when
/// no mapping is given and the name sets coincide.
pub fn check_bijection(
    source: &LabelSet,
    target: &LabelSet,
    mapping: Option<&[(String, String)]>,
) -> Result<LabelBijection, TransferError> {
    if source.len() != target.len() {
        return Err(TransferError::BijectionCardinality {
            source_len: source.len(),
            target_len: target.len(),
        });
    }

    let mut src_to_tgt = vec![usize::MAX; source.len()];
    let mut target_hit = vec![false; target.len()];

    match mapping {
        None => {
            if !source.same_names(target) {
                return Err(TransferError::MissingBijection(format!(
                    "label sets differ ({:?} vs {:?}); provide an explicit mapping",
                    source.names(),
                    target.names()
                )));
            }
            for (i, name) in source.names().iter().enumerate() {
                let j = target.index_of(name).expect("same_names checked");
                src_to_tgt[i] = j;
                target_hit[j] = true;
            }
        }
        Some(pairs) => {
            for (src_name, tgt_name) in pairs {
                let i = source.index_of(src_name).ok_or_else(|| {
                    TransferError::BijectionUnknownLabel {
                        side: "source",
                        label: src_name.clone(),
                    }
                })?;
                let j = target.index_of(tgt_name).ok_or_else(|| {
                    TransferError::BijectionUnknownLabel {
                        side: "target",
                        label: tgt_name.clone(),
                    }
                })?;
                if src_to_tgt[i] != usize::MAX {
                    return Err(TransferError::BijectionDuplicateSource {
                        label: src_name.clone(),
                    });
                }
                if target_hit[j] {
                    return Err(TransferError::BijectionNotInjective {
                        target_label: tgt_name.clone(),
                    });
                }
                src_to_tgt[i] = j;
                target_hit[j] = true;
            }
            if let Some(i) = src_to_tgt.iter().position(|&j| j == usize::MAX) {
                return Err(TransferError::BijectionIncomplete {
                    label: source.name(i).to_string(),
                });
            }
        }
    }

    let pairs = src_to_tgt
        .iter()
        .enumerate()
        .map(|(i, &j)| (source.name(i).to_string(), target.name(j).to_string()))
        .collect();
    Ok(LabelBijection { src_to_tgt, pairs })
}
