//! Seeded stratified selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, RelationInstance};

/// Selects `floor(fraction × |class|)` instances per class, uniformly at
/// random without replacement under `seed`. Returns `(selected, remainder)`;
/// both preserve the input order and together partition the input.
pub fn stratified_partition(
    instances: &[RelationInstance],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<RelationInstance>, Vec<RelationInstance>), CorpusError> {
    if instances.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::BadFraction(fraction));
    }

    // Classes keyed by first occurrence so the rng consumption order is
    // independent of label-set declarations.
    let mut class_order: Vec<&str> = Vec::new();
    let mut class_members: Vec<Vec<usize>> = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        match class_order.iter().position(|&c| c == inst.label) {
            Some(slot) => class_members[slot].push(i),
            None => {
                class_order.push(&inst.label);
                class_members.push(vec![i]);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; instances.len()];
    for members in &class_members {
        let take = (fraction * members.len() as f64).floor() as usize;
        for local in rand::seq::index::sample(&mut rng, members.len(), take) {
            picked[members[local]] = true;
        }
    }

    let mut selected = Vec::new();
    let mut remainder = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        if picked[i] {
            selected.push(inst.clone());
        } else {
            remainder.push(inst.clone());
        }
    }
    Ok((selected, remainder))
}
