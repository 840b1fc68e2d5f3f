//! Token normalization and entity blinding with pairwise expansion.

use super::{CorpusError, RawSentence, RelationInstance};

/// Lowercases a token and collapses every maximal run of ASCII digits to the
/// literal marker `DG`. Entity sentinels (e.g. `ProblemA`) pass through
/// unchanged so the type and A/B marker survive. An existing `DG` marker is
/// preserved, which makes the function idempotent on its own output.
pub fn normalize_token(raw: &str, is_entity_sentinel: bool) -> String {
    if is_entity_sentinel {
        return raw.to_string();
    }
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_ascii_digit() {
            out.push_str("DG");
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        } else if chars[i] == 'D' && i + 1 < chars.len() && chars[i + 1] == 'G' {
            out.push_str("DG");
            i += 2;
        } else {
            out.extend(chars[i].to_lowercase());
            i += 1;
        }
    }
    out
}

/// Expands a multi-entity sentence into one instance per unordered entity
/// pair. The pair member with the lower span start becomes the `<Type>A`
/// sentinel, the other `<Type>B`; multi-token mentions collapse to the single
/// sentinel token and all remaining tokens are normalized. Pairs without an
/// annotation in `sentence.relations` receive `negative_label`.
pub fn blind_and_expand(
    sentence: &RawSentence,
    negative_label: &str,
    origin_task: &str,
) -> Result<Vec<RelationInstance>, CorpusError> {
    sentence.validate()?;
    let k = sentence.entities.len();
    if k < 2 {
        return Err(CorpusError::TooFewEntities { id: sentence.id.clone(), count: k });
    }

    let label_for = |a: usize, b: usize| -> &str {
        sentence
            .relations
            .iter()
            .find(|r| (r.e1 == a && r.e2 == b) || (r.e1 == b && r.e2 == a))
            .map(|r| r.label.as_str())
            .unwrap_or(negative_label)
    };

    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            // A/B assignment follows span order, not entity-list order.
            let (first, second) = if sentence.entities[a].start <= sentence.entities[b].start {
                (a, b)
            } else {
                (b, a)
            };
            let ea = &sentence.entities[first];
            let eb = &sentence.entities[second];
            let sent_a = format!("{}A", ea.type_name);
            let sent_b = format!("{}B", eb.type_name);

            let mut tokens = Vec::with_capacity(sentence.tokens.len());
            let mut e1_index = 0;
            let mut e2_index = 0;
            let mut pos = 0;
            while pos < sentence.tokens.len() {
                if pos == ea.start {
                    e1_index = tokens.len();
                    tokens.push(sent_a.clone());
                    pos = ea.end;
                } else if pos == eb.start {
                    e2_index = tokens.len();
                    tokens.push(sent_b.clone());
                    pos = eb.end;
                } else {
                    tokens.push(normalize_token(&sentence.tokens[pos], false));
                    pos += 1;
                }
            }

            out.push(RelationInstance {
                id: format!("{}#p{}-{}", sentence.id, a, b),
                tokens,
                e1_index,
                e2_index,
                e1_type: ea.type_name.clone(),
                e2_type: eb.type_name.clone(),
                label: label_for(a, b).to_string(),
                origin_task: origin_task.to_string(),
            });
        }
    }
    Ok(out)
}
