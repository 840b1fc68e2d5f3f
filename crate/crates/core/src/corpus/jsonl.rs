//! JSON Lines dataset files and the labels file format.
//!
//! One record per instance:
//! `{"id": str, "tokens": [str], "e1": int, "e2": int, "e1_type": str,
//!   "e2_type": str, "label": str}`
//!
//! Tokens in a raw file are pre-normalization; loading applies the
//! lowercase/DG/blinding pipeline unless disabled for already-cooked data.
//! The labels file holds one label per line with a `NEG:` prefix marking the
//! negative class.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::normalize::normalize_token;
use super::{CorpusError, LabelSet, RelationInstance, TaskSpec};

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    id: String,
    tokens: Vec<String>,
    e1: usize,
    e2: usize,
    e1_type: String,
    e2_type: String,
    label: String,
}

/// Loader behavior knobs.
pub struct LoadOptions<'a> {
    /// Apply the normalization + blinding pipeline to each record. Disable
    /// for files that already hold cooked tokens.
    pub normalize: bool,
    /// Task name stamped into each instance.
    pub origin_task: &'a str,
    /// Optional negative-instance pre-filter; instances it rejects are
    /// dropped. Defaults to keeping everything (the filtering rules used for
    /// the published DDI corpora live in their own tooling).
    pub pre_filter: Option<&'a dyn Fn(&RelationInstance) -> bool>,
}

impl<'a> LoadOptions<'a> {
    pub fn new(origin_task: &'a str) -> Self {
        Self { normalize: true, origin_task, pre_filter: None }
    }

    pub fn already_normalized(mut self) -> Self {
        self.normalize = false;
        self
    }
}

/// Reads instance records, validating every line against the label set and
/// the instance invariants. Errors carry the 1-based line number.
pub fn read_instances(
    path: &Path,
    labels: &LabelSet,
    opts: &LoadOptions<'_>,
) -> Result<Vec<RelationInstance>, CorpusError> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        let m = rec.tokens.len();
        for (field, index) in [("e1", rec.e1), ("e2", rec.e2)] {
            if index >= m {
                return Err(CorpusError::IndexOutOfBounds { line: line_no, field, index, len: m });
            }
        }
        if rec.e1 == rec.e2 {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                message: "e1 and e2 coincide".into(),
            });
        }
        if labels.index_of(&rec.label).is_none() {
            return Err(CorpusError::UnknownLabel { line: line_no, label: rec.label });
        }

        let tokens: Vec<String> = if opts.normalize {
            rec.tokens
                .iter()
                .enumerate()
                .map(|(i, tok)| {
                    if i == rec.e1 {
                        format!("{}A", rec.e1_type)
                    } else if i == rec.e2 {
                        format!("{}B", rec.e2_type)
                    } else {
                        normalize_token(tok, false)
                    }
                })
                .collect()
        } else {
            rec.tokens
        };

        let inst = RelationInstance {
            id: rec.id,
            tokens,
            e1_index: rec.e1,
            e2_index: rec.e2,
            e1_type: rec.e1_type,
            e2_type: rec.e2_type,
            label: rec.label,
            origin_task: opts.origin_task.to_string(),
        };
        inst.validate(Some(labels)).map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(filter) = opts.pre_filter {
            if !filter(&inst) {
                continue;
            }
        }
        out.push(inst);
    }
    Ok(out)
}

/// Writes instances as JSON Lines in the record schema above.
pub fn write_instances(path: &Path, instances: &[RelationInstance]) -> Result<(), CorpusError> {
    let mut file = fs::File::create(path)?;
    for inst in instances {
        let rec = InstanceRecord {
            id: inst.id.clone(),
            tokens: inst.tokens.clone(),
            e1: inst.e1_index,
            e2: inst.e2_index,
            e1_type: inst.e1_type.clone(),
            e2_type: inst.e2_type.clone(),
            label: inst.label.clone(),
        };
        let json = serde_json::to_string(&rec).map_err(|e| CorpusError::MalformedLine {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(file, "{json}")?;
    }
    Ok(())
}

/// Parses a labels file: one label per line, `NEG:` prefix on exactly one
/// line marking the negative class, `#` lines ignored.
pub fn parse_labels(text: &str) -> Result<LabelSet, CorpusError> {
    let mut names = Vec::new();
    let mut negative = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("NEG:") {
            if negative.is_some() {
                return Err(CorpusError::LabelsFile("multiple NEG: lines".into()));
            }
            negative = Some(names.len());
            names.push(rest.trim().to_string());
        } else {
            names.push(line.to_string());
        }
    }
    let negative =
        negative.ok_or_else(|| CorpusError::LabelsFile("no NEG: line marks the negative class".into()))?;
    LabelSet::new(names, negative)
}

/// Renders a label set back into the labels file format.
pub fn render_labels(labels: &LabelSet) -> String {
    let mut out = String::new();
    for (i, name) in labels.names().iter().enumerate() {
        if i == labels.negative_index() {
            out.push_str("NEG:");
        }
        out.push_str(name);
        out.push('\n');
    }
    out
}

/// Loads one JSONL file plus its labels file into a task with an empty test
/// split.
pub fn load_jsonl_dataset(
    path: &Path,
    labels_path: &Path,
    normalize: bool,
) -> Result<TaskSpec, CorpusError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".to_string());
    let labels = parse_labels(&fs::read_to_string(labels_path)?)?;
    let mut opts = LoadOptions::new(&name);
    opts.normalize = normalize;
    let train = read_instances(path, &labels, &opts)?;
    Ok(TaskSpec { name, labels, train, test: Vec::new() })
}

/// Loads a full task from separate train/test files.
pub fn load_task(
    name: &str,
    labels_path: &Path,
    train_path: &Path,
    test_path: Option<&Path>,
    normalize: bool,
) -> Result<TaskSpec, CorpusError> {
    let labels = parse_labels(&fs::read_to_string(labels_path)?)?;
    let mut opts = LoadOptions::new(name);
    opts.normalize = normalize;
    let train = read_instances(train_path, &labels, &opts)?;
    let test = match test_path {
        Some(p) => read_instances(p, &labels, &opts)?,
        None => Vec::new(),
    };
    Ok(TaskSpec { name: name.to_string(), labels, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> LabelSet {
        parse_labels("NEG:None\nEffect\n").unwrap()
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_and_normalizes_records() {
        let f = write_tmp(concat!(
            r#"{"id":"a","tokens":["Lithium","harms","Kidney","43","times"],"e1":0,"e2":2,"e1_type":"Drug","e2_type":"Organ","label":"Effect"}"#,
            "\n",
        ));
        let opts = LoadOptions::new("ddi");
        let got = read_instances(f.path(), &labels(), &opts).unwrap();
        assert_eq!(got.len(), 1);
        let words: Vec<&str> = got[0].tokens.iter().map(|s| s.as_str()).collect();
        assert_eq!(words, ["DrugA", "harms", "OrganB", "DG", "times"]);
        assert_eq!(got[0].origin_task, "ddi");
    }

    #[test]
    fn error_names_the_line_for_bad_bounds() {
        let f = write_tmp(concat!(
            r#"{"id":"a","tokens":["EntA","x","EntB"],"e1":0,"e2":2,"e1_type":"Ent","e2_type":"Ent","label":"Effect"}"#,
            "\n",
            r#"{"id":"b","tokens":["EntA","x","EntB"],"e1":0,"e2":3,"e1_type":"Ent","e2_type":"Ent","label":"Effect"}"#,
            "\n",
        ));
        let opts = LoadOptions::new("t").already_normalized();
        match read_instances(f.path(), &labels(), &opts) {
            Err(CorpusError::IndexOutOfBounds { line, field, index, len }) => {
                assert_eq!((line, field, index, len), (2, "e2", 3, 3));
            }
            other => panic!("expected bounds error, got {other:?}"),
        }
    }

    #[test]
    fn error_on_unknown_label() {
        let f = write_tmp(concat!(
            r#"{"id":"a","tokens":["EntA","x","EntB"],"e1":0,"e2":2,"e1_type":"Ent","e2_type":"Ent","label":"Effct"}"#,
            "\n",
        ));
        let opts = LoadOptions::new("t").already_normalized();
        match read_instances(f.path(), &labels(), &opts) {
            Err(CorpusError::UnknownLabel { line, label }) => {
                assert_eq!((line, label.as_str()), (1, "Effct"));
            }
            other => panic!("expected unknown-label error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_names_the_line() {
        let f = write_tmp("{\"id\": \"a\"\n");
        let opts = LoadOptions::new("t");
        match read_instances(f.path(), &labels(), &opts) {
            Err(CorpusError::MalformedLine { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_instances() {
        let f = write_tmp(concat!(
            r#"{"id":"a","tokens":["Lithium","harms","Kidney"],"e1":0,"e2":2,"e1_type":"Drug","e2_type":"Organ","label":"Effect"}"#,
            "\n",
            r#"{"id":"b","tokens":["Aspirin","helps","Heart","2","ways"],"e1":0,"e2":2,"e1_type":"Drug","e2_type":"Organ","label":"None"}"#,
            "\n",
        ));
        let opts = LoadOptions::new("t");
        let first = read_instances(f.path(), &labels(), &opts).unwrap();

        let out = tempfile::NamedTempFile::new().unwrap();
        write_instances(out.path(), &first).unwrap();
        // Cooked files round-trip under either loader mode because
        // normalization is idempotent and blinding is already applied.
        for normalize in [false, true] {
            let mut opts = LoadOptions::new("t");
            opts.normalize = normalize;
            let again = read_instances(out.path(), &labels(), &opts).unwrap();
            assert_eq!(first, again);
        }
    }

    #[test]
    fn labels_file_round_trip_and_errors() {
        let ls = labels();
        assert_eq!(ls.negative_label(), "None");
        assert_eq!(ls.len(), 2);
        let again = parse_labels(&render_labels(&ls)).unwrap();
        assert_eq!(ls, again);
        assert!(parse_labels("Effect\n").is_err());
        assert!(parse_labels("NEG:a\nNEG:b\n").is_err());
    }

    #[test]
    fn pre_filter_drops_instances() {
        let f = write_tmp(concat!(
            r#"{"id":"a","tokens":["EntA","x","EntB"],"e1":0,"e2":2,"e1_type":"Ent","e2_type":"Ent","label":"None"}"#,
            "\n",
            r#"{"id":"b","tokens":["EntA","y","EntB"],"e1":0,"e2":2,"e1_type":"Ent","e2_type":"Ent","label":"Effect"}"#,
            "\n",
        ));
        let keep_positive = |i: &RelationInstance| i.label != "None";
        let opts = LoadOptions {
            normalize: false,
            origin_task: "t",
            pre_filter: Some(&keep_positive),
        };
        let got = read_instances(f.path(), &labels(), &opts).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].id, "b");
    }
}
