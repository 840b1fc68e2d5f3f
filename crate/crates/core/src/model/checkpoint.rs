//! Versioned checkpoint container: an 8-byte magic, a little-endian u32
//! format version, a length-prefixed JSON header (dtype, config snapshot,
//! vocabulary, tensor names and shapes), then the raw little-endian tensor
//! values in header order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::nn::{BiLstmParams, GATE_NAMES};
use crate::real::{Dtype, Real};
use crate::tensor::{Tensor1, Tensor2};

use super::{Head, ModelError, ModelParams, TrainConfig};

const MAGIC: &[u8; 8] = b"RELXCKPT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    version: u32,
    dtype: Dtype,
    config: TrainConfig,
    position_clip: usize,
    vocab: Vec<String>,
    tensors: Vec<TensorEntry>,
}

/// A loaded model with everything needed to run or resume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F: Real> {
    pub params: ModelParams<F>,
    pub vocab: Vocabulary,
    pub config: TrainConfig,
}

/// Writes params + vocabulary + config. Exact round-trip: every tensor is
/// stored bit-for-bit.
pub fn save_checkpoint<F: Real>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    config: &TrainConfig,
    path: &Path,
) -> Result<(), ModelError> {
    let header = HeaderJson {
        version: VERSION,
        dtype: F::DTYPE,
        config: config.clone(),
        position_clip: params.position_clip,
        vocab: vocab.words().to_vec(),
        tensors: params
            .tensor_shapes()
            .into_iter()
            .map(|(name, shape)| TensorEntry { name, shape })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| ModelError::Checkpoint(format!("header encode failed: {e}")))?;

    let mut out = fs::File::create(path)?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    let mut data = Vec::new();
    for (_, slice) in params.named_tensors() {
        for &v in slice {
            v.write_le(&mut data);
        }
    }
    out.write_all(&data)?;
    Ok(())
}

fn parse_header(bytes: &[u8]) -> Result<(HeaderJson, usize), ModelError> {
    let fixed = MAGIC.len() + 4 + 8;
    if bytes.len() < fixed {
        return Err(ModelError::CheckpointTruncated { expected: fixed, found: bytes.len() });
    }
    if &bytes[..8] != MAGIC {
        return Err(ModelError::Checkpoint("bad magic; not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("sized"));
    if version != VERSION {
        return Err(ModelError::CheckpointVersion { found: version, expected: VERSION });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("sized")) as usize;
    if bytes.len() < fixed + header_len {
        return Err(ModelError::CheckpointTruncated {
            expected: fixed + header_len,
            found: bytes.len(),
        });
    }
    let header: HeaderJson = serde_json::from_slice(&bytes[20..20 + header_len])
        .map_err(|e| ModelError::Checkpoint(format!("header decode failed: {e}")))?;
    Ok((header, 20 + header_len))
}

/// Reads only the stored dtype, for dispatching to the right precision.
pub fn checkpoint_dtype(path: &Path) -> Result<Dtype, ModelError> {
    let bytes = fs::read(path)?;
    Ok(parse_header(&bytes)?.0.dtype)
}

fn take_tensor2<F: Real>(
    store: &mut BTreeMap<String, (Vec<usize>, Vec<F>)>,
    name: &str,
) -> Result<Tensor2<F>, ModelError> {
    let (shape, data) =
        store.remove(name).ok_or_else(|| ModelError::MissingTensor(name.to_string()))?;
    if shape.len() != 2 {
        return Err(ModelError::Checkpoint(format!("tensor {name:?} is not rank-2: {shape:?}")));
    }
    Ok(Tensor2::from_vec(shape[0], shape[1], data))
}

fn take_tensor1<F: Real>(
    store: &mut BTreeMap<String, (Vec<usize>, Vec<F>)>,
    name: &str,
) -> Result<Tensor1<F>, ModelError> {
    let (shape, data) =
        store.remove(name).ok_or_else(|| ModelError::MissingTensor(name.to_string()))?;
    if shape.len() != 1 {
        return Err(ModelError::Checkpoint(format!("tensor {name:?} is not rank-1: {shape:?}")));
    }
    Ok(Tensor1::from_vec(data))
}

/// Loads a checkpoint saved with the same precision `F`.
pub fn load_checkpoint<F: Real>(path: &Path) -> Result<Checkpoint<F>, ModelError> {
    let bytes = fs::read(path)?;
    let (header, data_start) = parse_header(&bytes)?;
    if header.dtype != F::DTYPE {
        return Err(ModelError::DtypeMismatch { found: header.dtype, requested: F::DTYPE });
    }

    let expected: usize =
        header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum::<usize>() * F::BYTES;
    let data = &bytes[data_start..];
    if data.len() < expected {
        return Err(ModelError::CheckpointTruncated { expected, found: data.len() });
    }

    let mut store: BTreeMap<String, (Vec<usize>, Vec<F>)> = BTreeMap::new();
    let mut offset = 0usize;
    for entry in &header.tensors {
        let len: usize = entry.shape.iter().product();
        let mut values = Vec::with_capacity(len);
        for j in 0..len {
            let at = offset + j * F::BYTES;
            values.push(F::read_le(&data[at..at + F::BYTES]));
        }
        offset += len * F::BYTES;
        if store.insert(entry.name.clone(), (entry.shape.clone(), values)).is_some() {
            return Err(ModelError::Checkpoint(format!("duplicate tensor {:?}", entry.name)));
        }
    }

    let word_emb = take_tensor2(&mut store, "word_emb")?;
    let pos1_emb = take_tensor2(&mut store, "pos1_emb")?;
    let pos2_emb = take_tensor2(&mut store, "pos2_emb")?;
    let hidden = {
        let (shape, _) = store
            .get("encoder.fwd.w_i")
            .ok_or_else(|| ModelError::MissingTensor("encoder.fwd.w_i".into()))?;
        shape[0]
    };
    let mut encoder = BiLstmParams::<F>::zeros(hidden, word_emb.cols() + pos1_emb.cols() + pos2_emb.cols());
    for (dir_name, dir) in [("fwd", &mut encoder.fwd), ("bwd", &mut encoder.bwd)] {
        for (k, gate) in GATE_NAMES.iter().enumerate() {
            dir.w[k] = take_tensor2(&mut store, &format!("encoder.{dir_name}.w_{gate}"))?;
            dir.u[k] = take_tensor2(&mut store, &format!("encoder.{dir_name}.u_{gate}"))?;
            dir.b[k] = take_tensor1(&mut store, &format!("encoder.{dir_name}.b_{gate}"))?;
        }
    }

    let mut head_names: Vec<String> = Vec::new();
    for name in store.keys() {
        if let Some(rest) = name.strip_prefix("head.") {
            if let Some(head) = rest.strip_suffix(".w") {
                head_names.push(head.to_string());
            }
        }
    }
    let mut heads = BTreeMap::new();
    for head in head_names {
        let w = take_tensor2(&mut store, &format!("head.{head}.w"))?;
        let b = take_tensor1(&mut store, &format!("head.{head}.b"))?;
        heads.insert(head, Head { w, b });
    }
    if let Some(stray) = store.keys().next() {
        return Err(ModelError::Checkpoint(format!("unexpected tensor {stray:?}")));
    }

    let vocab = Vocabulary::from_words(header.vocab)
        .map_err(|e| ModelError::Checkpoint(format!("vocabulary: {e}")))?;
    let params = ModelParams {
        word_emb,
        pos1_emb,
        pos2_emb,
        encoder,
        heads,
        position_clip: header.position_clip,
    };
    Ok(Checkpoint { params, vocab, config: header.config })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, RelationInstance};
    use crate::model::init_params;

    fn fixture() -> (ModelParams<f64>, Vocabulary, TrainConfig) {
        let inst = RelationInstance {
            id: "a".into(),
            tokens: ["EntA", "likes", "EntB"].iter().map(|s| s.to_string()).collect(),
            e1_index: 0,
            e2_index: 2,
            e1_type: "Ent".into(),
            e2_type: "Ent".into(),
            label: "x".into(),
            origin_task: "t".into(),
        };
        let vocab = build_vocabulary(&[std::slice::from_ref(&inst)]);
        let cfg = TrainConfig {
            word_dim: 4,
            pos1_dim: 2,
            pos2_dim: 2,
            hidden: 3,
            position_clip: 4,
            ..TrainConfig::default()
        };
        let params = init_params(
            &cfg,
            vocab.size(),
            &[("src".into(), 3), ("tgt".into(), 2)],
            42,
        )
        .unwrap();
        (params, vocab, cfg)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();
        let loaded = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded.params, params);
        assert_eq!(loaded.vocab, vocab);
        assert_eq!(loaded.config, cfg);
        assert_eq!(checkpoint_dtype(&path).unwrap(), Dtype::F64);
    }

    #[test]
    fn two_heads_are_listed_by_name() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();
        let loaded = load_checkpoint::<f64>(&path).unwrap();
        let names: Vec<&String> = loaded.params.heads.keys().collect();
        assert_eq!(names, ["src", "tgt"]);
    }

    #[test]
    fn dtype_mismatch_is_rejected() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();
        assert!(matches!(
            load_checkpoint::<f32>(&path),
            Err(ModelError::DtypeMismatch { .. })
        ));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[8] = 9; // bump the little-endian version field
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(ModelError::CheckpointVersion { found: 9, .. })
        ));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(ModelError::CheckpointTruncated { .. })
        ));
    }

    #[test]
    fn missing_head_tensor_is_named() {
        let (params, vocab, cfg) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&params, &vocab, &cfg, &path).unwrap();

        // Drop the final tensor (head.tgt.b) from both header and data.
        let bytes = fs::read(&path).unwrap();
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[20..20 + header_len]).unwrap();
        let tensors = header["tensors"].as_array_mut().unwrap();
        let dropped = tensors.pop().unwrap();
        assert_eq!(dropped["name"], "head.tgt.b");
        let dropped_len: usize =
            dropped["shape"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).product();
        let new_header = serde_json::to_vec(&header).unwrap();

        let mut out = Vec::new();
        out.extend_from_slice(&bytes[..12]);
        out.extend_from_slice(&(new_header.len() as u64).to_le_bytes());
        out.extend_from_slice(&new_header);
        let data = &bytes[20 + header_len..];
        out.extend_from_slice(&data[..data.len() - dropped_len * 8]);
        fs::write(&path, &out).unwrap();

        match load_checkpoint::<f64>(&path) {
            Err(ModelError::MissingTensor(name)) => assert_eq!(name, "head.tgt.b"),
            other => panic!("expected MissingTensor, got {other:?}"),
        }
    }
}
