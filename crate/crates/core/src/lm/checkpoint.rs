//! Binary checkpoint format.
//!
//! ```text
//! "PPLM" | version: u32 LE | header_len: u32 LE | header (JSON) | f32 LE blobs | crc32: u32 LE
//! ```
//!
//! The JSON header holds the model config, the id-ordered vocabulary and a
//! manifest of `(name, rows, cols)` for each blob, in blob order. The
//! trailing CRC-32 covers every preceding byte, so a damaged header that
//! still parses as a valid (but different) model is rejected too.
//!
//! Sizes are validated against the input length before anything is
//! allocated from header values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::LmConfig;
use super::params::{tensor_specs, LmParameters, TensorSpec, Weights};
use crate::corpus::Vocabulary;
use crate::error::{CheckpointError, Error, Result};

pub const MAGIC: &[u8; 4] = b"PPLM";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: LmConfig,
    vocab: Vocabulary,
    tensors: Vec<TensorSpec>,
}

pub fn save_checkpoint(params: &LmParameters<f32>) -> Vec<u8> {
    let header = Header {
        config: params.config.clone(),
        vocab: params.vocab.clone(),
        tensors: params.weights.specs(),
    };
    let json = serde_json::to_vec(&header).expect("header serialises");
    let mut out = Vec::with_capacity(12 + json.len() + 4 * params.weights.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, data) in params.weights.tensors() {
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<LmParameters<f32>, CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(bytes, 4, "version")?;
    if version != VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let header_len = read_u32(bytes, 8, "header length")? as usize;
    let header_end = 12usize
        .checked_add(header_len)
        .ok_or_else(|| CheckpointError::Corrupt("header length overflows".into()))?;
    if bytes.len() < header_end {
        return Err(CheckpointError::Truncated(format!(
            "header declares {header_len} bytes, only {} present",
            bytes.len() - 12
        )));
    }
    let header: Header = serde_json::from_slice(&bytes[12..header_end])
        .map_err(|e| CheckpointError::Corrupt(format!("header: {e}")))?;
    header
        .config
        .validate()
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

    let expected = tensor_specs(&header.config, header.vocab.len());
    if expected.len() != header.tensors.len() {
        return Err(CheckpointError::Corrupt(format!(
            "manifest lists {} tensors, architecture has {}",
            header.tensors.len(),
            expected.len()
        )));
    }
    for (want, got) in expected.iter().zip(&header.tensors) {
        if want != got {
            return Err(CheckpointError::Corrupt(format!(
                "tensor `{}` declared {}x{}, vocabulary and config require `{}` {}x{}",
                got.name, got.rows, got.cols, want.name, want.rows, want.cols
            )));
        }
    }

    let blob_bytes = expected
        .iter()
        .try_fold(0usize, |acc, t| t.rows.checked_mul(t.cols).and_then(|n| n.checked_mul(4)).and_then(|n| acc.checked_add(n)))
        .ok_or_else(|| CheckpointError::Corrupt("declared parameter count overflows".into()))?;
    let rest = &bytes[header_end..];
    let needed = blob_bytes.saturating_add(4);
    if rest.len() < needed {
        return Err(CheckpointError::Truncated(format!(
            "expected {needed} bytes of parameters and checksum, found {}",
            rest.len()
        )));
    }
    if rest.len() > needed {
        return Err(CheckpointError::Corrupt(format!(
            "{} trailing bytes after checksum",
            rest.len() - needed
        )));
    }
    let body_end = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("four bytes"));
    if crc32fast::hash(&bytes[..body_end]) != stored {
        return Err(CheckpointError::Corrupt("checksum mismatch".into()));
    }

    let blob = &bytes[header_end..body_end];
    let mut weights = Weights::<f32>::zeros(&header.config, header.vocab.len());
    let mut chunks = blob.chunks_exact(4);
    for tensor in weights.tensors_mut() {
        for (v, chunk) in tensor.iter_mut().zip(&mut chunks) {
            *v = f32::from_le_bytes(chunk.try_into().expect("chunk of four"));
        }
    }
    if !weights.all_finite() {
        return Err(CheckpointError::Corrupt("non-finite parameter".into()));
    }
    Ok(LmParameters {
        vocab: header.vocab,
        config: header.config,
        weights,
    })
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32, CheckpointError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("slice of four")))
        .ok_or_else(|| CheckpointError::Truncated(format!("missing {what}")))
}

pub fn write_checkpoint_file(path: &Path, params: &LmParameters<f32>) -> Result<()> {
    std::fs::write(path, save_checkpoint(params)).map_err(|e| Error::file(path, e))
}

pub fn read_checkpoint_file(path: &Path) -> Result<LmParameters<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(load_checkpoint(&bytes)?)
}
