//! RCVT checkpoint container: magic, format version, a JSON header
//! carrying the resolved config and a tensor manifest, the raw
//! little-endian f64 payload, and a trailing CRC32 over everything
//! before it.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.rcvt";
const MAGIC: &[u8; 4] = b"RCVT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Resolved run configuration at save time.
    pub config: Map<String, Value>,
    /// Optimizer steps completed.
    pub train_step: u64,
    /// AdamW bias-correction counter (equals `train_step` in this CLI,
    /// but stored separately because the formats are independent).
    pub opt_step: u64,
    pub params: Vec<f64>,
    pub opt_m: Vec<f64>,
    pub opt_v: Vec<f64>,
}

/// IEEE CRC32 (reflected, polynomial 0xEDB88320), bitwise.
pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xffff_ffffu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xedb8_8320 & mask);
        }
    }
    !crc
}

fn encode(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let tensors = [
        ("params", &ckpt.params),
        ("opt.m", &ckpt.opt_m),
        ("opt.v", &ckpt.opt_v),
    ];
    let mut manifest = Vec::new();
    let mut offset = 0u64;
    for (name, t) in &tensors {
        manifest.push(json!({"name": name, "shape": [t.len()], "offset": offset}));
        offset += 8 * t.len() as u64;
    }
    let header = json!({
        "config": Value::Object(ckpt.config.clone()),
        "train_step": ckpt.train_step,
        "opt_step": ckpt.opt_step,
        "tensors": manifest,
    });
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| CliError::Format(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + header_bytes.len() + offset as usize + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header_bytes);
    for (_, t) in &tensors {
        for x in t.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let buf = encode(ckpt)?;
    fs::write(path, buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn header_u64(header: &Value, key: &str) -> Result<u64> {
    header
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::Format(format!("checkpoint header is missing \"{key}\"")))
}

fn take_tensor(header: &Value, payload: &[u8], name: &str) -> Result<Vec<f64>> {
    let entry = header
        .get("tensors")
        .and_then(Value::as_array)
        .and_then(|ts| ts.iter().find(|t| t.get("name").and_then(Value::as_str) == Some(name)))
        .ok_or_else(|| CliError::Format(format!("checkpoint is missing tensor \"{name}\"")))?;
    let shape = entry
        .get("shape")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Format(format!("tensor \"{name}\" has no shape")))?;
    let len: u64 = shape
        .iter()
        .map(|d| d.as_u64().ok_or_else(|| CliError::Format(format!("tensor \"{name}\" has a bad shape"))))
        .try_fold(1u64, |acc, d| d.map(|d| acc * d))?;
    let offset = entry
        .get("offset")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::Format(format!("tensor \"{name}\" has no offset")))?;
    let end = offset
        .checked_add(len.checked_mul(8).ok_or_else(|| CliError::Format("tensor too large".into()))?)
        .ok_or_else(|| CliError::Format("tensor too large".into()))?;
    if end as usize > payload.len() {
        return Err(CliError::Format(format!(
            "tensor \"{name}\" extends past the payload ({} > {})",
            end,
            payload.len()
        )));
    }
    Ok(payload[offset as usize..end as usize]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let buf = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if buf.len() < 4 + 4 + 8 + 4 {
        return Err(CliError::Format(format!(
            "checkpoint truncated: {} bytes",
            buf.len()
        )));
    }
    let (body, tail) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32(body);
    if stored != computed {
        return Err(recat_core::Error::CrcMismatch { stored, computed }.into());
    }
    if &body[0..4] != MAGIC {
        return Err(CliError::Format("not an RCVT checkpoint".into()));
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CliError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let header_len = u64::from_le_bytes(body[8..16].try_into().unwrap()) as usize;
    if 16 + header_len > body.len() {
        return Err(CliError::Format(format!(
            "header length {header_len} exceeds file size"
        )));
    }
    let header: Value = serde_json::from_slice(&body[16..16 + header_len])
        .map_err(|e| CliError::Format(format!("bad checkpoint header: {e}")))?;
    let payload = &body[16 + header_len..];
    let config = match header.get("config") {
        Some(Value::Object(m)) => m.clone(),
        _ => return Err(CliError::Format("checkpoint header has no config object".into())),
    };
    Ok(Checkpoint {
        config,
        train_step: header_u64(&header, "train_step")?,
        opt_step: header_u64(&header, "opt_step")?,
        params: take_tensor(&header, payload, "params")?,
        opt_m: take_tensor(&header, payload, "opt.m")?,
        opt_v: take_tensor(&header, payload, "opt.v")?,
    })
}
