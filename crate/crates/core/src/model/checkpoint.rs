//! Parameter checkpoints: a small binary format that round-trips tensors
//! bit-exactly.
//!
//! Layout (all integers little-endian):
//!   magic "HFCK", format version u32,
//!   header: d, k, m, n, l (u64 each), seed (u64),
//!   tensor count u64, then per tensor:
//!     name length u32, name bytes (utf-8), rows u64, cols u64,
//!     rows*cols f64 values (LE bit patterns).

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;

use super::{ModelError, ModelParams, PathParams};

const MAGIC: &[u8; 4] = b"HFCK";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub embed_dim: usize,
    pub semantic_dim: usize,
    pub path_count: usize,
    pub node_count: usize,
    pub label_count: usize,
    pub seed: u64,
}

pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    header: &CheckpointHeader,
) -> Result<(), ModelError> {
    let bytes = checkpoint_to_bytes(params, header)?;
    std::fs::write(path, bytes).map_err(|e| ModelError::Checkpoint(e.to_string()))
}

/// The checkpoint serialization, rendered into memory.
pub fn checkpoint_to_bytes(
    params: &ModelParams,
    header: &CheckpointHeader,
) -> Result<Vec<u8>, ModelError> {
    let mut w = Vec::new();
    let io = |e: std::io::Error| ModelError::Checkpoint(e.to_string());

    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
    for v in [
        header.embed_dim,
        header.semantic_dim,
        header.path_count,
        header.node_count,
        header.label_count,
    ] {
        w.write_all(&(v as u64).to_le_bytes()).map_err(io)?;
    }
    w.write_all(&header.seed.to_le_bytes()).map_err(io)?;

    let tensors = params.named_tensors();
    w.write_all(&(tensors.len() as u64).to_le_bytes()).map_err(io)?;
    for (name, tensor) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
        let (rows, cols) = tensor.shape();
        w.write_all(&(rows as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(cols as u64).to_le_bytes()).map_err(io)?;
        for v in tensor.to_vec() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(w)
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, CheckpointHeader), ModelError> {
    let file = File::open(path).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint("bad magic".to_string()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let embed_dim = read_u64(&mut r)? as usize;
    let semantic_dim = read_u64(&mut r)? as usize;
    let path_count = read_u64(&mut r)? as usize;
    let node_count = read_u64(&mut r)? as usize;
    let label_count = read_u64(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let header = CheckpointHeader {
        embed_dim,
        semantic_dim,
        path_count,
        node_count,
        label_count,
        seed,
    };

    let count = read_u64(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        read_exact(&mut r, &mut name)?;
        let name =
            String::from_utf8(name).map_err(|_| ModelError::Checkpoint("bad name".to_string()))?;
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let mut values = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 8];
        for _ in 0..rows * cols {
            read_exact(&mut r, &mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        tensors.push((name, Tensor::param(rows, cols, values)));
    }

    let params = assemble(&header, tensors)?;
    Ok((params, header))
}

fn assemble(
    header: &CheckpointHeader,
    tensors: Vec<(String, Tensor)>,
) -> Result<ModelParams, ModelError> {
    let expected = 2 * header.path_count + 5;
    if tensors.len() != expected {
        return Err(ModelError::Checkpoint(format!(
            "expected {expected} tensors, found {}",
            tensors.len()
        )));
    }
    let mut iter = tensors.into_iter();
    let mut take = |expect: String| -> Result<Tensor, ModelError> {
        let (name, t) = iter.next().expect("count checked above");
        if name != expect {
            return Err(ModelError::Checkpoint(format!(
                "expected tensor {expect:?}, found {name:?}"
            )));
        }
        Ok(t)
    };
    let mut per_path = Vec::with_capacity(header.path_count);
    for i in 0..header.path_count {
        per_path.push(PathParams {
            w_f: take(format!("w_f.{i}"))?,
            w_c: take(format!("w_c.{i}"))?,
        });
    }
    Ok(ModelParams {
        per_path,
        w_p: take("w_p".to_string())?,
        b_p: take("b_p".to_string())?,
        prefs: take("prefs".to_string())?,
        w_cls: take("w_cls".to_string())?,
        b_cls: take("b_cls".to_string())?,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), ModelError> {
    r.read_exact(buf)
        .map_err(|e| ModelError::Checkpoint(e.to_string()))
}

fn read_u32(r: &mut impl Read) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, ModelError> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
