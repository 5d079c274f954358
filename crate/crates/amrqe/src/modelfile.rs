//! Binary model files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  "AMRQEMDL"
//! version    u32
//! header     u32 length + JSON {config, vocab}
//! arrays     u32 count, then per array:
//!              u16 name length + UTF-8 name
//!              u8 rank + u32 per dimension
//!              f32 values, row-major
//! ```

use std::path::Path;

use amrqe_core::model::{Model, ModelConfig};
use amrqe_core::preprocess::Vocab;
use serde::{Deserialize, Serialize};

use crate::error::{write_file, AppError, Result};

pub const MAGIC: &[u8; 8] = b"AMRQEMDL";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated model file while reading {0}")]
    Truncated(&'static str),
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("bad header: {0}")]
    Header(String),
    #[error("array {found:?} where {expected:?} was expected")]
    ArrayName { found: String, expected: String },
    #[error("array {name} has shape {found:?}, config implies {expected:?}")]
    ArrayShape { name: String, found: Vec<usize>, expected: Vec<usize> },
    #[error("file holds {found} arrays, config implies {expected}")]
    ArrayCount { found: usize, expected: usize },
    #[error("invalid model: {0}")]
    Invalid(#[from] amrqe_core::Error),
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: Vocab,
}

pub fn encode_model(model: &Model, vocab: &Vocab) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let header = serde_json::to_vec(&Header { config: model.config.clone(), vocab: vocab.clone() }).expect("header serializes");
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let shapes = model.params.shapes();
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    let mut k = 0;
    model.params.for_each(|name, xs| {
        let shape = &shapes[k].1;
        k += 1;
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for d in shape {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for x in xs {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
    });
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(ModelFileError::Truncated(what))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<(Model, Vocab), ModelFileError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic").map_err(|_| ModelFileError::BadMagic)? != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(ModelFileError::Version { found: version, expected: VERSION });
    }
    let n = r.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(r.take(n, "header")?).map_err(|e| ModelFileError::Header(e.to_string()))?;
    let mut template = Model::init(ModelConfig { seed: 0, ..header.config.clone() })?;
    let shapes = template.params.shapes();
    let count = r.u32("array count")? as usize;
    if count != shapes.len() {
        return Err(ModelFileError::ArrayCount { found: count, expected: shapes.len() });
    }
    let mut arrays = Vec::with_capacity(count);
    for (expected, shape) in &shapes {
        let len = u16::from_le_bytes(r.take(2, "array name")?.try_into().unwrap()) as usize;
        let name = String::from_utf8_lossy(r.take(len, "array name")?).into_owned();
        if &name != expected {
            return Err(ModelFileError::ArrayName { found: name, expected: expected.clone() });
        }
        let rank = r.take(1, "array rank")?[0] as usize;
        let dims = (0..rank).map(|_| r.u32("array shape").map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        if &dims != shape {
            return Err(ModelFileError::ArrayShape { name, found: dims, expected: shape.clone() });
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n * 4, "array values")?;
        arrays.push(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect::<Vec<_>>());
    }
    if r.pos != bytes.len() {
        return Err(ModelFileError::Trailing(bytes.len() - r.pos));
    }
    let mut it = arrays.into_iter();
    template.params.for_each_mut(|_, xs| xs.copy_from_slice(&it.next().unwrap()));
    let model = Model::from_parts(header.config, template.params)?;
    Ok((model, header.vocab))
}

pub fn save_model(path: &Path, model: &Model, vocab: &Vocab) -> Result<()> {
    write_file(path, encode_model(model, vocab))
}

pub fn load_model(path: &Path) -> Result<(Model, Vocab)> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(decode_model(&bytes)?)
}
