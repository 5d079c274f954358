//! Prepared datasets (one JSON record per line) and vocabulary files.

use std::path::Path;

use amrqe_core::metrics::SCORE_DIM;
use amrqe_core::model::Example;
use amrqe_core::preprocess::{encode, LinearizedInput, Vocab};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file, AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub system: String,
    pub input: LinearizedInput,
    /// Gold scores in the flat 36-column layout, when a reference exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
}

pub fn write_dataset(path: &Path, records: &[Record]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_file(path, out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<Record>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: Record = serde_json::from_str(line).map_err(|e| AppError::format(path, i + 1, e.to_string()))?;
        rec.input.validate().map_err(|e| AppError::format(path, i + 1, e.to_string()))?;
        if rec.targets.as_ref().is_some_and(|t| t.len() != SCORE_DIM) {
            return Err(AppError::format(path, i + 1, format!("targets must have {SCORE_DIM} values")));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Encode records for training; every record needs targets.
pub fn to_examples(path: &Path, records: &[Record], vocab: &Vocab) -> Result<Vec<Example>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = r
                .targets
                .as_ref()
                .ok_or_else(|| AppError::format(path, i + 1, format!("record {}/{} has no targets", r.id, r.system)))?;
            let mut target = [0.0; SCORE_DIM];
            target.copy_from_slice(t);
            Ok(Example { input: encode(&r.input, vocab, vocab.max_len), target })
        })
        .collect()
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut s = serde_json::to_string_pretty(vocab)?;
    s.push('\n');
    write_file(path, s)
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| AppError::format(path, e.line(), e.to_string()))
}
