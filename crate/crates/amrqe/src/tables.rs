//! Tab-separated tables exchanged between subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use amrqe_core::metrics::{ScoreVector, SCORE_DIM};

use crate::error::{read_to_string, AppError, Result};

/// Fixed-precision formatting used by every numeric TSV column.
pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

/// Non-comment, non-empty lines with their 1-based numbers, split on tabs.
/// The first row is checked against `header`.
pub fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_to_string(path)?;
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').map(str::to_string).collect::<Vec<_>>()));
    match rows.next() {
        Some((n, h)) if h.len() < header.len() || h[..header.len()] != *header => {
            return Err(AppError::format(path, n, format!("expected header starting with {}", header.join(" "))));
        }
        None => return Err(AppError::format(path, 1, "missing header")),
        _ => {}
    }
    Ok(rows.collect())
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| AppError::format(path, line, format!("not a finite number: {s:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub id: String,
    pub system: String,
    pub scores: ScoreVector,
}

pub fn score_header() -> String {
    let mut h = String::from("id\tsystem");
    for c in ScoreVector::column_names() {
        h.push('\t');
        h.push_str(&c);
    }
    h
}

pub fn format_scores(rows: &[ScoreRow]) -> String {
    let mut out = score_header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.id);
        out.push('\t');
        out.push_str(&r.system);
        for v in r.scores.to_array() {
            out.push('\t');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut out = Vec::new();
    for (line, cols) in read_rows(path, &["id", "system"])? {
        if cols.len() != 2 + SCORE_DIM {
            return Err(AppError::format(path, line, format!("expected {} columns, got {}", 2 + SCORE_DIM, cols.len())));
        }
        let vals = cols[2..].iter().map(|s| parse_f64(path, line, s)).collect::<Result<Vec<_>>>()?;
        let scores = ScoreVector::from_slice(&vals)?;
        out.push(ScoreRow { id: cols[0].clone(), system: cols[1].clone(), scores });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub sentence_id: String,
    pub system: String,
    /// Resolved against the manifest's directory.
    pub parse_file: PathBuf,
    /// 0-based entry index inside `parse_file`.
    pub offset: usize,
}

pub const MANIFEST_HEADER: [&str; 4] = ["sentence_id", "system", "parse_file", "offset"];

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (line, cols) in read_rows(path, &MANIFEST_HEADER)? {
        if cols.len() != 4 {
            return Err(AppError::format(path, line, "expected 4 columns"));
        }
        let offset = cols[3].trim().parse().map_err(|_| AppError::format(path, line, "offset must be a non-negative integer"))?;
        out.push(ManifestRow {
            sentence_id: cols[0].clone(),
            system: cols[1].clone(),
            parse_file: base.join(&cols[2]),
            offset,
        });
    }
    Ok(out)
}

pub fn format_manifest(rows: &[(String, String, String, usize)]) -> String {
    let mut out = MANIFEST_HEADER.join("\t");
    out.push('\n');
    for (s, sys, f, o) in rows {
        let _ = writeln!(out, "{s}\t{sys}\t{f}\t{o}");
    }
    out
}

/// Two-column `key<TAB>value` file with a named header.
pub fn read_key_values(path: &Path, header: [&str; 2]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, cols) in read_rows(path, &header)? {
        if cols.len() < 2 {
            return Err(AppError::format(path, line, "expected 2 columns"));
        }
        if out.insert(cols[0].clone(), cols[1].clone()).is_some() {
            return Err(AppError::format(path, line, format!("duplicate key {}", cols[0])));
        }
    }
    Ok(out)
}

pub const PRIOR_HEADER: [&str; 2] = ["system", "dev_f1"];
pub const SPLIT_HEADER: [&str; 2] = ["sentence_id", "split"];
pub const RANK_HEADER: [&str; 2] = ["system", "true_rank"];

pub fn read_prior(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in read_key_values(path, PRIOR_HEADER)? {
        let x = parse_f64(path, 0, &v)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(AppError::format(path, 0, format!("prior for {k} outside [0, 1]")));
        }
        out.insert(k, x);
    }
    Ok(out)
}

pub fn read_true_ranks(path: &Path) -> Result<BTreeMap<String, f64>> {
    read_key_values(path, RANK_HEADER)?
        .into_iter()
        .map(|(k, v)| Ok((k, parse_f64(path, 0, &v)?)))
        .collect()
}

pub fn format_key_values<'a>(header: [&str; 2], rows: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for (k, v) in rows {
        let _ = writeln!(out, "{k}\t{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use amrqe_core::metrics::Prf;

    #[test]
    fn score_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tsv");
        let rows = vec![
            ScoreRow { id: "a".into(), system: "x".into(), scores: ScoreVector::all(Prf::new(0.5, 0.25)) },
            ScoreRow { id: "b".into(), system: "x".into(), scores: ScoreVector::all(Prf::ONE) },
        ];
        std::fs::write(&p, format_scores(&rows)).unwrap();
        let back = read_scores(&p).unwrap();
        assert_eq!(back[1], rows[1]);
        assert!((back[0].scores.smatch_f1() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn schema_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        std::fs::write(&p, "sentence_id\tsystem\tparse_file\toffset\ns1\tA\ta.amr\tx\n").unwrap();
        let e = read_manifest(&p).unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
        std::fs::write(&p, "wrong\n").unwrap();
        assert!(read_manifest(&p).is_err());
    }
}
