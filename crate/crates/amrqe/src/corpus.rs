//! AMR corpus files: graphs separated by blank lines, each optionally
//! preceded by `# ::id` and `# ::snt` metadata comments.

use std::fmt::Write as _;
use std::path::Path;

use amrqe_core::amr::{parse_penman, serialize_penman, AmrGraph, ParseError};

use crate::error::{read_to_string, Result};

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub sentence: Option<String>,
    /// 1-based line where the block starts.
    pub line: usize,
    pub graph: Result<AmrGraph, ParseError>,
}

/// Value of `::key` in a metadata comment such as `# ::id x ::date y`.
fn meta<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.trim_start_matches('#').trim_start();
    rest.split("::").skip(1).find_map(|field| {
        let (k, v) = field.split_once(char::is_whitespace).unwrap_or((field, ""));
        (k == key).then(|| v.trim())
    })
}

pub fn parse_corpus(text: &str) -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let mut start = 0;
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().copied().chain(std::iter::once("")).enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                if let Some(e) = entry(&block, start, out.len()) {
                    out.push(e);
                }
                block.clear();
            }
        } else {
            if block.is_empty() {
                start = i + 1;
            }
            block.push(line);
        }
    }
    out
}

fn entry(block: &[&str], start: usize, index: usize) -> Option<CorpusEntry> {
    let body_at = block.iter().position(|l| !l.trim_start().starts_with('#'))?;
    let mut id = None;
    let mut sentence = None;
    for l in &block[..body_at] {
        id = id.or_else(|| meta(l, "id").map(str::to_string));
        sentence = sentence.or_else(|| meta(l, "snt").map(str::to_string));
    }
    let body = block[body_at..].join("\n");
    let graph = parse_penman(&body).map_err(|mut e| {
        e.line += start + body_at - 1;
        e
    });
    Some(CorpusEntry { id: id.unwrap_or_else(|| (index + 1).to_string()), sentence, line: start, graph })
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    Ok(parse_corpus(&read_to_string(path)?))
}

pub fn format_entry(out: &mut String, id: &str, sentence: Option<&str>, graph: &AmrGraph) {
    let _ = writeln!(out, "# ::id {id}");
    if let Some(s) = sentence {
        let _ = writeln!(out, "# ::snt {s}");
    }
    out.push_str(&serialize_penman(graph));
    out.push_str("\n\n");
}
