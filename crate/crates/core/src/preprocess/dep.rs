use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dependency annotation of one sentence. `heads[i]` is the parent index
/// of token `i`, or -1 for a root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepTree {
    pub forms: Vec<String>,
    pub lemmas: Vec<String>,
    pub heads: Vec<i64>,
    pub labels: Vec<String>,
}

impl DepTree {
    pub fn new(forms: Vec<String>, lemmas: Vec<String>, heads: Vec<i64>, labels: Vec<String>) -> Result<Self> {
        let t = DepTree { forms, lemmas, heads, labels };
        t.validate()?;
        Ok(t)
    }

    /// Fallback tree: token 0 is the root, every other token hangs off it.
    pub fn flat(forms: &[String]) -> DepTree {
        let heads = (0..forms.len()).map(|i| if i == 0 { -1 } else { 0 }).collect();
        let labels = (0..forms.len()).map(|i| if i == 0 { "root" } else { "dep" }.to_string()).collect();
        DepTree {
            forms: forms.to_vec(),
            lemmas: forms.iter().map(|f| fallback_lemma(f)).collect(),
            heads,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.forms.len();
        if self.lemmas.len() != n || self.heads.len() != n || self.labels.len() != n {
            return Err(Error::DepFormat("column lengths differ".into()));
        }
        for (i, &h) in self.heads.iter().enumerate() {
            if h < -1 || h >= n as i64 {
                return Err(Error::DepFormat(alloc::format!("token {i}: head {h} out of range")));
            }
        }
        // every token must reach a root within n steps
        for start in 0..n {
            let mut at = start as i64;
            let mut steps = 0;
            while at != -1 {
                at = self.heads[at as usize];
                steps += 1;
                if steps > n {
                    return Err(Error::DepFormat(alloc::format!("cycle through token {start}")));
                }
            }
        }
        Ok(())
    }
}

/// Lowercased form with the longest of `-ing`, `-ed`, `-es`, `-s` removed
/// (keeping a stem of at least three characters).
pub fn fallback_lemma(form: &str) -> String {
    let lower = form.to_lowercase();
    for suffix in ["ing", "ed", "es", "s"] {
        if let Some(stem) = lower.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                return stem.to_string();
            }
        }
    }
    lower
}

/// Split on whitespace and detach trailing punctuation.
pub fn tokenize_sentence(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let trimmed = word.trim_end_matches(['.', ',', ';', ':', '!', '?', '"', '\'', ')']);
        let tail = &word[trimmed.len()..];
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
        out.extend(tail.chars().map(|c| c.to_string()));
    }
    out
}

/// Parse blank-line separated sentences of tab-separated rows.
///
/// Five columns are read as `index form lemma head deprel`; ten columns as
/// CoNLL-U. Indices are 1-based and head 0 marks the root.
pub fn read_dep_tsv(text: &str) -> Result<Vec<DepTree>> {
    let mut out = Vec::new();
    let mut rows: Vec<(String, String, i64, String)> = Vec::new();
    let flush = |rows: &mut Vec<(String, String, i64, String)>, out: &mut Vec<DepTree>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let (mut forms, mut lemmas, mut heads, mut labels) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (f, l, h, d) in rows.drain(..) {
            forms.push(f);
            lemmas.push(l);
            heads.push(h - 1);
            labels.push(d);
        }
        out.push(DepTree::new(forms, lemmas, heads, labels)?);
        Ok(())
    };
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut rows, &mut out)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (idx, form, lemma, head, rel) = match cols.len() {
            5 => (cols[0], cols[1], cols[2], cols[3], cols[4]),
            n if n >= 8 => (cols[0], cols[1], cols[2], cols[6], cols[7]),
            n => return Err(Error::DepFormat(alloc::format!("line {}: expected 5 or 10 columns, got {n}", ln + 1))),
        };
        // skip multiword ranges and empty nodes
        if idx.contains('-') || idx.contains('.') {
            continue;
        }
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::DepFormat(alloc::format!("line {}: bad index `{idx}`", ln + 1)))?;
        if idx != rows.len() + 1 {
            return Err(Error::DepFormat(alloc::format!("line {}: index {idx} out of sequence", ln + 1)));
        }
        let head: i64 = head
            .parse()
            .map_err(|_| Error::DepFormat(alloc::format!("line {}: bad head `{head}`", ln + 1)))?;
        let lemma = if lemma == "_" || lemma.is_empty() { fallback_lemma(form) } else { lemma.to_string() };
        rows.push((form.to_string(), lemma, head, rel.to_string()));
    }
    flush(&mut rows, &mut out)?;
    Ok(out)
}

/// DFS linearization emitting `( deprel form children )`; form tokens
/// point at their sentence index, structural tokens at -1.
pub fn linearize_dep(tree: &DepTree) -> Result<(Vec<String>, Vec<i32>)> {
    tree.validate()?;
    let n = tree.len();
    let mut children = alloc::vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (i, &h) in tree.heads.iter().enumerate() {
        if h < 0 {
            roots.push(i);
        } else {
            children[h as usize].push(i);
        }
    }
    let mut toks = Vec::new();
    let mut ptrs = Vec::new();
    fn visit(i: usize, tree: &DepTree, children: &[Vec<usize>], toks: &mut Vec<String>, ptrs: &mut Vec<i32>) {
        toks.push("(".into());
        ptrs.push(-1);
        toks.push(tree.labels[i].clone());
        ptrs.push(-1);
        toks.push(tree.forms[i].clone());
        ptrs.push(i as i32);
        for &c in &children[i] {
            visit(c, tree, children, toks, ptrs);
        }
        toks.push(")".into());
        ptrs.push(-1);
    }
    for r in roots {
        visit(r, tree, &children, &mut toks, &mut ptrs);
    }
    Ok((toks, ptrs))
}
