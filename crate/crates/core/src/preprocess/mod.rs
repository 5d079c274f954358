//! Turn (sentence, AMR graph, dependency tree) into the regressor's
//! integer-encoded input sequences.

mod dep;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use dep::{fallback_lemma, linearize_dep, read_dep_tsv, tokenize_sentence, DepTree};

use crate::amr::{linearize_dfs, strip_sense, AmrGraph};
use crate::{Error, Result};

pub const PAD: &str = "<pad>";
pub const OOV: &str = "<oov>";
pub const NEG: &str = "<neg>";
pub const NUM: &str = "<num>";

pub const PAD_ID: u32 = 0;
pub const OOV_ID: u32 = 1;
pub const NEG_ID: u32 = 2;
pub const NUM_ID: u32 = 3;
/// Pointer id used for -1 (no sentence position).
pub const NO_POINTER_ID: u32 = 2;
/// Sense id used for tokens without a sense.
pub const NO_SENSE_ID: u32 = 2;

pub const DEFAULT_MAX_LEN: usize = 256;

fn is_number(tok: &str) -> bool {
    let t = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    if t.is_empty() || !t.as_bytes()[0].is_ascii_digit() {
        return false;
    }
    let mut seen_dot = false;
    let mut prev_digit = false;
    for c in t.chars() {
        match c {
            '0'..='9' => prev_digit = true,
            ',' if prev_digit && !seen_dot => prev_digit = false,
            '.' if prev_digit && !seen_dot => {
                seen_dot = true;
                prev_digit = false;
            }
            _ => return false,
        }
    }
    prev_digit || (seen_dot && t.ends_with('.'))
}

/// Replace the negation constant by NEG and numeric strings by NUM.
pub fn special_tokens(tokens: &[String]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            if t == "-" {
                NEG.to_string()
            } else if is_number(t) {
                NUM.to_string()
            } else {
                t.clone()
            }
        })
        .collect()
}

/// Remove PropBank sense suffixes, returning the numeric sense per token
/// (0 when there is none).
pub fn strip_senses(tokens: &[String]) -> (Vec<String>, Vec<u16>) {
    tokens
        .iter()
        .map(|t| {
            if t.starts_with(':') {
                return (t.clone(), 0);
            }
            match strip_sense(t) {
                (lemma, Some(sense)) => (lemma.to_string(), sense.parse().unwrap_or(0)),
                (lemma, None) => (lemma.to_string(), 0),
            }
        })
        .unzip()
}

fn is_structural(tok: &str) -> bool {
    tok == "(" || tok == ")" || tok.starts_with(':') || tok == NEG || tok == NUM
}

/// For each token, the first not yet consumed sentence position whose
/// lowercased form or lemma equals the lowercased (sense-stripped) token.
/// Structural tokens and unmatched tokens get -1.
pub fn align_pointers(tokens: &[String], forms: &[String], lemmas: &[String]) -> Vec<i32> {
    let forms: Vec<String> = forms.iter().map(|f| f.to_lowercase()).collect();
    let lemmas: Vec<String> = lemmas.iter().map(|l| l.to_lowercase()).collect();
    let mut used = alloc::vec![false; forms.len()];
    tokens
        .iter()
        .map(|t| {
            if is_structural(t) {
                return -1;
            }
            let key = strip_sense(t).0.to_lowercase();
            let hit = (0..forms.len()).find(|&i| !used[i] && (forms[i] == key || lemmas.get(i) == Some(&key)));
            match hit {
                Some(i) => {
                    used[i] = true;
                    i as i32
                }
                None => -1,
            }
        })
        .collect()
}

/// Parallel input streams for one (sentence, parse) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedInput {
    pub amr_tokens: Vec<String>,
    pub amr_pointers: Vec<i32>,
    pub amr_senses: Vec<u16>,
    pub dep_tokens: Vec<String>,
    pub dep_pointers: Vec<i32>,
    /// Sentence forms with their own positions, used when the dependency
    /// stream is switched off.
    pub sent_tokens: Vec<String>,
    pub sent_pointers: Vec<i32>,
}

impl LinearizedInput {
    pub fn validate(&self) -> Result<()> {
        let n = self.sent_tokens.len() as i32;
        let ok_ptr = |p: &i32| *p == -1 || (0..n).contains(p);
        if self.amr_tokens.len() != self.amr_pointers.len() || self.amr_tokens.len() != self.amr_senses.len() {
            return Err(Error::Shape("AMR streams differ in length".into()));
        }
        if self.dep_tokens.len() != self.dep_pointers.len() || self.sent_tokens.len() != self.sent_pointers.len() {
            return Err(Error::Shape("dependency streams differ in length".into()));
        }
        if !self.amr_pointers.iter().chain(&self.dep_pointers).chain(&self.sent_pointers).all(ok_ptr) {
            return Err(Error::Shape("pointer outside the sentence".into()));
        }
        Ok(())
    }
}

/// Full preprocessing pipeline for one instance.
pub fn linearize_input(graph: &AmrGraph, deps: &DepTree) -> Result<LinearizedInput> {
    let raw = linearize_dfs(graph);
    let (stripped, senses) = strip_senses(&raw);
    let amr_tokens = special_tokens(&stripped);
    let amr_pointers = align_pointers(&amr_tokens, &deps.forms, &deps.lemmas);
    let (dep_tokens, dep_pointers) = linearize_dep(deps)?;
    Ok(LinearizedInput {
        amr_tokens,
        amr_pointers,
        amr_senses: senses,
        dep_tokens,
        dep_pointers,
        sent_tokens: deps.forms.clone(),
        sent_pointers: (0..deps.len() as i32).collect(),
    })
}

/// Id tables. Tokens are shared by the AMR and dependency streams, as are
/// pointers; senses have their own table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabTables", into = "VocabTables")]
pub struct Vocab {
    pub tokens: Vec<String>,
    pub senses: Vec<u16>,
    pub max_len: usize,
    token_index: BTreeMap<String, u32>,
    sense_index: BTreeMap<u16, u32>,
}

/// Serialized form of [`Vocab`]: id-ordered lists only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabTables {
    pub tokens: Vec<String>,
    pub senses: Vec<u16>,
    pub max_len: usize,
}

impl TryFrom<VocabTables> for Vocab {
    type Error = Error;

    fn try_from(t: VocabTables) -> Result<Self> {
        Vocab::from_parts(t.tokens, t.senses, t.max_len)
    }
}

impl From<Vocab> for VocabTables {
    fn from(v: Vocab) -> Self {
        VocabTables { tokens: v.tokens, senses: v.senses, max_len: v.max_len }
    }
}

impl Vocab {
    /// Rebuild lookup tables from id-ordered lists. Ids 0..4 of `tokens`
    /// must be the reserved entries.
    pub fn from_parts(tokens: Vec<String>, senses: Vec<u16>, max_len: usize) -> Result<Self> {
        if tokens.len() < 4 || tokens[..4] != [PAD, OOV, NEG, NUM] {
            return Err(Error::InvalidArgument("token table must start with <pad> <oov> <neg> <num>".into()));
        }
        let token_index: BTreeMap<String, u32> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        if token_index.len() != tokens.len() {
            return Err(Error::InvalidArgument("duplicate token in vocabulary".into()));
        }
        let sense_index = senses.iter().enumerate().map(|(i, s)| (*s, i as u32 + 3)).collect();
        Ok(Vocab { tokens, senses, max_len, token_index, sense_index })
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// PAD, OOV, "-1", then positions 0..max_len.
    pub fn pointer_count(&self) -> usize {
        3 + self.max_len
    }

    /// PAD, OOV, no-sense, then the seen senses.
    pub fn sense_count(&self) -> usize {
        3 + self.senses.len()
    }

    pub fn token_id(&self, tok: &str) -> u32 {
        match tok {
            NEG => NEG_ID,
            NUM => NUM_ID,
            _ => self.token_index.get(tok).copied().unwrap_or(OOV_ID),
        }
    }

    pub fn pointer_id(&self, p: i32) -> u32 {
        match p {
            -1 => NO_POINTER_ID,
            p if p >= 0 && (p as usize) < self.max_len => 3 + p as u32,
            _ => OOV_ID,
        }
    }

    pub fn sense_id(&self, s: u16) -> u32 {
        if s == 0 {
            NO_SENSE_ID
        } else {
            self.sense_index.get(&s).copied().unwrap_or(OOV_ID)
        }
    }
}

/// Count tokens over both streams; keep those seen at least `min_freq`
/// times. Ids follow descending frequency, ties broken alphabetically.
pub fn build_vocab(corpus: &[LinearizedInput], min_freq: usize, max_len: usize) -> Result<Vocab> {
    if corpus.is_empty() {
        return Err(Error::Empty("vocabulary corpus"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut senses: BTreeMap<u16, usize> = BTreeMap::new();
    for inst in corpus {
        for t in inst.amr_tokens.iter().chain(&inst.dep_tokens) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for &s in inst.amr_senses.iter().filter(|&&s| s != 0) {
            *senses.entry(s).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq.max(1) && ![PAD, OOV, NEG, NUM].contains(t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens: Vec<String> = [PAD, OOV, NEG, NUM].iter().map(|s| s.to_string()).collect();
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Vocab::from_parts(tokens, senses.into_keys().collect(), max_len)
}

/// One integer-encoded instance, right-truncated and padded to `max_len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedInput {
    pub amr_tokens: Vec<u32>,
    pub amr_pointers: Vec<u32>,
    pub amr_senses: Vec<u32>,
    pub amr_len: usize,
    pub dep_tokens: Vec<u32>,
    pub dep_pointers: Vec<u32>,
    pub dep_len: usize,
    pub sent_tokens: Vec<u32>,
    pub sent_pointers: Vec<u32>,
    pub sent_len: usize,
}

fn fit(ids: impl Iterator<Item = u32>, max_len: usize) -> (Vec<u32>, usize) {
    let mut v: Vec<u32> = ids.take(max_len).collect();
    let len = v.len();
    v.resize(max_len, PAD_ID);
    (v, len)
}

pub fn encode(input: &LinearizedInput, vocab: &Vocab, max_len: usize) -> EncodedInput {
    let (amr_tokens, amr_len) = fit(input.amr_tokens.iter().map(|t| vocab.token_id(t)), max_len);
    let (amr_pointers, _) = fit(input.amr_pointers.iter().map(|&p| vocab.pointer_id(p)), max_len);
    let (amr_senses, _) = fit(input.amr_senses.iter().map(|&s| vocab.sense_id(s)), max_len);
    let (dep_tokens, dep_len) = fit(input.dep_tokens.iter().map(|t| vocab.token_id(t)), max_len);
    let (dep_pointers, _) = fit(input.dep_pointers.iter().map(|&p| vocab.pointer_id(p)), max_len);
    let (sent_tokens, sent_len) = fit(input.sent_tokens.iter().map(|t| vocab.token_id(t)), max_len);
    let (sent_pointers, _) = fit(input.sent_pointers.iter().map(|&p| vocab.pointer_id(p)), max_len);
    EncodedInput {
        amr_tokens,
        amr_pointers,
        amr_senses,
        amr_len,
        dep_tokens,
        dep_pointers,
        dep_len,
        sent_tokens,
        sent_pointers,
        sent_len,
    }
}

/// Inverse of [`encode`] for in-vocabulary, in-length inputs.
pub fn decode(enc: &EncodedInput, vocab: &Vocab) -> LinearizedInput {
    let tok = |ids: &[u32], n: usize| -> Vec<String> {
        ids[..n]
            .iter()
            .map(|&i| match i {
                NEG_ID => "-".to_string(),
                _ => vocab.tokens.get(i as usize).cloned().unwrap_or_else(|| OOV.to_string()),
            })
            .collect()
    };
    let ptr = |ids: &[u32], n: usize| -> Vec<i32> {
        ids[..n].iter().map(|&i| if i == NO_POINTER_ID { -1 } else { i as i32 - 3 }).collect()
    };
    let sense = |ids: &[u32], n: usize| -> Vec<u16> {
        ids[..n]
            .iter()
            .map(|&i| if i < 3 { 0 } else { vocab.senses[i as usize - 3] })
            .collect()
    };
    LinearizedInput {
        amr_tokens: tok(&enc.amr_tokens, enc.amr_len),
        amr_pointers: ptr(&enc.amr_pointers, enc.amr_len),
        amr_senses: sense(&enc.amr_senses, enc.amr_len),
        dep_tokens: tok(&enc.dep_tokens, enc.dep_len),
        dep_pointers: ptr(&enc.dep_pointers, enc.dep_len),
        sent_tokens: tok(&enc.sent_tokens, enc.sent_len),
        sent_pointers: ptr(&enc.sent_pointers, enc.sent_len),
    }
}
