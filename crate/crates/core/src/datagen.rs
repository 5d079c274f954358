//! Synthetic corpus factory: random gold graphs with surrogate sentences
//! and graded corruptions that imitate parser errors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amr::{linearize_dfs, strip_sense, AmrGraph, Child};
use crate::metrics::{evaluate_all, ScoreVector};
use crate::preprocess::DepTree;

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "n", "r", "s", "l"];
const FILLERS: &[&str] = &["the", "a", "of", "is", "and", "to", "in", "that"];

const ARG_ROLES: &[&str] = &["ARG0", "ARG1", "ARG2", "ARG3"];
const OTHER_ROLES: &[&str] = &["mod", "time", "location", "manner", "poss", "purpose", "domain", "topic"];

/// Mix a base seed with an index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Zipf-distributed pool of made-up lemmas.
#[derive(Debug, Clone)]
pub struct ConceptPool {
    lemmas: Vec<String>,
    cdf: Vec<f64>,
}

impl ConceptPool {
    pub fn synthetic(size: usize) -> ConceptPool {
        let mut lemmas = Vec::with_capacity(size);
        let mut seen = BTreeSet::new();
        let mut i = 0usize;
        while lemmas.len() < size {
            let a = i % ONSETS.len();
            let b = (i / ONSETS.len()) % VOWELS.len();
            let c = (i / (ONSETS.len() * VOWELS.len())) % ONSETS.len();
            let d = (i / (ONSETS.len() * VOWELS.len() * ONSETS.len())) % VOWELS.len();
            let e = i % CODAS.len();
            let w = format!("{}{}{}{}{}", ONSETS[a], VOWELS[b], ONSETS[c], VOWELS[d], CODAS[e]);
            if seen.insert(w.clone()) {
                lemmas.push(w);
            }
            i += 7;
        }
        let weights: Vec<f64> = (1..=size).map(|r| 1.0 / r as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        ConceptPool { lemmas, cdf }
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn lemmas(&self) -> &[String] {
        &self.lemmas
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> &str {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|&c| c < u).min(self.lemmas.len() - 1);
        &self.lemmas[i]
    }
}

impl Default for ConceptPool {
    fn default() -> Self {
        ConceptPool::synthetic(300)
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn concept_for<R: Rng>(pool: &ConceptPool, rng: &mut R) -> String {
    let lemma = pool.sample(rng);
    if rng.gen_bool(0.2) {
        format!("{lemma}-{:02}", rng.gen_range(1..=3))
    } else {
        lemma.to_string()
    }
}

/// Random connected gold graph with `n_nodes` content nodes (plus name
/// nodes for named entities) and its surrogate sentence.
pub fn gen_gold(n_nodes: usize, pool: &ConceptPool, seed: u64) -> (AmrGraph, Vec<String>) {
    let n_nodes = n_nodes.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let var = |i: usize| format!("v{i}");
    let mut g = AmrGraph::new(var(0), concept_for(pool, &mut rng)).expect("fresh graph");
    for i in 1..n_nodes {
        g.add_node(var(i), concept_for(pool, &mut rng)).expect("fresh var");
        let parent = rng.gen_range(0..i);
        if rng.gen_bool(0.55) {
            let role = *ARG_ROLES.choose(&mut rng).unwrap();
            if rng.gen_bool(0.15) {
                g.add_inverse_edge(&var(i), role, &var(parent)).unwrap();
            } else {
                g.add_edge(&var(parent), role, &var(i)).unwrap();
            }
        } else {
            let role = *OTHER_ROLES.choose(&mut rng).unwrap();
            g.add_edge(&var(parent), role, &var(i)).unwrap();
        }
    }
    if n_nodes >= 3 {
        let extra = crate::math::ceil((n_nodes - 1) as f64 * rng.gen_range(0.05..0.15)) as usize;
        for _ in 0..extra {
            for _attempt in 0..8 {
                let s = rng.gen_range(0..n_nodes);
                let t = rng.gen_range(1..n_nodes);
                let exists = g
                    .edges()
                    .iter()
                    .any(|e| (e.source == var(s) && e.target == var(t)) || (e.source == var(t) && e.target == var(s)));
                if s != t && !exists {
                    let role = *ARG_ROLES.choose(&mut rng).unwrap();
                    g.add_edge(&var(s), role, &var(t)).unwrap();
                    break;
                }
            }
        }
    }
    if rng.gen_bool(0.35) {
        let v = var(rng.gen_range(0..n_nodes));
        g.add_attribute(&v, "polarity", "-", false).unwrap();
    }
    if rng.gen_bool(0.35) {
        let v = var(rng.gen_range(0..n_nodes));
        let words: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| capitalize(pool.sample(&mut rng))).collect();
        if rng.gen_bool(0.8) {
            g.add_attribute(&v, "wiki", &words.join("_"), true).unwrap();
        }
        let nv = format!("n{n_nodes}");
        g.add_node(nv.clone(), "name").unwrap();
        g.add_edge(&v, "name", &nv).unwrap();
        for (k, w) in words.iter().enumerate() {
            g.add_attribute(&nv, &format!("op{}", k + 1), w, true).unwrap();
        }
    }
    let sentence = surrogate_sentence(&g, &mut rng);
    (g, sentence)
}

/// Concept lemmas in DFS order, name strings in place of `name` nodes,
/// `not` for negation, with filler words sprinkled in.
fn surrogate_sentence<R: Rng>(g: &AmrGraph, rng: &mut R) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![g.root().to_string()];
    let mut order = Vec::new();
    while let Some(v) = stack.pop() {
        if !seen.insert(v.clone()) {
            continue;
        }
        order.push(v.clone());
        for c in g.children(&v).iter().rev() {
            if let Child::Edge(e) = c {
                stack.push(e.surface_child().to_string());
            }
        }
    }
    for v in order {
        if rng.gen_bool(0.3) {
            out.push(FILLERS.choose(rng).unwrap().to_string());
        }
        let concept = g.concept(&v).unwrap_or_default();
        if concept == "name" {
            for a in g.attributes().iter().filter(|a| a.source == v && a.relation.starts_with("op")) {
                out.push(a.value.clone());
            }
            continue;
        }
        if g.attributes().iter().any(|a| a.source == v && a.relation == "polarity") {
            out.push("not".into());
        }
        out.push(strip_sense(concept).0.to_string());
    }
    out.push(".".into());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CorruptionOp {
    DeleteEdge,
    RelabelEdge,
    SubstituteConcept,
    FlipSense,
    DropNegation,
    DeleteSubtree,
    SwapWiki,
    BreakReentrancy,
}

impl CorruptionOp {
    pub const ALL: [CorruptionOp; 8] = [
        CorruptionOp::DeleteEdge,
        CorruptionOp::RelabelEdge,
        CorruptionOp::SubstituteConcept,
        CorruptionOp::FlipSense,
        CorruptionOp::DropNegation,
        CorruptionOp::DeleteSubtree,
        CorruptionOp::SwapWiki,
        CorruptionOp::BreakReentrancy,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub ops: Vec<CorruptionOp>,
    pub severity: usize,
    pub seed: u64,
}

impl CorruptionSpec {
    /// Every op, `severity` applications.
    pub fn uniform(severity: usize, seed: u64) -> Self {
        CorruptionSpec { ops: CorruptionOp::ALL.to_vec(), severity, seed }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorruptionReport {
    pub applied: usize,
    pub skipped: usize,
}

/// Apply `spec.severity` random ops from `spec.ops`. Ops that do not apply
/// to the current graph are skipped and counted.
pub fn corrupt(g: &AmrGraph, spec: &CorruptionSpec, pool: &ConceptPool) -> (AmrGraph, CorruptionReport) {
    let mut out = g.clone();
    let mut report = CorruptionReport::default();
    if spec.ops.is_empty() {
        report.skipped = spec.severity;
        return (out, report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut fresh = 0usize;
    for _ in 0..spec.severity {
        let op = *spec.ops.choose(&mut rng).unwrap();
        if apply(&mut out, op, pool, &mut rng, &mut fresh) {
            report.applied += 1;
        } else {
            report.skipped += 1;
        }
    }
    (out, report)
}

fn apply(g: &mut AmrGraph, op: CorruptionOp, pool: &ConceptPool, rng: &mut ChaCha8Rng, fresh: &mut usize) -> bool {
    match op {
        CorruptionOp::DeleteEdge => {
            if g.edges().is_empty() {
                return false;
            }
            let i = rng.gen_range(0..g.edges().len());
            g.remove_edge(i);
            g.prune_unreachable();
            true
        }
        CorruptionOp::RelabelEdge => {
            if g.edges().is_empty() {
                return false;
            }
            let i = rng.gen_range(0..g.edges().len());
            let old = g.edges()[i].relation.clone();
            let pick = loop {
                let r = if rng.gen_bool(0.5) { ARG_ROLES } else { OTHER_ROLES };
                let r = *r.choose(rng).unwrap();
                if r != old {
                    break r;
                }
            };
            g.edges_mut()[i].relation = pick.into();
            true
        }
        CorruptionOp::SubstituteConcept => {
            let candidates: Vec<String> =
                g.nodes().iter().filter(|n| n.concept != "name").map(|n| n.var.clone()).collect();
            let Some(v) = candidates.choose(rng) else { return false };
            let old = g.concept(v).unwrap_or_default().to_string();
            let new = loop {
                let c = concept_for(pool, rng);
                if c != old {
                    break c;
                }
            };
            g.set_concept(v, new);
            true
        }
        CorruptionOp::FlipSense => {
            let candidates: Vec<(String, String, String)> = g
                .nodes()
                .iter()
                .filter_map(|n| {
                    let (lemma, sense) = strip_sense(&n.concept);
                    sense.map(|s| (n.var.clone(), lemma.to_string(), s.to_string()))
                })
                .collect();
            let Some((v, lemma, sense)) = candidates.choose(rng) else { return false };
            let old: u32 = sense.parse().unwrap_or(1);
            let mut new = rng.gen_range(1..=4);
            if new == old {
                new = old % 4 + 1;
            }
            g.set_concept(v, format!("{lemma}-{new:02}"));
            true
        }
        CorruptionOp::DropNegation => {
            let idx: Vec<usize> = g
                .attributes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.relation == "polarity")
                .map(|(i, _)| i)
                .collect();
            let Some(&i) = idx.choose(rng) else { return false };
            g.remove_attribute(i);
            true
        }
        CorruptionOp::DeleteSubtree => {
            let root = g.root().to_string();
            let candidates: Vec<String> = g.nodes().iter().filter(|n| n.var != root).map(|n| n.var.clone()).collect();
            let Some(v) = candidates.choose(rng).cloned() else { return false };
            while let Some(i) = g.edges().iter().position(|e| e.surface_child() == v) {
                g.remove_edge(i);
            }
            g.prune_unreachable();
            true
        }
        CorruptionOp::SwapWiki => {
            let idx: Vec<usize> = g
                .attributes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.relation == "wiki")
                .map(|(i, _)| i)
                .collect();
            let Some(&i) = idx.choose(rng) else { return false };
            let old = g.attributes()[i].value.clone();
            let new = loop {
                let w = capitalize(pool.sample(rng));
                if w != old {
                    break w;
                }
            };
            g.attributes_mut()[i].value = new;
            true
        }
        CorruptionOp::BreakReentrancy => {
            let deg = g.in_degrees();
            let targets: Vec<String> =
                deg.iter().filter(|(_, &d)| d > 1).map(|(v, _)| v.to_string()).collect();
            let Some(t) = targets.choose(rng).cloned() else { return false };
            // re-point the last incoming edge at a fresh copy of the node
            let Some(i) = g.edges().iter().rposition(|e| e.target == t && !e.inverted) else { return false };
            let concept = g.concept(&t).unwrap_or_default().to_string();
            let copy = loop {
                *fresh += 1;
                let c = format!("c{fresh}");
                if g.node_index(&c).is_none() {
                    break c;
                }
            };
            g.add_node(copy.clone(), concept).unwrap();
            let e = g.remove_edge(i);
            g.add_edge(&e.source, &e.relation, &copy).unwrap();
            // the removed edge may have been the only surface path to `t`
            g.prune_unreachable();
            true
        }
    }
}

/// One simulated parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub corruption: CorruptionSpec,
}

impl SystemSpec {
    pub fn with_severity(name: impl Into<String>, severity: usize) -> Self {
        SystemSpec { name: name.into(), corruption: CorruptionSpec::uniform(severity, 0) }
    }
}

#[derive(Debug, Clone)]
pub struct GoldEntry {
    pub id: String,
    pub graph: AmrGraph,
    pub sentence: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub sentence_id: String,
    pub system: String,
    pub sentence: Vec<String>,
    pub parse: AmrGraph,
    pub deps: DepTree,
    pub targets: ScoreVector,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub golds: Vec<GoldEntry>,
    /// Sentence-major: all systems for sentence 0, then sentence 1, ...
    pub instances: Vec<Instance>,
    pub systems: Vec<String>,
    /// Mean gold Smatch F1 per system, aligned with `systems`.
    pub system_avg_f1: Vec<f64>,
}

/// Content-node counts drawn per sentence.
pub const NODE_RANGE: core::ops::RangeInclusive<usize> = 3..=10;

/// Gold graphs, one corrupted parse per system and sentence, and the
/// 36 gold scores of each parse.
pub fn gen_training_corpus(n_sentences: usize, systems: &[SystemSpec], seed: u64) -> SyntheticCorpus {
    let pool = ConceptPool::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut golds = Vec::with_capacity(n_sentences);
    let mut instances = Vec::with_capacity(n_sentences * systems.len());
    let mut sums = alloc::vec![0.0; systems.len()];
    for s in 0..n_sentences {
        let n = rng.gen_range(NODE_RANGE);
        let gseed = derive_seed(seed, 2 * s as u64);
        let (gold, sentence) = gen_gold(n, &pool, gseed);
        let id = format!("s{s}");
        for (k, sys) in systems.iter().enumerate() {
            let spec = CorruptionSpec {
                seed: derive_seed(derive_seed(seed, 2 * s as u64 + 1), k as u64 ^ sys.corruption.seed),
                ..sys.corruption.clone()
            };
            let (parse, _) = corrupt(&gold, &spec, &pool);
            let targets = evaluate_all(&parse, &gold);
            sums[k] += targets.smatch_f1();
            instances.push(Instance {
                sentence_id: id.clone(),
                system: sys.name.clone(),
                sentence: sentence.clone(),
                deps: DepTree::flat(&sentence),
                parse,
                targets,
            });
        }
        golds.push(GoldEntry { id, graph: gold, sentence });
    }
    let denom = n_sentences.max(1) as f64;
    SyntheticCorpus {
        golds,
        instances,
        systems: systems.iter().map(|s| s.name.clone()).collect(),
        system_avg_f1: sums.into_iter().map(|x| x / denom).collect(),
    }
}

/// Number of tokens the DFS linearization of `g` produces.
pub fn linearized_len(g: &AmrGraph) -> usize {
    linearize_dfs(g).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::{parse_penman, serialize_penman, to_triples};
    use crate::metrics::Task;

    #[test]
    fn pool_is_distinct_and_zipfian() {
        let pool = ConceptPool::default();
        assert_eq!(pool.len(), 300);
        let distinct: BTreeSet<&String> = pool.lemmas().iter().collect();
        assert_eq!(distinct.len(), 300);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let head = (0..2000).filter(|_| pool.sample(&mut rng) == pool.lemmas()[0]).count();
        assert!(head > 150, "rank-1 lemma drawn {head} times");
    }

    #[test]
    fn single_node_gold() {
        let pool = ConceptPool::default();
        for seed in 0..20 {
            let (g, s) = gen_gold(1, &pool, seed);
            let named = g.nodes().len() == 2;
            if !named {
                assert_eq!(g.nodes().len(), 1);
                assert_eq!(to_triples(&g).len(), 2 + g.attributes().len());
            }
            assert!(!s.is_empty());
            g.validate().unwrap();
        }
    }

    #[test]
    fn generation_is_seeded() {
        let pool = ConceptPool::default();
        let a = gen_gold(8, &pool, 42);
        let b = gen_gold(8, &pool, 42);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_ne!(gen_gold(8, &pool, 43).0, a.0);
    }

    #[test]
    fn generated_graphs_round_trip() {
        let pool = ConceptPool::default();
        for seed in 0..200 {
            let (g, _) = gen_gold(1 + (seed as usize % 12), &pool, seed);
            g.validate().unwrap();
            let back = parse_penman(&serialize_penman(&g)).unwrap();
            let mut a = to_triples(&g);
            let mut b = to_triples(&back);
            a.sort();
            b.sort();
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn zero_severity_is_identity() {
        let pool = ConceptPool::default();
        let (g, _) = gen_gold(7, &pool, 5);
        let (c, r) = corrupt(&g, &CorruptionSpec::uniform(0, 9), &pool);
        assert_eq!(c, g);
        assert_eq!(r, CorruptionReport::default());
        assert!(evaluate_all(&c, &g).to_array().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn inapplicable_ops_are_counted() {
        let pool = ConceptPool::default();
        let g = parse_penman("(a / x)").unwrap();
        let spec = CorruptionSpec { ops: alloc::vec![CorruptionOp::DropNegation, CorruptionOp::DeleteEdge], severity: 5, seed: 1 };
        let (c, r) = corrupt(&g, &spec, &pool);
        assert_eq!(c, g);
        assert_eq!(r, CorruptionReport { applied: 0, skipped: 5 });
    }

    #[test]
    fn deleting_every_edge_lowers_recall() {
        let pool = ConceptPool::default();
        let (g, _) = gen_gold(6, &pool, 11);
        let spec = CorruptionSpec { ops: alloc::vec![CorruptionOp::DeleteEdge], severity: 50, seed: 3 };
        let (c, _) = corrupt(&g, &spec, &pool);
        assert!(c.edges().is_empty());
        c.validate().unwrap();
        assert!(evaluate_all(&c, &g).get(Task::Smatch).recall < 1.0);
    }

    #[test]
    fn corrupted_graphs_stay_valid() {
        let pool = ConceptPool::default();
        for seed in 0..200u64 {
            let (g, _) = gen_gold(2 + seed as usize % 10, &pool, seed);
            let (c, _) = corrupt(&g, &CorruptionSpec::uniform(1 + seed as usize % 8, seed), &pool);
            c.validate().unwrap();
            parse_penman(&serialize_penman(&c)).unwrap();
        }
    }

    #[test]
    fn corpus_shape_and_system_order() {
        let systems = [1, 3, 6].map(|s| SystemSpec::with_severity(format!("sys{s}"), s));
        let corpus = gen_training_corpus(60, &systems, 7);
        assert_eq!(corpus.instances.len(), 180);
        let f = &corpus.system_avg_f1;
        assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
        for inst in corpus.instances.iter().take(9) {
            let gold = &corpus.golds.iter().find(|g| g.id == inst.sentence_id).unwrap().graph;
            assert_eq!(evaluate_all(&inst.parse, gold), inst.targets);
        }
    }
}
