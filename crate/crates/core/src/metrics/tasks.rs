//! Task transforms feeding either Smatch or a plain set-F1.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::smatch::{smatch_triples, SmatchOptions};
use super::{prf_counts, Prf, ScoreVector, Task};
use crate::amr::{strip_sense, to_triples, AmrGraph, Triple, TripleKind, TOP_RELATION};

/// F1 over two sets with the empty-set convention.
pub fn set_f1<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Prf {
    let matched = pred.intersection(gold).count();
    prf_counts(matched, pred.len(), gold.len())
}

/// All 12 task scores with default search options.
pub fn evaluate_all(pred: &AmrGraph, gold: &AmrGraph) -> ScoreVector {
    evaluate_all_with(pred, gold, SmatchOptions::default())
}

pub fn evaluate_all_with(pred: &AmrGraph, gold: &AmrGraph, opts: SmatchOptions) -> ScoreVector {
    let mut out = ScoreVector::zeros();
    for task in Task::ALL {
        out.scores[task.index()] = score_task(task, pred, gold, opts);
    }
    out
}

fn score_task(task: Task, pred: &AmrGraph, gold: &AmrGraph, opts: SmatchOptions) -> Prf {
    let sm = |p: Vec<Triple>, g: Vec<Triple>| smatch_triples(&p, &g, opts);
    match task {
        Task::Smatch => sm(to_triples(pred), to_triples(gold)),
        Task::Unlabeled => sm(unlabeled(pred), unlabeled(gold)),
        Task::NoWsd => sm(no_wsd(pred), no_wsd(gold)),
        Task::Concepts => set_f1(&concepts(pred), &concepts(gold)),
        Task::NamedEnt => set_f1(&named_entities(pred), &named_entities(gold)),
        Task::Negations => set_f1(&negations(pred), &negations(gold)),
        Task::Wikification => set_f1(&wiki(pred), &wiki(gold)),
        Task::Reentrancies => sm(reentrancies(pred), reentrancies(gold)),
        Task::Srl => sm(srl(pred), srl(gold)),
        Task::Frames => set_f1(&frames(pred, false), &frames(gold, false)),
        Task::NsFrames => set_f1(&frames(pred, true), &frames(gold, true)),
        Task::IgnoreVars => set_f1(&ignore_vars(pred), &ignore_vars(gold)),
    }
}

fn unlabeled(g: &AmrGraph) -> Vec<Triple> {
    to_triples(g)
        .into_iter()
        .map(|mut t| {
            if t.kind != TripleKind::Instance && t.relation != TOP_RELATION {
                t.relation = "rel".into();
            }
            t
        })
        .collect()
}

fn no_wsd(g: &AmrGraph) -> Vec<Triple> {
    let mut g = g.clone();
    g.map_concepts(|c| strip_sense(c).0.to_string());
    to_triples(&g)
}

fn concepts(g: &AmrGraph) -> BTreeSet<String> {
    g.nodes().iter().map(|n| n.concept.clone()).collect()
}

fn named_entities(g: &AmrGraph) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for e in g.edges().iter().filter(|e| e.relation == "name") {
        let mut ops: Vec<(u32, &str)> = g
            .attributes()
            .iter()
            .filter(|a| a.source == e.target)
            .filter_map(|a| {
                let n = a.relation.strip_prefix("op")?.parse().ok()?;
                Some((n, a.value.as_str()))
            })
            .collect();
        ops.sort();
        let name = ops.iter().map(|(_, v)| *v).collect::<Vec<_>>().join(" ");
        out.insert((g.concept(&e.source).unwrap_or_default().to_string(), name));
    }
    out
}

fn negations(g: &AmrGraph) -> BTreeSet<String> {
    g.attributes()
        .iter()
        .filter(|a| a.relation == "polarity" && a.value == "-")
        .map(|a| g.concept(&a.source).unwrap_or_default().to_string())
        .collect()
}

fn wiki(g: &AmrGraph) -> BTreeSet<(String, String)> {
    g.attributes()
        .iter()
        .filter(|a| a.relation == "wiki")
        .map(|a| (g.concept(&a.source).unwrap_or_default().to_string(), a.value.clone()))
        .collect()
}

/// Selected edges plus the instance triples of every incident node.
fn edge_subgraph(g: &AmrGraph, keep: impl Fn(&crate::amr::Edge) -> bool) -> Vec<Triple> {
    let mut incident = BTreeSet::new();
    let mut rels = Vec::new();
    for e in g.edges().iter().filter(|e| keep(e)) {
        incident.insert(e.source.as_str());
        incident.insert(e.target.as_str());
        rels.push(Triple::new(TripleKind::Relation, &e.source, &e.relation, &e.target));
    }
    let mut out: Vec<Triple> = g
        .nodes()
        .iter()
        .filter(|n| incident.contains(n.var.as_str()))
        .map(|n| Triple::new(TripleKind::Instance, &n.var, "instance", &n.concept))
        .collect();
    out.extend(rels);
    out
}

fn reentrancies(g: &AmrGraph) -> Vec<Triple> {
    let deg: BTreeMap<String, usize> = g.in_degrees().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    edge_subgraph(g, |e| deg.get(&e.target).copied().unwrap_or(0) > 1)
}

fn is_arg_role(rel: &str) -> bool {
    matches!(rel.strip_prefix("ARG"), Some(d) if d.len() == 1 && d.as_bytes()[0].is_ascii_digit())
}

fn srl(g: &AmrGraph) -> Vec<Triple> {
    edge_subgraph(g, |e| is_arg_role(&e.relation))
}

fn frames(g: &AmrGraph, strip: bool) -> BTreeSet<String> {
    g.nodes()
        .iter()
        .filter_map(|n| {
            let (lemma, sense) = strip_sense(&n.concept);
            sense.map(|_| if strip { lemma.to_string() } else { n.concept.clone() })
        })
        .collect()
}

/// Relation, attribute and TOP triples with variables replaced by their
/// concepts. Instance triples are left out.
fn ignore_vars(g: &AmrGraph) -> BTreeSet<(String, String, String)> {
    let c = |v: &str| g.concept(v).unwrap_or_default().to_string();
    let mut out = BTreeSet::new();
    out.insert((TOP_RELATION.to_string(), c(g.root()), c(g.root())));
    for e in g.edges() {
        out.insert((e.relation.clone(), c(&e.source), c(&e.target)));
    }
    for a in g.attributes() {
        out.insert((a.relation.clone(), c(&a.source), a.value.clone()));
    }
    out
}
