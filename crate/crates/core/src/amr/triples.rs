use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::AmrGraph;

pub const TOP_RELATION: &str = "top";
pub const INSTANCE_RELATION: &str = "instance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TripleKind {
    Instance,
    Attribute,
    Relation,
}

/// The unit Smatch counts. For relations `target` is a variable, otherwise
/// it is a concept or constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub kind: TripleKind,
    pub source: String,
    pub relation: String,
    pub target: String,
}

impl Triple {
    pub fn new(kind: TripleKind, source: &str, relation: &str, target: &str) -> Self {
        Triple {
            kind,
            source: source.to_string(),
            relation: relation.to_string(),
            target: target.to_string(),
        }
    }
}

/// Triple set of `g`: instances in node order, the TOP triple, relations,
/// then attributes. Duplicates are dropped.
pub fn to_triples(g: &AmrGraph) -> Vec<Triple> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |t: Triple| {
        if seen.insert(t.clone()) {
            out.push(t);
        }
    };
    for n in g.nodes() {
        push(Triple::new(TripleKind::Instance, &n.var, INSTANCE_RELATION, &n.concept));
    }
    push(Triple::new(TripleKind::Attribute, g.root(), TOP_RELATION, g.root_concept()));
    for e in g.edges() {
        push(Triple::new(TripleKind::Relation, &e.source, &e.relation, &e.target));
    }
    for a in g.attributes() {
        push(Triple::new(TripleKind::Attribute, &a.source, &a.relation, &a.value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    #[test]
    fn asbestos_gold_has_eleven_triples() {
        let g = parse_penman(
            "(a / asbestos :polarity - :time (n / now) :location (t / thing :ARG1-of (p / produce-01 :ARG0 (w / we))))",
        )
        .unwrap();
        let ts = to_triples(&g);
        assert_eq!(ts.len(), 11);
        let count = |k| ts.iter().filter(|t| t.kind == k).count();
        assert_eq!(count(TripleKind::Instance), 5);
        assert_eq!(count(TripleKind::Relation), 4);
        assert_eq!(count(TripleKind::Attribute), 2);
        assert!(ts.contains(&Triple::new(TripleKind::Relation, "p", "ARG1", "t")));
        assert!(ts.contains(&Triple::new(TripleKind::Attribute, "a", "top", "asbestos")));
    }

    #[test]
    fn single_node_has_two_triples() {
        let g = parse_penman("(a / asbestos)").unwrap();
        assert_eq!(to_triples(&g).len(), 2);
    }

    #[test]
    fn renaming_commutes_with_triples() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        let renamed = g.rename_vars(|v| alloc::format!("x_{v}"));
        let mapped: Vec<Triple> = to_triples(&g)
            .into_iter()
            .map(|mut t| {
                t.source = alloc::format!("x_{}", t.source);
                if t.kind == TripleKind::Relation {
                    t.target = alloc::format!("x_{}", t.target);
                }
                t
            })
            .collect();
        assert_eq!(to_triples(&renamed), mapped);
    }
}
