use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::graph::{AmrGraph, Child};

/// Depth-first token sequence of `g`: brackets, relation labels, concepts
/// and constants. Children are visited in stored order; a re-entrant
/// mention emits only its variable.
pub fn linearize_dfs(g: &AmrGraph) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    visit(g, g.root(), &mut seen, &mut out);
    out
}

fn visit(g: &AmrGraph, var: &str, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
    seen.insert(var.to_string());
    out.push("(".into());
    out.push(g.concept(var).unwrap_or_default().to_string());
    for child in g.children(var) {
        match child {
            Child::Edge(e) => {
                out.push(e.surface_label());
                let target = e.surface_child();
                if seen.contains(target) {
                    out.push(target.to_string());
                } else {
                    visit(g, target, seen, out);
                }
            }
            Child::Attr(a) => {
                out.push(alloc::format!(":{}", a.relation));
                out.push(a.value.clone());
            }
        }
    }
    out.push(")".into());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    #[test]
    fn single_node() {
        let g = parse_penman("(a / asbestos)").unwrap();
        assert_eq!(linearize_dfs(&g), ["(", "asbestos", ")"]);
    }

    #[test]
    fn asbestos_gold_trace() {
        let g = parse_penman(
            "(a / asbestos :polarity - :time (n / now) :location (t / thing :ARG1-of (p / produce-01 :ARG0 (w / we))))",
        )
        .unwrap();
        let toks = linearize_dfs(&g);
        let want = [
            "(", "asbestos", ":polarity", "-", ":time", "(", "now", ")", ":location", "(", "thing", ":ARG1-of", "(",
            "produce-01", ":ARG0", "(", "we", ")", ")", ")", ")",
        ];
        assert_eq!(toks, want);
        assert!(toks.len() >= g.nodes().len() + g.edges().len());
    }

    #[test]
    fn reentrant_mention_is_bare_variable() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        let toks = linearize_dfs(&g);
        assert_eq!(toks.iter().filter(|t| *t == "b").count(), 1);
        assert_eq!(toks, linearize_dfs(&g));
    }
}
