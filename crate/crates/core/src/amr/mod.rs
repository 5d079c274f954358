//! AMR graphs: data model, PENMAN text codec, triples and linearization.

mod graph;
mod linearize;
mod penman;
mod triples;

pub use graph::{AmrGraph, Attribute, Child, Edge, Node};
pub use linearize::linearize_dfs;
pub use penman::{parse_penman, serialize_penman, ParseError, ParseErrorKind};
pub use triples::{to_triples, Triple, TripleKind, TOP_RELATION};

/// Relations ending in `-of` that are not inverses of another relation.
const NON_INVERSE_OF: &[&str] = &["consist-of", "prep-out-of", "prep-on-behalf-of"];

/// Split a surface role (without the leading colon) into its normalized
/// label and whether it was written inverted.
pub fn normalize_role(role: &str) -> (&str, bool) {
    if let Some(stripped) = role.strip_suffix("-of") {
        if !stripped.is_empty() && !NON_INVERSE_OF.contains(&role) {
            return (stripped, true);
        }
    }
    (role, false)
}

/// Strip a trailing PropBank sense suffix (`-NN`, two or more digits).
pub fn strip_sense(concept: &str) -> (&str, Option<&str>) {
    if let Some(pos) = concept.rfind('-') {
        let (lemma, suffix) = (&concept[..pos], &concept[pos + 1..]);
        if !lemma.is_empty() && suffix.len() >= 2 && suffix.bytes().all(|b| b.is_ascii_digit()) {
            return (lemma, Some(suffix));
        }
    }
    (concept, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_normalization() {
        assert_eq!(normalize_role("ARG1-of"), ("ARG1", true));
        assert_eq!(normalize_role("ARG1"), ("ARG1", false));
        assert_eq!(normalize_role("consist-of"), ("consist-of", false));
        assert_eq!(normalize_role("-of"), ("-of", false));
    }

    #[test]
    fn sense_suffix() {
        assert_eq!(strip_sense("produce-01"), ("produce", Some("01")));
        assert_eq!(strip_sense("look-over-06"), ("look-over", Some("06")));
        assert_eq!(strip_sense("asbestos"), ("asbestos", None));
        assert_eq!(strip_sense("co-2"), ("co-2", None));
        assert_eq!(strip_sense("-01"), ("-01", None));
    }
}
