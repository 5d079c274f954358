//! Smatch: triple overlap under the best injective variable mapping.
//!
//! The mapping search is greedy hill-climbing started from a
//! concept-seeded mapping and from `restarts` random mappings. An
//! exhaustive search over all injective mappings is kept alongside as the
//! ground truth for small graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{prf_counts, Prf};
use crate::amr::{to_triples, AmrGraph, Triple, TripleKind};
use crate::{Error, Result};

/// Largest smaller-side variable count accepted by [`smatch_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmatchOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SmatchOptions {
    fn default() -> Self {
        SmatchOptions { restarts: 4, seed: 0 }
    }
}

/// Partial injective map from candidate variables to gold variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableMapping {
    pairs: BTreeMap<String, String>,
}

impl VariableMapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a pair; fails if either side is already mapped.
    pub fn insert(&mut self, pred: &str, gold: &str) -> Result<()> {
        if self.pairs.contains_key(pred) || self.pairs.values().any(|g| g == gold) {
            return Err(Error::InvalidArgument(alloc::format!("mapping {pred} -> {gold} is not injective")));
        }
        self.pairs.insert(pred.into(), gold.into());
        Ok(())
    }

    pub fn get(&self, pred: &str) -> Option<&str> {
        self.pairs.get(pred).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

/// Number of predicted triples that become gold triples after mapping
/// their variable positions through `m`.
pub fn match_count(pred: &[Triple], gold: &[Triple], m: &VariableMapping) -> usize {
    let gold: BTreeSet<&Triple> = gold.iter().collect();
    let pred: BTreeSet<&Triple> = pred.iter().collect();
    pred.into_iter()
        .filter(|t| {
            let Some(src) = m.get(&t.source) else { return false };
            let target = match t.kind {
                TripleKind::Relation => match m.get(&t.target) {
                    Some(v) => v,
                    None => return false,
                },
                _ => t.target.as_str(),
            };
            gold.contains(&Triple::new(t.kind, src, &t.relation, target))
        })
        .count()
}

/// Index-encoded matching problem between two triple sets.
pub(crate) struct Problem {
    n_left: usize,
    n_right: usize,
    left_triples: usize,
    right_triples: usize,
    /// `unary[i * n_right + j]`: single-variable triples of `i` that match
    /// those of `j` when `i -> j`.
    unary: Vec<u32>,
    left_rels: Vec<(u32, usize, usize)>,
    right_rels: BTreeSet<(u32, usize, usize)>,
    /// Left relation indices touching each left variable.
    touching: Vec<Vec<usize>>,
}

fn variables(triples: &[Triple]) -> Vec<&str> {
    let mut vars: Vec<&str> = Vec::new();
    for t in triples {
        if !vars.contains(&t.source.as_str()) {
            vars.push(&t.source);
        }
        if t.kind == TripleKind::Relation && !vars.contains(&t.target.as_str()) {
            vars.push(&t.target);
        }
    }
    vars
}

fn dedup(triples: &[Triple]) -> Vec<Triple> {
    let mut seen = BTreeSet::new();
    triples.iter().filter(|t| seen.insert(*t)).cloned().collect()
}

impl Problem {
    pub(crate) fn new(left: &[Triple], right: &[Triple]) -> Problem {
        let left = dedup(left);
        let right = dedup(right);
        let lv = variables(&left);
        let rv = variables(&right);
        let lidx = |v: &str| lv.iter().position(|x| *x == v).unwrap();
        let ridx = |v: &str| rv.iter().position(|x| *x == v).unwrap();

        let mut labels: BTreeMap<String, u32> = BTreeMap::new();
        let mut label = |s: &str| {
            let n = labels.len() as u32;
            *labels.entry(s.into()).or_insert(n)
        };

        let mut right_single: Vec<(usize, &str, &str)> = Vec::new();
        let mut right_rels = BTreeSet::new();
        for t in &right {
            if t.kind == TripleKind::Relation {
                right_rels.insert((label(&t.relation), ridx(&t.source), ridx(&t.target)));
            } else {
                right_single.push((ridx(&t.source), &t.relation, &t.target));
            }
        }
        let n_left = lv.len();
        let n_right = rv.len();
        let mut unary = vec![0u32; n_left * n_right];
        let mut left_rels = Vec::new();
        let mut touching = vec![Vec::new(); n_left];
        for t in &left {
            if t.kind == TripleKind::Relation {
                let (a, b) = (lidx(&t.source), lidx(&t.target));
                let k = left_rels.len();
                left_rels.push((label(&t.relation), a, b));
                touching[a].push(k);
                if b != a {
                    touching[b].push(k);
                }
            } else {
                let i = lidx(&t.source);
                for &(j, rel, tgt) in &right_single {
                    if rel == t.relation && tgt == t.target {
                        unary[i * n_right + j] += 1;
                    }
                }
            }
        }
        Problem {
            n_left,
            n_right,
            left_triples: left.len(),
            right_triples: right.len(),
            unary,
            left_rels,
            right_rels,
            touching,
        }
    }

    fn unary(&self, i: usize, j: Option<usize>) -> u32 {
        j.map_or(0, |j| self.unary[i * self.n_right + j])
    }

    fn rel_hit(&self, k: usize, m: &[Option<usize>]) -> u32 {
        let (l, a, b) = self.left_rels[k];
        match (m[a], m[b]) {
            (Some(x), Some(y)) => self.right_rels.contains(&(l, x, y)) as u32,
            _ => 0,
        }
    }

    pub(crate) fn score(&self, m: &[Option<usize>]) -> u32 {
        let u: u32 = (0..self.n_left).map(|i| self.unary(i, m[i])).sum();
        let r: u32 = (0..self.left_rels.len()).map(|k| self.rel_hit(k, m)).sum();
        u + r
    }

    /// Score contribution of everything touching the variables in `vars`.
    fn local(&self, vars: &[usize], m: &[Option<usize>]) -> u32 {
        let mut s: u32 = vars.iter().map(|&i| self.unary(i, m[i])).sum();
        let mut ks: Vec<usize> = vars.iter().flat_map(|&i| self.touching[i].iter().copied()).collect();
        ks.sort_unstable();
        ks.dedup();
        s += ks.into_iter().map(|k| self.rel_hit(k, m)).sum::<u32>();
        s
    }

    fn climb(&self, m: &mut [Option<usize>]) -> u32 {
        let mut score = self.score(m);
        loop {
            let mut used = vec![false; self.n_right];
            for j in m.iter().flatten() {
                used[*j] = true;
            }
            let mut best_gain = 0i64;
            let mut best_move: Option<(usize, Move)> = None;
            for i in 0..self.n_left {
                let before = self.local(&[i], m) as i64;
                let old = m[i];
                for (j, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
                    m[i] = Some(j);
                    let gain = self.local(&[i], m) as i64 - before;
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some((i, Move::Assign(j)));
                    }
                }
                m[i] = old;
                for k in i + 1..self.n_left {
                    if m[i] == m[k] {
                        continue;
                    }
                    let before = self.local(&[i, k], m) as i64;
                    m.swap(i, k);
                    let gain = self.local(&[i, k], m) as i64 - before;
                    m.swap(i, k);
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some((i, Move::Swap(k)));
                    }
                }
            }
            match best_move {
                None => return score,
                Some((i, Move::Assign(j))) => m[i] = Some(j),
                Some((i, Move::Swap(k))) => m.swap(i, k),
            }
            score += best_gain as u32;
        }
    }

    fn seeded(&self) -> Vec<Option<usize>> {
        // prefer partners whose single-variable triples (the instance)
        // agree; lowest gold index wins
        let mut used = vec![false; self.n_right];
        let mut m = vec![None; self.n_left];
        for (i, slot) in m.iter_mut().enumerate() {
            let best = (0..self.n_right)
                .filter(|&j| !used[j] && self.unary(i, Some(j)) > 0)
                .max_by_key(|&j| (self.unary(i, Some(j)), core::cmp::Reverse(j)));
            if let Some(j) = best {
                used[j] = true;
                *slot = Some(j);
            }
        }
        m
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let mut slots: Vec<Option<usize>> = (0..self.n_right).map(Some).collect();
        while slots.len() < self.n_left {
            slots.push(None);
        }
        slots.shuffle(rng);
        slots.truncate(self.n_left);
        slots
    }

    pub(crate) fn hill_climb(&self, opts: SmatchOptions) -> (u32, Vec<Option<usize>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best = self.seeded();
        let mut best_score = self.climb(&mut best);
        for _ in 0..opts.restarts {
            if best_score as usize == self.left_triples.min(self.right_triples) {
                break;
            }
            let mut m = self.random(&mut rng);
            let s = self.climb(&mut m);
            if s > best_score {
                best_score = s;
                best = m;
            }
        }
        (best_score, best)
    }

    /// Exact optimum over injective mappings of the left variables.
    /// Requires `n_left <= n_right`.
    pub(crate) fn exhaustive(&self) -> u32 {
        debug_assert!(self.n_left <= self.n_right);
        let max_unary: Vec<u32> = (0..self.n_left)
            .map(|i| (0..self.n_right).map(|j| self.unary(i, Some(j))).max().unwrap_or(0))
            .collect();
        let mut m = vec![None; self.n_left];
        let mut used = vec![false; self.n_right];
        let mut best = 0;
        self.search(0, &mut m, &mut used, &max_unary, &mut best);
        best
    }

    fn search(&self, i: usize, m: &mut [Option<usize>], used: &mut [bool], max_unary: &[u32], best: &mut u32) {
        if i == self.n_left {
            *best = (*best).max(self.score(m));
            return;
        }
        // optimistic bound: assigned part is exact for closed relations,
        // every open relation and remaining unary is assumed to hit
        let assigned: u32 = (0..i).map(|a| self.unary(a, m[a])).sum();
        let mut rels = 0;
        for (k, &(_, a, b)) in self.left_rels.iter().enumerate() {
            if a < i && b < i {
                rels += self.rel_hit(k, m);
            } else {
                rels += 1;
            }
        }
        let rest: u32 = max_unary[i..].iter().sum();
        if assigned + rels + rest <= *best {
            return;
        }
        for j in 0..self.n_right {
            if used[j] {
                continue;
            }
            used[j] = true;
            m[i] = Some(j);
            self.search(i + 1, m, used, max_unary, best);
            m[i] = None;
            used[j] = false;
        }
    }
}

#[derive(Clone, Copy)]
enum Move {
    Assign(usize),
    Swap(usize),
}

/// Smatch between two triple sets using hill-climbing.
pub fn smatch_triples(pred: &[Triple], gold: &[Triple], opts: SmatchOptions) -> Prf {
    let p = Problem::new(pred, gold);
    if p.left_triples == 0 || p.right_triples == 0 {
        return prf_counts(0, p.left_triples, p.right_triples);
    }
    let (best, _) = p.hill_climb(opts);
    prf_counts(best as usize, p.left_triples, p.right_triples)
}

/// Smatch between two graphs, hill-climbing with `restarts` random restarts.
pub fn smatch(pred: &AmrGraph, gold: &AmrGraph, restarts: usize, seed: u64) -> Result<Prf> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    Ok(smatch_triples(&to_triples(pred), &to_triples(gold), SmatchOptions { restarts, seed }))
}

/// Exact Smatch by enumerating every injective mapping of the smaller
/// variable set into the larger one.
pub fn smatch_exhaustive(pred: &AmrGraph, gold: &AmrGraph) -> Result<Prf> {
    smatch_exhaustive_triples(&to_triples(pred), &to_triples(gold))
}

pub(crate) fn smatch_exhaustive_triples(pred: &[Triple], gold: &[Triple]) -> Result<Prf> {
    let forward = Problem::new(pred, gold);
    let (n_pred, n_gold) = (forward.left_triples, forward.right_triples);
    let small = forward.n_left.min(forward.n_right);
    if small > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(alloc::format!(
            "{small} variables on the smaller side, limit is {EXHAUSTIVE_LIMIT}"
        )));
    }
    if n_pred == 0 || n_gold == 0 {
        return Ok(prf_counts(0, n_pred, n_gold));
    }
    // matched pairs are symmetric, so search from the smaller side
    let best = if forward.n_left <= forward.n_right {
        forward.exhaustive()
    } else {
        Problem::new(gold, pred).exhaustive()
    };
    Ok(prf_counts(best as usize, n_pred, n_gold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    const GOLD: &str = "(a / asbestos :polarity - :time (n / now) :location (t / thing :ARG1-of (p / produce-01 :ARG0 (w / we))))";
    const GPLA: &str = "(a / asbestos :time (n / now) :polarity - :location (p / product :poss (w / we)))";
    const JAMR: &str = "(a / asbesto :polarity - :ARG1 (w / we :ARG1-of (p / product :mod (n / now))))";
    const CAMR: &str = "(a / asbestos :polarity - :location (p / product) :time (n / now))";

    fn g(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn asbestos_candidates_smatch() {
        let gold = g(GOLD);
        for (text, f1) in [(GPLA, 0.70), (JAMR, 0.30), (CAMR, 0.67)] {
            let got = smatch(&g(text), &gold, 4, 0).unwrap();
            assert!((got.f1 - f1).abs() < 0.005, "{text}: {got:?}");
            let exact = smatch_exhaustive(&g(text), &gold).unwrap();
            assert_eq!(got, exact);
        }
    }

    #[test]
    fn gpla_best_mapping_matches_seven() {
        let mut m = VariableMapping::new();
        for (p, q) in [("a", "a"), ("n", "n"), ("p", "t"), ("w", "w")] {
            m.insert(p, q).unwrap();
        }
        let pred = to_triples(&g(GPLA));
        let gold = to_triples(&g(GOLD));
        assert_eq!(match_count(&pred, &gold, &m), 7);
        assert_eq!(match_count(&gold, &gold, &identity(&g(GOLD))), gold.len());
    }

    fn identity(g: &AmrGraph) -> VariableMapping {
        let mut m = VariableMapping::new();
        for n in g.nodes() {
            m.insert(&n.var, &n.var).unwrap();
        }
        m
    }

    #[test]
    fn mapping_must_be_injective() {
        let mut m = VariableMapping::new();
        m.insert("a", "x").unwrap();
        assert!(m.insert("b", "x").is_err());
        assert!(m.insert("a", "y").is_err());
    }

    #[test]
    fn disjoint_vocabularies_match_nothing() {
        let p = to_triples(&g("(x / cat :mod (y / big))"));
        let q = to_triples(&g("(a / dog :quant (b / few))"));
        let mut m = VariableMapping::new();
        m.insert("x", "a").unwrap();
        m.insert("y", "b").unwrap();
        assert_eq!(match_count(&p, &q, &m), 0);
    }

    #[test]
    fn identity_scores_one() {
        let gold = g(GOLD);
        assert_eq!(smatch(&gold, &gold, 1, 3).unwrap(), Prf::ONE);
        assert_eq!(smatch_exhaustive(&g("(a / x)"), &g("(b / x)")).unwrap(), Prf::ONE);
    }

    #[test]
    fn zero_restarts_rejected() {
        assert!(smatch(&g("(a / x)"), &g("(a / x)"), 0, 0).is_err());
    }

    #[test]
    fn exhaustive_refuses_large_graphs() {
        let mut s = alloc::string::String::from("(v0 / c");
        for i in 1..10 {
            s.push_str(&alloc::format!(" :r (v{i} / c)"));
        }
        s.push(')');
        let big = g(&s);
        assert!(matches!(smatch_exhaustive(&big, &big), Err(Error::TooLarge(_))));
        // smaller side decides
        assert!(smatch_exhaustive(&big, &g("(a / c)")).is_ok());
    }

    #[test]
    fn empty_triple_sets() {
        assert_eq!(smatch_triples(&[], &[], SmatchOptions::default()), Prf::ONE);
        let t = to_triples(&g("(a / x)"));
        assert_eq!(smatch_triples(&t, &[], SmatchOptions::default()), Prf::ZERO);
    }

    #[test]
    fn self_loops_are_matched() {
        let p = g("(a / x :r a)");
        let q = g("(b / x :r b)");
        assert_eq!(smatch(&p, &q, 1, 0).unwrap(), Prf::ONE);
        assert_eq!(smatch_exhaustive(&p, &q).unwrap(), Prf::ONE);
    }
}
