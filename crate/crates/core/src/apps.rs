//! Correlation analysis, per-sentence parse selection, system ranking
//! with significance tests, and distribution summaries.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amr::AmrGraph;
use crate::datagen::derive_seed;
use crate::math::{exp, powf, sqrt, student_t_two_sided};
use crate::metrics::{Prf, ScoreVector, SCORE_DIM};
use crate::{Error, Result};

/// Pearson's correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("pearson: {} vs {} values", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Pearson between predicted and gold values of each of the 36 scores;
/// `None` where a column is constant.
pub fn correlation_table(pred: &[ScoreVector], gold: &[ScoreVector]) -> Result<Vec<Option<f64>>> {
    if pred.len() != gold.len() {
        return Err(Error::Shape(format!("{} predictions vs {} gold vectors", pred.len(), gold.len())));
    }
    let p: Vec<_> = pred.iter().map(ScoreVector::to_array).collect();
    let g: Vec<_> = gold.iter().map(ScoreVector::to_array).collect();
    let mut out = Vec::with_capacity(SCORE_DIM);
    for j in 0..SCORE_DIM {
        let x: Vec<f64> = p.iter().map(|r| r[j]).collect();
        let y: Vec<f64> = g.iter().map(|r| r[j]).collect();
        out.push(match pearson(&x, &y) {
            Ok(r) => Some(r),
            Err(Error::UndefinedCorrelation(_)) => None,
            Err(e) => return Err(e),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub system: String,
    /// `None` when the parser output could not be read.
    pub parse: Option<AmrGraph>,
    pub predicted: ScoreVector,
    pub gold: Option<ScoreVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub sentence_id: String,
    pub candidates: Vec<Candidate>,
}

/// Dev-set average Smatch F1 per system.
pub type SystemPrior = BTreeMap<String, f64>;

/// Index of the best candidate by `key`, ties to the smallest system name.
fn argbest(cands: &[Candidate], key: impl Fn(&Candidate) -> f64, maximize: bool) -> usize {
    let mut best = 0;
    for (i, c) in cands.iter().enumerate().skip(1) {
        let (a, b) = (key(c), key(&cands[best]));
        let better = if maximize { a > b } else { a < b };
        if better || (a == b && c.system < cands[best].system) {
            best = i;
        }
    }
    best
}

/// Index of the candidate with the highest predicted Smatch F1 plus the
/// system prior (0 for systems without one).
pub fn select_parse_index(cs: &CandidateSet, prior: Option<&SystemPrior>) -> Result<usize> {
    if cs.candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    let bonus = |c: &Candidate| prior.and_then(|p| p.get(&c.system)).copied().unwrap_or(0.0);
    Ok(argbest(&cs.candidates, |c| c.predicted.smatch_f1() + bonus(c), true))
}

pub fn select_parse<'a>(cs: &'a CandidateSet, prior: Option<&SystemPrior>) -> Result<&'a str> {
    Ok(&cs.candidates[select_parse_index(cs, prior)?].system)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub sentence_id: String,
    pub system: String,
    pub predicted_f1: f64,
    /// Absent when no reference is available.
    pub gold_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub sentences: usize,
    /// Mean gold Smatch PRF of the selected parses.
    pub selected: Prf,
    /// Expected Smatch PRF of a uniformly random choice.
    pub random: Prf,
    pub lower: Prf,
    pub upper: Prf,
    /// Mean per-sentence Pearson between predicted and gold Smatch F1.
    pub mean_rho: Option<f64>,
    pub scored: usize,
    /// Sentences left out of `mean_rho` because a side was constant.
    pub skipped: usize,
    /// Percentage of scored sentences with positive correlation.
    pub pct_pos: Option<f64>,
    pub selections: Vec<Selection>,
}

#[derive(Default)]
struct PrfMean {
    p: f64,
    r: f64,
    f: f64,
}

impl PrfMean {
    fn add(&mut self, x: Prf, w: f64) {
        self.p += w * x.precision;
        self.r += w * x.recall;
        self.f += w * x.f1;
    }

    fn finish(self, n: usize) -> Prf {
        let n = n as f64;
        Prf { precision: self.p / n, recall: self.r / n, f1: self.f / n }
    }
}

/// Selection quality against the gold scores, bracketed by the random
/// baseline and the worst/best oracle choices.
pub fn ranking_report(sets: &[CandidateSet], prior: Option<&SystemPrior>) -> Result<RankingReport> {
    if sets.is_empty() {
        return Err(Error::Empty("candidate corpus"));
    }
    let (mut sel, mut rnd, mut lo, mut hi) = (PrfMean::default(), PrfMean::default(), PrfMean::default(), PrfMean::default());
    let (mut rho_sum, mut scored, mut skipped, mut pos) = (0.0, 0usize, 0usize, 0usize);
    let mut selections = Vec::with_capacity(sets.len());
    for cs in sets {
        let gold = |c: &Candidate| -> Result<Prf> {
            c.gold
                .map(|g| g.scores[0])
                .ok_or_else(|| Error::InvalidArgument(format!("sentence {}: no gold scores for {}", cs.sentence_id, c.system)))
        };
        let golds = cs.candidates.iter().map(gold).collect::<Result<Vec<_>>>()?;
        let pick = select_parse_index(cs, prior)?;
        sel.add(golds[pick], 1.0);
        let w = 1.0 / golds.len() as f64;
        golds.iter().for_each(|g| rnd.add(*g, w));
        let key = |c: &Candidate| c.gold.map_or(0.0, |g| g.smatch_f1());
        lo.add(golds[argbest(&cs.candidates, key, false)], 1.0);
        hi.add(golds[argbest(&cs.candidates, key, true)], 1.0);
        let x: Vec<f64> = cs.candidates.iter().map(|c| c.predicted.smatch_f1()).collect();
        let y: Vec<f64> = golds.iter().map(|g| g.f1).collect();
        match pearson(&x, &y) {
            Ok(r) => {
                rho_sum += r;
                scored += 1;
                pos += usize::from(r > 0.0);
            }
            Err(_) => skipped += 1,
        }
        selections.push(Selection {
            sentence_id: cs.sentence_id.clone(),
            system: cs.candidates[pick].system.clone(),
            predicted_f1: x[pick],
            gold_f1: Some(y[pick]),
        });
    }
    let n = sets.len();
    Ok(RankingReport {
        sentences: n,
        selected: sel.finish(n),
        random: rnd.finish(n),
        lower: lo.finish(n),
        upper: hi.finish(n),
        mean_rho: (scored > 0).then(|| rho_sum / scored as f64),
        scored,
        skipped,
        pct_pos: (scored > 0).then(|| 100.0 * pos as f64 / scored as f64),
        selections,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRank {
    pub system: String,
    pub mean_f1: f64,
    /// 1 is best.
    pub rank: usize,
}

/// Rank systems by descending mean predicted Smatch F1, ties by name.
pub fn rank_systems(per_system: &[(String, Vec<f64>)]) -> Result<Vec<SystemRank>> {
    let Some((_, first)) = per_system.first() else {
        return Err(Error::Empty("system list"));
    };
    if first.is_empty() {
        return Err(Error::Empty("system predictions"));
    }
    if let Some((name, v)) = per_system.iter().find(|(_, v)| v.len() != first.len()) {
        return Err(Error::Shape(format!("system {name} has {} predictions, expected {}", v.len(), first.len())));
    }
    let mut rows: Vec<SystemRank> = per_system
        .iter()
        .map(|(s, v)| SystemRank { system: s.clone(), mean_f1: v.iter().sum::<f64>() / v.len() as f64, rank: 0 })
        .collect();
    rows.sort_by(|a, b| b.mean_f1.total_cmp(&a.mean_f1).then_with(|| a.system.cmp(&b.system)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub rho: f64,
    /// Two-sided t-test probability of no correlation.
    pub p1: f64,
    /// Share of random rankings correlating at least as well.
    pub p2: f64,
    pub trials: u64,
}

/// Permutation trials run per independently seeded shard.
pub const SHARD_TRIALS: u64 = 10_000;

const RHO_TOL: f64 = 1e-12;

/// Two-sided t-test p-value for a Pearson correlation over `n` pairs.
pub fn correlation_p_value(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let t = rho * sqrt(df / (1.0 - rho * rho));
    student_t_two_sided(t, df)
}

/// Number of random permutations of `pred_rank` (out of `trials`) whose
/// correlation with `true_rank` reaches `observed`. Shard `index` of a
/// run seeded with `seed` always draws the same permutations.
pub fn permutation_shard(pred_rank: &[f64], true_rank: &[f64], observed: f64, trials: u64, seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index));
    let mut perm = pred_rank.to_vec();
    let mut hits = 0;
    for _ in 0..trials {
        perm.shuffle(&mut rng);
        if pearson(&perm, true_rank).is_ok_and(|r| r >= observed - RHO_TOL) {
            hits += 1;
        }
    }
    hits
}

/// Shard sizes for `trials` permutations.
pub fn shard_plan(trials: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = trials;
    while left > 0 {
        let n = left.min(SHARD_TRIALS);
        out.push(n);
        left -= n;
    }
    out
}

pub fn check_ranks(pred_rank: &[f64], true_rank: &[f64]) -> Result<()> {
    if pred_rank.len() != true_rank.len() {
        return Err(Error::Shape(format!("{} predicted vs {} true ranks", pred_rank.len(), true_rank.len())));
    }
    if pred_rank.len() < 3 {
        return Err(Error::InvalidArgument("significance needs at least 3 systems".into()));
    }
    Ok(())
}

/// Correlation of two rankings with its t-test and permutation p-values.
pub fn rank_significance(pred_rank: &[f64], true_rank: &[f64], trials: u64, seed: u64) -> Result<Significance> {
    check_ranks(pred_rank, true_rank)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let rho = pearson(pred_rank, true_rank)?;
    let hits: u64 = shard_plan(trials)
        .iter()
        .enumerate()
        .map(|(i, &n)| permutation_shard(pred_rank, true_rank, rho, n, seed, i as u64))
        .sum();
    Ok(Significance { rho, p1: correlation_p_value(rho, pred_rank.len()), p2: hits as f64 / trials as f64, trials })
}

/// Linear-interpolation percentiles (`qs` in [0, 100]).
pub fn percentiles(scores: &[f64], qs: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if let Some(q) = qs.iter().find(|q| !(0.0..=100.0).contains(*q)) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let last = (s.len() - 1) as f64;
    Ok(qs
        .iter()
        .map(|q| {
            let pos = q / 100.0 * last;
            let lo = pos as usize;
            let hi = (lo + 1).min(s.len() - 1);
            let frac = pos - lo as f64;
            s[lo] + frac * (s[hi] - s[lo])
        })
        .collect())
}

/// Scott's-rule bandwidth `σ̂ · n^(-1/5)` with the sample deviation.
pub fn scott_bandwidth(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument("density needs at least 2 scores".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Err(Error::InvalidArgument("scores have zero variance; use a histogram instead".into()));
    }
    Ok(sqrt(var) * powf(n, -0.2))
}

/// Gaussian kernel density estimate evaluated at each grid point.
pub fn kde_scott(scores: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = scott_bandwidth(scores)?;
    let norm = 1.0 / (scores.len() as f64 * h * sqrt(2.0 * core::f64::consts::PI));
    Ok(grid
        .iter()
        .map(|&x| {
            norm * scores
                .iter()
                .map(|&s| {
                    let z = (x - s) / h;
                    exp(-0.5 * z * z)
                })
                .sum::<f64>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::Rng;

    fn sv(f1: f64) -> ScoreVector {
        ScoreVector::all(Prf { precision: f1, recall: f1, f1 })
    }

    fn cand(system: &str, pred: f64, gold: f64) -> Candidate {
        Candidate { system: system.to_string(), parse: None, predicted: sv(pred), gold: Some(sv(gold)) }
    }

    fn set(id: &str, c: Vec<Candidate>) -> CandidateSet {
        CandidateSet { sentence_id: id.to_string(), candidates: c }
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 4.0, 7.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-15);
        let z: Vec<f64> = x.iter().map(|v| 3.0 * v + 2.0).collect();
        let w = [0.5, 0.1, 0.9, 0.3];
        assert!((pearson(&z, &w).unwrap() - pearson(&x, &w).unwrap()).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn selection_rules() {
        let one = set("s", vec![cand("A", 0.2, 0.5)]);
        assert_eq!(select_parse(&one, None).unwrap(), "A");
        let tie = set("s", vec![cand("B", 0.5, 0.0), cand("A", 0.5, 0.0)]);
        assert_eq!(select_parse(&tie, None).unwrap(), "A");
        let prior: SystemPrior = [("A".to_string(), 0.8), ("B".to_string(), 0.6)].into();
        let tie = set("s", vec![cand("B", 0.5, 0.0), cand("A", 0.5, 0.0)]);
        assert_eq!(select_parse(&tie, Some(&prior)).unwrap(), "A");
        let close = set("s", vec![cand("B", 0.7, 0.0), cand("A", 0.6, 0.0)]);
        assert_eq!(select_parse(&close, None).unwrap(), "B");
        assert_eq!(select_parse(&close, Some(&prior)).unwrap(), "A");
        assert!(select_parse(&set("s", vec![]), None).is_err());
    }

    #[test]
    fn report_bounds_and_perfect_predictor() {
        let sets = vec![
            set("1", vec![cand("A", 0.9, 0.9), cand("B", 0.2, 0.2), cand("C", 0.5, 0.5)]),
            set("2", vec![cand("A", 0.1, 0.1), cand("B", 0.6, 0.6), cand("C", 0.3, 0.3)]),
        ];
        let r = ranking_report(&sets, None).unwrap();
        assert_eq!(r.selected, r.upper);
        assert_eq!(r.pct_pos, Some(100.0));
        assert!((r.upper.f1 - 0.75).abs() < 1e-12);
        assert!((r.lower.f1 - 0.15).abs() < 1e-12);
        assert!((r.random.f1 - (1.6 / 3.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.mean_rho, Some(1.0));

        let flat = vec![set("1", vec![cand("B", 0.4, 0.9), cand("A", 0.4, 0.2)])];
        let r = ranking_report(&flat, None).unwrap();
        assert_eq!(r.selections[0].system, "A");
        assert_eq!((r.scored, r.skipped, r.mean_rho), (0, 1, None));
    }

    #[test]
    fn prior_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let cs = set("s", ["A", "B", "C"].iter().map(|s| cand(s, rng.gen(), 0.0)).collect());
            let mut prior: SystemPrior = ["A", "B", "C"].iter().map(|s| (s.to_string(), rng.gen::<f64>())).collect();
            let before = select_parse(&cs, Some(&prior)).unwrap().to_string();
            *prior.get_mut(&before).unwrap() += rng.gen::<f64>();
            assert_eq!(select_parse(&cs, Some(&prior)).unwrap(), before);
        }
    }

    #[test]
    fn system_ranking() {
        let rows = vec![
            ("x".to_string(), vec![0.4, 0.7]),
            ("y".to_string(), vec![0.9, 0.9]),
            ("w".to_string(), vec![0.6, 0.6]),
        ];
        let r = rank_systems(&rows).unwrap();
        let names: Vec<_> = r.iter().map(|s| s.system.as_str()).collect();
        assert_eq!(names, ["y", "w", "x"]);
        let scaled: Vec<_> = rows.iter().map(|(s, v)| (s.clone(), v.iter().map(|x| 3.0 * x - 1.0).collect())).collect();
        let again: Vec<_> = rank_systems(&scaled).unwrap().into_iter().map(|s| s.system).collect();
        assert_eq!(again, names);
        assert!(rank_systems(&[("a".into(), vec![1.0]), ("b".into(), vec![])]).is_err());
    }

    #[test]
    fn significance_edge_cases() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        let s = rank_significance(&r, &r, 20_000, 1).unwrap();
        assert_eq!((s.rho, s.p1), (1.0, 0.0));
        // identity is one of 120 permutations
        assert!((s.p2 - 1.0 / 120.0).abs() < 0.003);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert!((rank_significance(&rev, &r, 100, 1).unwrap().rho + 1.0).abs() < 1e-15);
        assert!(rank_significance(&[1.0, 2.0], &[2.0, 1.0], 10, 0).is_err());
        assert_eq!(shard_plan(25_000), vec![10_000, 10_000, 5_000]);
    }

    #[test]
    fn percentile_values() {
        assert_eq!(percentiles(&[0.0, 1.0], &[50.0]).unwrap(), vec![0.5]);
        assert_eq!(percentiles(&[0.3; 5], &[0.0, 17.0, 100.0]).unwrap(), vec![0.3; 3]);
        assert_eq!(percentiles(&[4.0, 1.0, 3.0, 2.0], &[0.0, 100.0, 50.0]).unwrap(), vec![1.0, 4.0, 2.5]);
        assert!(percentiles(&[1.0], &[101.0]).is_err());
        assert!(percentiles(&[], &[1.0]).is_err());
    }

    #[test]
    fn kde_properties() {
        let data = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 / 10.0).collect();
        let d = kde_scott(&data, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((d[i] - d[grid.len() - 1 - i]).abs() < 1e-12);
        }
        let doubled: Vec<f64> = data.iter().map(|x| 2.0 * x).collect();
        let grid2: Vec<f64> = grid.iter().map(|x| 2.0 * x).collect();
        let d2 = kde_scott(&doubled, &grid2).unwrap();
        for (a, b) in d.iter().zip(&d2) {
            assert!((a / 2.0 - b).abs() < 1e-12);
        }
        assert!(kde_scott(&[0.5, 0.5], &grid).is_err());
    }
}
