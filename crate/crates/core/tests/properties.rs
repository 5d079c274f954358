use amrqe_core::amr::{parse_penman, serialize_penman, to_triples, AmrGraph};
use amrqe_core::apps::{pearson, percentiles};
use amrqe_core::datagen::{corrupt, gen_gold, ConceptPool, CorruptionSpec};
use amrqe_core::metrics::{evaluate_all, smatch_exhaustive};
use proptest::prelude::*;

fn graph(n: usize, seed: u64) -> AmrGraph {
    gen_gold(n, &ConceptPool::default(), seed).0
}

fn parse_of(g: &AmrGraph, severity: usize, seed: u64) -> AmrGraph {
    corrupt(g, &CorruptionSpec::uniform(severity, seed), &ConceptPool::default()).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penman_round_trip(n in 1usize..14, seed in any::<u64>()) {
        let g = graph(n, seed);
        let text = serialize_penman(&g);
        let back = parse_penman(&text).unwrap();
        let (mut a, mut b) = (to_triples(&g), to_triples(&back));
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(serialize_penman(&back), text);
    }

    #[test]
    fn smatch_ignores_variable_names(n in 2usize..6, severity in 0usize..5, seed in any::<u64>()) {
        let gold = graph(n, seed);
        let pred = parse_of(&gold, severity, seed ^ 1);
        let renamed = pred.rename_vars(|v| format!("x_{v}"));
        let a = smatch_exhaustive(&pred, &gold).unwrap();
        let b = smatch_exhaustive(&renamed, &gold).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall(n in 2usize..6, severity in 1usize..5, seed in any::<u64>()) {
        let gold = graph(n, seed);
        let pred = parse_of(&gold, severity, seed ^ 2);
        let ab = smatch_exhaustive(&pred, &gold).unwrap();
        let ba = smatch_exhaustive(&gold, &pred).unwrap();
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        prop_assert!((ab.recall - ba.precision).abs() < 1e-12);
    }

    #[test]
    fn all_scores_are_bounded(n in 1usize..12, severity in 0usize..8, seed in any::<u64>()) {
        let gold = graph(n, seed);
        let pred = parse_of(&gold, severity, seed ^ 3);
        for x in evaluate_all(&pred, &gold).to_array() {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 3..40),
        scale in 0.1f64..5.0,
        shift in -3.0f64..3.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
        if let Ok(r) = pearson(&xs, &ys) {
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let r2 = pearson(&moved, &ys).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((r - r2).abs() < 1e-9);
        }
    }

    #[test]
    fn percentiles_are_monotone(xs in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let qs: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
        let p = percentiles(&xs, &qs).unwrap();
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(p[0], lo);
        prop_assert_eq!(p[20], hi);
    }
}
