use hiercluster::hierarchy::default_labels;
use hiercluster::noiseless::{insertion_clustering, partition_round, quick_clustering, SiblingSearch};
use hiercluster::oracles::{pivot_query, true_sibling};
use hiercluster::{BinaryHierarchy, ExactOracle, OrdinalOracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn each_pivot_keeps_the_sibling_and_halves_the_candidates(n in 3usize..80, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = BinaryHierarchy::random(n, &mut rng).unwrap();
        let labels = default_labels(n);
        let x = labels[rng.gen_range(0..n)].clone();
        let rest: Vec<_> = labels.into_iter().filter(|e| *e != x).collect();
        let partial = truth.induced(&rest).unwrap();
        let sibling = true_sibling(&truth, &partial, &x).unwrap();
        let mut o = ExactOracle::new(truth);
        let mut s = SiblingSearch::new(&partial, x.clone()).unwrap();
        prop_assert!(s.candidates().contains(sibling));
        while let Some(v) = s.pending_pivot() {
            let before = s.candidates().len();
            s.observe(&partial, pivot_query(&mut o, &partial, v, &x).unwrap()).unwrap();
            prop_assert!(s.candidates().contains(sibling));
            prop_assert!(s.candidates().len() <= before.div_ceil(2));
        }
        prop_assert_eq!(s.result(), Some(sibling));
    }

    #[test]
    fn both_algorithms_recover_the_truth(n in 1usize..120, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = default_labels(n);
        let truth = if n == 1 { BinaryHierarchy::leaf(labels[0].clone()) } else { BinaryHierarchy::random(n, &mut rng).unwrap() };
        let mut o = ExactOracle::new(truth.clone());
        let (t, per) = insertion_clustering(&labels, &mut o).unwrap();
        prop_assert!(t.equivalent(&truth).unwrap());
        prop_assert_eq!(per.iter().sum::<u64>(), o.queries_used());
        prop_assert!(o.queries_used() as f64 <= (n as f64) * (n.max(1) as f64).log2() + 1e-9);

        let mut o = ExactOracle::new(truth.clone());
        let (t, stats) = quick_clustering(&labels, &mut o, &mut rng).unwrap();
        prop_assert!(t.equivalent(&truth).unwrap());
        prop_assert_eq!(stats.total_queries(), o.queries_used());
    }
}

#[test]
fn balanced_rounds_on_caterpillars_are_frequent_enough() {
    // Caterpillars make most pivot pairs split off a tiny part.
    let n = 24;
    let labels = default_labels(n);
    let truth = BinaryHierarchy::caterpillar(&labels).unwrap();
    let mut o = ExactOracle::new(truth);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let trials = 100_000u64;
    let mut ok = 0u64;
    for _ in 0..trials {
        if partition_round(&labels, &mut o, &mut rng).unwrap().is_balanced() {
            ok += 1;
        }
    }
    assert_eq!(o.queries_used(), trials * (n as u64 - 2));
    let p = 3.0 / 128.0;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let rate = ok as f64 / trials as f64;
    assert!(rate >= p - 3.0 * sigma, "{rate}");
}
