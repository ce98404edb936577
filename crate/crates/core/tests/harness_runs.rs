use hiercluster::bruteforce::{enumerate, reconstruct_exhaustive};
use hiercluster::harness::{run, to_csv, Experiment, ExperimentConfig, TreeShape};
use hiercluster::noiseless::{insertion_clustering, quick_clustering};
use hiercluster::ExactOracle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(exp: Experiment) -> ExperimentConfig {
    let n = match exp {
        Experiment::NonadaptiveLb => vec![8, 16],
        Experiment::TreeWalk => vec![3, 6],
        _ => vec![5, 9],
    };
    let mut cfg = ExperimentConfig::new(exp, n, 6);
    cfg.seed = 99;
    cfg
}

#[test]
fn every_experiment_reruns_byte_identically() {
    for exp in Experiment::ALL {
        let cfg = small(exp);
        let a = to_csv(&run(&cfg).unwrap().records).unwrap();
        let b = to_csv(&run(&cfg).unwrap().records).unwrap();
        assert_eq!(a, b, "{}", exp.name());
        let mut other = cfg.clone();
        other.seed = 100;
        if matches!(exp, Experiment::QuickNoiseless | Experiment::NoisyInsertion | Experiment::RobustSibling) {
            assert_ne!(a, to_csv(&run(&other).unwrap().records).unwrap(), "{}", exp.name());
        }
    }
}

#[test]
fn noiseless_experiments_never_fail() {
    for shape in [TreeShape::Random, TreeShape::Caterpillar, TreeShape::Balanced] {
        for exp in [Experiment::InsertionNoiseless, Experiment::QuickNoiseless] {
            let mut cfg = ExperimentConfig::new(exp, vec![2, 3, 17, 40], 10);
            cfg.tree_shape = shape;
            let out = run(&cfg).unwrap();
            assert!(out.records.iter().all(|r| r.success));
        }
    }
}

#[test]
fn csv_file_matches_in_memory_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::QuickNoiseless);
    cfg.output_path = Some(dir.path().join("out.csv"));
    let out = run(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(text, to_csv(&out.records).unwrap());
}

#[test]
fn brute_force_agrees_with_both_algorithms_up_to_five_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in 2..=5 {
        for truth in enumerate(n).unwrap() {
            let els = truth.elements();
            let (a, _) = insertion_clustering(&els, &mut ExactOracle::new(truth.clone())).unwrap();
            let (b, _) = quick_clustering(&els, &mut ExactOracle::new(truth.clone()), &mut rng).unwrap();
            assert!(a.equivalent(&truth).unwrap() && b.equivalent(&truth).unwrap());
            if n >= 3 {
                let c = reconstruct_exhaustive(&mut ExactOracle::new(truth.clone()), &els).unwrap();
                assert!(c.equivalent(&truth).unwrap());
            }
        }
    }
}
