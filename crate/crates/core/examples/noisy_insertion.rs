//! Insertion clustering when each answer is wrong with probability 1 - p.
//!
//! `cargo run --release --example noisy_insertion -- [n] [p] [uniform|fixed]`

use hiercluster::hierarchy::default_labels;
use hiercluster::noisy::{noisy_insertion_clustering, RobustConfig};
use hiercluster::{BinaryHierarchy, NoiseModel, NoisyOracle, OrdinalOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(32);
    let p: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.8);
    let adversary = args.next().unwrap_or_else(|| "uniform".into()).parse()?;

    let truth = BinaryHierarchy::random(n, &mut ChaCha8Rng::seed_from_u64(4))?;
    let cfg = RobustConfig::new(p, 0.1)?;
    println!("p = {p}, repetitions per vertex query = {}, delta = {}", cfg.k_p, cfg.delta);
    let mut oracle = NoisyOracle::new(truth.clone(), NoiseModel::new(p, adversary)?, ChaCha8Rng::seed_from_u64(5));
    let (tree, per) = noisy_insertion_clustering(&default_labels(n), &mut oracle, &cfg)?;

    println!("recovered: {}", tree.equivalent(&truth)?);
    println!("total queries {}", oracle.queries_used());
    let mean = per.iter().sum::<u64>() as f64 / per.len().max(1) as f64;
    println!("mean per insertion {mean:.0}, max {}", per.iter().max().unwrap_or(&0));
    Ok(())
}
