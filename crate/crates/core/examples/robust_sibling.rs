//! A single noisy sibling search: candidate reduction, then a counter walk
//! over the contracted candidate tree.
//!
//! `cargo run --release --example robust_sibling -- [n] [p]`

use hiercluster::hierarchy::default_labels;
use hiercluster::noisy::{robust_find_sibling, RobustConfig};
use hiercluster::oracles::{true_sibling, Adversary};
use hiercluster::{BinaryHierarchy, NoiseModel, NoisyOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(128);
    let p: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.8);

    let labels = default_labels(n + 1);
    let truth = BinaryHierarchy::random_over(&labels, &mut ChaCha8Rng::seed_from_u64(2))?;
    let x = labels[n / 2].clone();
    let rest: Vec<_> = labels.iter().filter(|e| **e != x).cloned().collect();
    let partial = truth.induced(&rest)?;
    let want = true_sibling(&truth, &partial, &x)?;

    let cfg = RobustConfig::new(p, 0.05)?;
    let mut oracle = NoisyOracle::new(truth, NoiseModel::new(p, Adversary::UniformWrong)?, ChaCha8Rng::seed_from_u64(3));
    let out = robust_find_sibling(&partial, &x, &mut oracle, &cfg)?;

    println!("placing {x} in a {}-leaf tree ({} nodes)", n, partial.len());
    println!("kept {} candidates; true sibling kept: {}", out.candidates.len(), out.candidates.contains(&want));
    println!("found {} (truth {want}): {}", out.node, out.node == want);
    println!("{} vertex queries, {} triplet queries", out.vertex_queries, out.ordinal_queries);
    Ok(())
}
