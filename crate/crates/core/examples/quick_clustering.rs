//! Randomized divide-and-conquer reconstruction with exact answers.
//!
//! `cargo run --example quick_clustering -- [n] [seed]`

use hiercluster::hierarchy::default_labels;
use hiercluster::noiseless::quick_clustering;
use hiercluster::{BinaryHierarchy, ExactOracle, OrdinalOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(64);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let truth = BinaryHierarchy::random(n, &mut rng)?;
    let mut oracle = ExactOracle::new(truth.clone());
    let (tree, stats) = quick_clustering(&default_labels(n), &mut oracle, &mut rng)?;

    println!("recovered: {}", tree.equivalent(&truth)?);
    println!("queries:   {} (n log2 n = {:.0})", oracle.queries_used(), n as f64 * (n as f64).log2());
    println!("  partition {}  merge {}", stats.partition_queries, stats.merge_queries);
    println!("calls {}  rounds {}  worst call {} rounds", stats.invocations, stats.rounds, stats.max_rounds);
    Ok(())
}
