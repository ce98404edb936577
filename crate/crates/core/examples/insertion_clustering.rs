//! One-at-a-time insertion with binary search over the partial tree.
//!
//! `cargo run --example insertion_clustering -- [n] [random|caterpillar|balanced]`

use hiercluster::harness::TreeShape;
use hiercluster::hierarchy::default_labels;
use hiercluster::noiseless::insertion_clustering;
use hiercluster::{ExactOracle, OrdinalOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(32);
    let shape: TreeShape = args.next().as_deref().unwrap_or("caterpillar").parse()?;

    let truth = shape.build(n, &mut ChaCha8Rng::seed_from_u64(0))?;
    let mut oracle = ExactOracle::new(truth.clone());
    let (tree, per) = insertion_clustering(&default_labels(n), &mut oracle)?;

    println!("recovered {}: {}", tree.to_newick()?, tree.equivalent(&truth)?);
    println!("total queries {} <= n log2 n = {:.0}", oracle.queries_used(), n as f64 * (n as f64).log2());
    for (j, q) in per.iter().enumerate() {
        let i = j as u64 + 3;
        println!("insertion {i:>3}: {q} queries (bound {})", (2 * i - 3).ilog2());
    }
    Ok(())
}
