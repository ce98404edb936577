//! Enumerates every topology on a few leaves and reconstructs one of them by
//! asking all triplets.
//!
//! `cargo run --example brute_force -- [n]`

use hiercluster::bruteforce::{enumerate, reconstruct_exhaustive, topology_count};
use hiercluster::{ExactOracle, OrdinalOracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let all = enumerate(n)?;
    println!("{} topologies on {n} leaves ((2n-3)!! = {})", all.len(), topology_count(n));
    for t in all.iter().take(5) {
        println!("  {}", t.to_newick()?);
    }
    let truth = &all[all.len() / 2];
    let mut oracle = ExactOracle::new(truth.clone());
    let found = reconstruct_exhaustive(&mut oracle, &truth.elements())?;
    println!("exhaustive: {} after {} queries", found.to_newick()?, oracle.queries_used());
    Ok(())
}
