//! Rebuilds a Newick tree with each algorithm from simulated answers.
//!
//! `cargo run --release --example reconstruct_newick -- "(((a,b),c),(d,e));"`

use hiercluster::harness::{reconstruct, Algorithm, ReconstructOptions};
use hiercluster::BinaryHierarchy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::env::args().nth(1).unwrap_or_else(|| "(((a,b),(c,d)),((e,f),(g,(h,i))));".into());
    let truth = BinaryHierarchy::from_newick(&src)?;
    for algorithm in [Algorithm::Quick, Algorithm::Insertion, Algorithm::Noisy] {
        let opts = ReconstructOptions { algorithm, p: 0.85, ..Default::default() };
        let r = reconstruct(&truth, &opts)?;
        println!("{algorithm:?}: {} queries, matches {} -> {}", r.queries, r.matches_truth, r.tree.to_newick()?);
    }
    Ok(())
}
