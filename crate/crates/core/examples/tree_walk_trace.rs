//! Noisy counter walk on a tree of given diameter, with the per-iteration
//! trace (query, response, counter, target potential) printed as CSV.
//!
//! `cargo run --example tree_walk_trace -- [diameter] [p] > trace.csv`

use hiercluster::harness::SyntheticVertexOracle;
use hiercluster::noisy::{diameter, AdjacencyTree, SearchTree, WalkState};
use hiercluster::oracles::Adversary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let p: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.75);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tree = AdjacencyTree::random_with_diameter(d, d, &mut rng);
    let target = tree.vertex_count() - 1;
    let mut vq = SyntheticVertexOracle::new(&tree, target, p, Adversary::UniformWrong, rng);
    let mut walk = WalkState::new(&tree, p, 0.01, 0)?;
    walk.instrument(&tree, target);
    while !walk.is_done() {
        let resp = vq.answer(&tree, walk.current());
        walk.observe(resp);
    }
    eprintln!(
        "{} vertices, diameter {}, {} iterations, ended at {} (target {target})",
        tree.vertex_count(),
        diameter(&tree),
        walk.iteration(),
        walk.current()
    );
    print!("{}", walk.trace_csv().unwrap_or_default());
    Ok(())
}
