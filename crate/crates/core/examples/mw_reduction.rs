//! Multiplicative-weights candidate reduction against a synthetic vertex oracle.
//!
//! `cargo run --release --example mw_reduction -- [leaves] [p]`

use hiercluster::harness::SyntheticVertexOracle;
use hiercluster::noisy::{mw::lambda, MwConfig, MwReducer, NoisyConstants};
use hiercluster::oracles::Adversary;
use hiercluster::{BinaryHierarchy, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let leaves: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(256);
    let p: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.8);

    let h = BinaryHierarchy::random(leaves, &mut ChaCha8Rng::seed_from_u64(1))?;
    let target = h.len() / 3;
    let c = NoisyConstants::shipped();
    let cfg = MwConfig::new(p, 0.05, c.c_rounds, c.c_keep)?;
    println!("{} nodes, {} rounds, keep {}, lambda(p) = {:.4}", h.len(), cfg.rounds(h.len()), cfg.keep(h.len()), lambda(p));

    let mut vq = SyntheticVertexOracle::new(&h, target, p, Adversary::UniformWrong, ChaCha8Rng::seed_from_u64(2));
    let mut mw = MwReducer::new(&h, &cfg, h.len());
    while let Some(v) = mw.pending() {
        let resp = vq.answer(&h, v.0).map(NodeId);
        mw.observe(&h, resp)?;
    }
    let cands = mw.candidates();
    let rank = cands.iter().position(|&v| v == NodeId(target));
    println!("target {} rank in candidates: {rank:?}", NodeId(target));
    Ok(())
}
