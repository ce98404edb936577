//! Random non-adaptive triplets learn few size-4 clusters of a full binary tree.
//!
//! `cargo run --release --example nonadaptive -- [n] [k] [trials]`

use hiercluster::harness::{nonadaptive_bound, nonadaptive_experiment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(16);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let trials: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let mean = nonadaptive_experiment(n, k, trials, &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("n={n} k={k}: mean learned clusters {mean:.3}, bound {:.3}, of {} clusters", nonadaptive_bound(n, k), n / 4);
    Ok(())
}
