//! Runs a harness experiment and prints the summary and the first CSV rows.
//!
//! `cargo run --release --example experiments -- [experiment] [n,n,...] [trials]`

use hiercluster::harness::{format_summaries, run, to_csv, Experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let exp: Experiment = args.next().as_deref().unwrap_or("quick-noiseless").parse()?;
    let ns: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "16,64,256".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let trials: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);

    let mut cfg = ExperimentConfig::new(exp, ns, trials);
    cfg.seed = 42;
    let out = run(&cfg)?;
    println!("n = {}", exp.size_meaning());
    print!("{}", format_summaries(&out.summaries));
    for line in to_csv(&out.records)?.lines().take(5) {
        println!("{line}");
    }
    Ok(())
}
