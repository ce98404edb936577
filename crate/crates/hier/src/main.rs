//! `hier run | calibrate | reconstruct | serve`.
//!
//! Every subcommand accepts `--config file.json` whose keys mirror the long
//! flag names (with underscores); flags given on the command line win.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hiercluster::harness::{
    calibrate, format_summaries, reconstruct, run, CalibrationSettings, ExperimentConfig, HarnessError, ReconstructOptions,
};
use hiercluster::BinaryHierarchy;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Hierarchy(#[from] hiercluster::HierarchyError),
    #[error(transparent)]
    Service(#[from] hier_service::ServiceError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("calibration found no suitable constants; defaults kept")]
    CalibrationFailed,
}

#[derive(Parser)]
#[command(name = "hier", version, about = "Hierarchical clustering from triplet queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-trial CSV.
    Run(RunArgs),
    /// Calibrate the noisy-reduction constants.
    Calibrate(CalibrateArgs),
    /// Rebuild a Newick tree from simulated answers.
    Reconstruct(ReconstructArgs),
    /// Start the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    /// Sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// uniform | fixed | fixed-low | fixed-high
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// random | caterpillar | balanced
    #[arg(long)]
    tree_shape: Option<String>,
    #[arg(long = "out")]
    output_path: Option<PathBuf>,
    /// Queries per trial (nonadaptive-lb).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c_rounds: Option<f64>,
    #[arg(long)]
    c_keep: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "p", value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long = "n", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "c-rounds", value_delimiter = ',')]
    c_rounds_grid: Option<Vec<f64>>,
    #[arg(long = "c-keep", value_delimiter = ',')]
    c_keep_grid: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per size for the query-constant fits (0 skips them).
    #[arg(long)]
    fit_trials: Option<u64>,
    /// Where to write the chosen constants (JSON).
    #[arg(long)]
    constants_out: Option<PathBuf>,
    /// Where to write the full report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// File holding the true tree in Newick form.
    #[arg(long)]
    newick: PathBuf,
    /// quick | insertion | noisy
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory for session snapshots; memory only when absent.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Config file object with the given flags laid over it.
fn merged(config: Option<&Path>, flags: Vec<(&str, Option<Value>)>) -> Result<Value, CliError> {
    let mut obj: Map<String, Value> = match config {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => Map::new(),
    };
    for (k, v) in flags {
        if let Some(v) = v {
            obj.insert(k.to_string(), v);
        }
    }
    Ok(Value::Object(obj))
}

fn val<T: serde::Serialize>(x: &Option<T>) -> Option<Value> {
    x.as_ref().map(|v| serde_json::to_value(v).expect("flag values serialize"))
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let cfg: ExperimentConfig = serde_json::from_value(merged(
        a.config.as_deref(),
        vec![
            ("experiment", val(&a.experiment)),
            ("n_values", val(&a.n_values)),
            ("trials", val(&a.trials)),
            ("p", val(&a.p)),
            ("delta", val(&a.delta)),
            ("adversary", val(&a.adversary)),
            ("seed", val(&a.seed)),
            ("tree_shape", val(&a.tree_shape)),
            ("output_path", val(&a.output_path)),
            ("k", val(&a.k)),
            ("c_rounds", val(&a.c_rounds)),
            ("c_keep", val(&a.c_keep)),
        ],
    )?)?;
    let out = run(&cfg)?;
    print!("{}", format_summaries(&out.summaries));
    if let Some(p) = &cfg.output_path {
        eprintln!("wrote {} trials to {}", out.records.len(), p.display());
    }
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let settings: CalibrationSettings = serde_json::from_value(merged(
        a.config.as_deref(),
        vec![
            ("p_grid", val(&a.p_grid)),
            ("n_grid", val(&a.n_grid)),
            ("trials", val(&a.trials)),
            ("delta", val(&a.delta)),
            ("c_rounds_grid", val(&a.c_rounds_grid)),
            ("c_keep_grid", val(&a.c_keep_grid)),
            ("seed", val(&a.seed)),
            ("fit_trials", val(&a.fit_trials)),
        ],
    )?)?;
    let report = calibrate(&settings)?;
    print!("{}", report.to_text());
    if let Some(p) = &a.report {
        write(p, &serde_json::to_string_pretty(&report)?)?;
    }
    if !report.succeeded() {
        return Err(CliError::CalibrationFailed);
    }
    if let Some(p) = &a.constants_out {
        write(p, &(serde_json::to_string_pretty(&report.constants)? + "\n"))?;
        eprintln!("wrote constants to {}", p.display());
    }
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<(), CliError> {
    let defaults = serde_json::to_value(ReconstructOptions::default())?;
    let mut base = defaults.as_object().cloned().unwrap_or_default();
    if let Value::Object(file) = merged(a.config.as_deref(), vec![])? {
        base.extend(file);
    }
    for (k, v) in [
        ("algorithm", val(&a.algorithm)),
        ("p", val(&a.p)),
        ("delta", val(&a.delta)),
        ("adversary", val(&a.adversary)),
        ("seed", val(&a.seed)),
    ] {
        if let Some(v) = v {
            base.insert(k.into(), v);
        }
    }
    let opts: ReconstructOptions = serde_json::from_value(Value::Object(base))?;
    let truth = BinaryHierarchy::from_newick(read(&a.newick)?.trim())?;
    let r = reconstruct(&truth, &opts)?;
    let text = r.tree.to_newick()? + "\n";
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("queries: {}  matches truth: {}", r.queries, r.matches_truth);
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: PathBuf::from("<runtime>"),
        source,
    })?;
    rt.block_on(hier_service::serve(a.addr, a.data_dir))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
