//! Seeded experiments over generated ground truths, CSV output, summaries
//! and calibration of the noisy-pipeline constants.

pub mod calibrate;
mod experiments;
mod reconstruct;
pub mod stats;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::HierarchyError;
use crate::noisy::{NoisyConstants, NoisyError, RobustConfig};
use crate::oracles::{Adversary, NoiseError};

pub use calibrate::{calibrate, CalibrationCell, CalibrationReport, CalibrationSettings};
pub use experiments::{
    nonadaptive_bound, nonadaptive_experiment, nonadaptive_trial, Experiment, SyntheticVertexOracle, TreeShape,
};
pub use reconstruct::{reconstruct, Algorithm, ReconstructOptions, Reconstruction};
pub use stats::{linear_fit, three_sigma, wilson_interval, LinearFit};

/// Version tag written as the first CSV line.
pub const CSV_SCHEMA: &str = "# schema: hier-trials/1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Noisy(#[from] NoisyError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn default_trials() -> u64 {
    100
}

fn default_adversary() -> String {
    "uniform".into()
}

/// One experiment run. Mirrors the command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_adversary")]
    pub adversary: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tree_shape: TreeShape,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Queries per trial for the non-adaptive experiment.
    #[serde(default)]
    pub k: Option<usize>,
    /// Overrides of the shipped noisy constants.
    #[serde(default)]
    pub c_rounds: Option<f64>,
    #[serde(default)]
    pub c_keep: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, n_values: Vec<usize>, trials: u64) -> Self {
        ExperimentConfig {
            experiment: experiment.name().to_string(),
            n_values,
            trials,
            p: None,
            delta: None,
            adversary: default_adversary(),
            seed: 0,
            tree_shape: TreeShape::Random,
            output_path: None,
            k: None,
            c_rounds: None,
            c_keep: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn experiment(&self) -> Result<Experiment, HarnessError> {
        self.experiment.parse()
    }

    pub(crate) fn p_or(&self, default: f64) -> f64 {
        self.p.unwrap_or(default)
    }

    pub(crate) fn delta_or(&self, default: f64) -> f64 {
        self.delta.unwrap_or(default)
    }

    pub(crate) fn adversary(&self) -> Result<Adversary, HarnessError> {
        Ok(self.adversary.parse()?)
    }

    /// Shipped constants with this config's overrides applied.
    pub fn constants(&self) -> NoisyConstants {
        let mut c = NoisyConstants::shipped();
        if let Some(r) = self.c_rounds {
            c.c_rounds = r;
        }
        if let Some(k) = self.c_keep {
            c.c_keep = k;
        }
        c
    }

    pub(crate) fn robust_config(&self, delta: f64) -> Result<RobustConfig, HarnessError> {
        Ok(RobustConfig::with_constants(self.p_or(0.8), delta, &self.constants())?)
    }

    pub fn validate(&self) -> Result<Experiment, HarnessError> {
        let exp = self.experiment()?;
        if self.trials == 0 {
            return Err(HarnessError::BadConfig("trials must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(HarnessError::BadConfig("no sizes given".into()));
        }
        if let Some(p) = self.p {
            if !(p > 0.5 && p <= 1.0) {
                return Err(HarnessError::BadConfig(format!("p must lie in (0.5, 1], got {p}")));
            }
        }
        self.adversary()?;
        Ok(exp)
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub n: usize,
    pub trial: u64,
    pub success: bool,
    pub ordinal_queries: u64,
    pub vertex_queries: Option<u64>,
    /// Partition rounds, walk iterations, reduction rounds or the largest
    /// per-insertion query count, depending on the experiment.
    pub rounds: Option<u64>,
    /// Experiment-specific measurement (learned clusters, candidate-set size,
    /// partition invocations, mean queries per insertion).
    pub value: Option<f64>,
    /// Not written to CSV, so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl TrialRecord {
    fn new(experiment: Experiment, n: usize, trial: u64) -> Self {
        TrialRecord {
            experiment,
            n,
            trial,
            success: false,
            ordinal_queries: 0,
            vertex_queries: None,
            rounds: None,
            value: None,
            wall_time: Duration::ZERO,
        }
    }
}

/// Aggregate over the trials of one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub n: usize,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Wilson 95% interval of the success rate.
    pub ci95: (f64, f64),
    pub mean_queries: f64,
    pub max_queries: u64,
    pub mean_vertex_queries: Option<f64>,
    pub mean_rounds: Option<f64>,
    pub mean_value: Option<f64>,
    pub value_std: Option<f64>,
}

fn summarize_group(recs: &[TrialRecord]) -> Summary {
    let opt_mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| stats::mean(&xs));
    let trials = recs.len() as u64;
    let successes = recs.iter().filter(|r| r.success).count() as u64;
    let queries: Vec<f64> = recs.iter().map(|r| r.ordinal_queries as f64).collect();
    let values: Vec<f64> = recs.iter().filter_map(|r| r.value).collect();
    Summary {
        experiment: recs[0].experiment,
        n: recs[0].n,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        ci95: wilson_interval(successes, trials, 1.96),
        mean_queries: stats::mean(&queries),
        max_queries: recs.iter().map(|r| r.ordinal_queries).max().unwrap_or(0),
        mean_vertex_queries: opt_mean(recs.iter().filter_map(|r| r.vertex_queries.map(|v| v as f64)).collect()),
        mean_rounds: opt_mean(recs.iter().filter_map(|r| r.rounds.map(|v| v as f64)).collect()),
        value_std: (!values.is_empty()).then(|| stats::std_dev(&values)),
        mean_value: opt_mean(values),
    }
}

/// Per-size summaries of records sorted by `(n, trial)`.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    records
        .chunk_by(|a, b| a.n == b.n && a.experiment == b.experiment)
        .map(summarize_group)
        .collect()
}

/// Records and their summaries.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
}

/// Runs every trial in parallel; records come back sorted by `(n, trial)`.
pub fn run_records(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    let exp = cfg.validate()?;
    let jobs: Vec<(usize, u64)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let mut records = jobs
        .into_par_iter()
        .map(|(n, t)| experiments::run_trial(cfg, exp, n, t))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| (r.n, r.trial));
    Ok(records)
}

/// Runs the experiment, writes the CSV when an output path is set, and
/// returns records plus summaries.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let records = run_records(cfg)?;
    if let Some(path) = &cfg.output_path {
        write_csv(&records, path)?;
    }
    let summaries = summarize(&records);
    Ok(RunOutput { records, summaries })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    n: usize,
    trial: u64,
    success: bool,
    ordinal_queries: u64,
    vertex_queries: Option<u64>,
    rounds: Option<u64>,
    value: Option<f64>,
}

/// CSV text: schema line, header, one row per trial.
pub fn to_csv(records: &[TrialRecord]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            experiment: r.experiment.name(),
            n: r.n,
            trial: r.trial,
            success: r.success,
            ordinal_queries: r.ordinal_queries,
            vertex_queries: r.vertex_queries,
            rounds: r.rounds,
            value: r.value,
        })?;
    }
    let body = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(format!("{CSV_SCHEMA}\n{}", String::from_utf8(body).expect("csv output is utf-8")))
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    let text = to_csv(records)?;
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable summary table.
pub fn format_summaries(summaries: &[Summary]) -> String {
    let mut out = String::from("experiment            n  trials  success  ci95            mean_q     max_q  extra\n");
    for s in summaries {
        let mut extra = String::new();
        if let Some(v) = s.mean_vertex_queries {
            write!(extra, "vq={v:.1} ").unwrap();
        }
        if let Some(r) = s.mean_rounds {
            write!(extra, "rounds={r:.2} ").unwrap();
        }
        if let Some(v) = s.mean_value {
            write!(extra, "value={v:.3}").unwrap();
        }
        writeln!(
            out,
            "{:<20} {:>4} {:>7} {:>8.4}  [{:.4}, {:.4}] {:>9.1} {:>9}  {}",
            s.experiment.name(),
            s.n,
            s.trials,
            s.success_rate,
            s.ci95.0,
            s.ci95.1,
            s.mean_queries,
            s.max_queries,
            extra.trim_end()
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_defaults_and_rejections() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"experiment":"insertion-noiseless","n_values":[8]}"#).unwrap();
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.adversary, "uniform");
        assert_eq!(cfg.validate().unwrap(), Experiment::InsertionNoiseless);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment":"x","n_values":[8],"bogus":1}"#).is_err());
        let mut bad = cfg.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());
        bad = cfg.clone();
        bad.experiment = "nope".into();
        assert!(matches!(bad.validate(), Err(HarnessError::UnknownExperiment(_))));
        bad = cfg;
        bad.p = Some(0.4);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_is_sorted_and_reproducible() {
        let mut cfg = ExperimentConfig::new(Experiment::QuickNoiseless, vec![16, 8], 12);
        cfg.seed = 5;
        let a = to_csv(&run_records(&cfg).unwrap()).unwrap();
        let b = to_csv(&run_records(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some(CSV_SCHEMA));
        assert_eq!(
            lines.next(),
            Some("experiment,n,trial,success,ordinal_queries,vertex_queries,rounds,value")
        );
        let first: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..4], ["quick-noiseless", "8", "0", "true"]);
        assert_eq!(a.lines().count(), 2 + 24);
    }

    #[test]
    fn writing_to_a_missing_directory_fails() {
        let mut cfg = ExperimentConfig::new(Experiment::InsertionNoiseless, vec![4], 1);
        cfg.output_path = Some(PathBuf::from("/nonexistent/dir/out.csv"));
        assert!(matches!(run(&cfg), Err(HarnessError::Io { .. })));
    }

    #[test]
    fn summaries_per_size() {
        let cfg = ExperimentConfig::new(Experiment::InsertionNoiseless, vec![4, 16], 10);
        let out = run(&cfg).unwrap();
        assert_eq!(out.summaries.len(), 2);
        assert!(out.summaries.iter().all(|s| s.successes == 10));
        assert!(format_summaries(&out.summaries).contains("insertion-noiseless"));
    }
}
