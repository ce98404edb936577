//! Empirical choice of the reduction constants.
//!
//! For each `(p, n, c_rounds)` cell the reduction runs against a synthetic
//! vertex oracle and records the rank of the target in the final weight
//! order. Containment for any `c_keep` then follows from the ranks without
//! rerunning. The chosen pair is the smallest `c_rounds` (then the smallest
//! `c_keep`) that passes in every `(p, n)` cell, where passing means an
//! observed containment of at least `1 - delta / 2` and a 95% Wilson lower
//! bound of at least `1 - delta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiments::{Experiment, SyntheticVertexOracle};
use super::stats::{three_sigma, wilson_interval};
use super::{run_records, ExperimentConfig, HarnessError, TreeShape};
use crate::hierarchy::{BinaryHierarchy, NodeId};
use crate::noisy::mw::lambda;
use crate::noisy::{MwConfig, MwReducer, NoisyConstants};
use crate::oracles::Adversary;
use crate::rng::trial_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub p_grid: Vec<f64>,
    /// Leaf counts of the random trees.
    pub n_grid: Vec<usize>,
    pub trials: u64,
    pub delta: f64,
    pub c_rounds_grid: Vec<f64>,
    pub c_keep_grid: Vec<f64>,
    pub seed: u64,
    /// Trials per size for the query-constant fits; 0 skips them.
    pub fit_trials: u64,
    /// Sizes for the per-search fit.
    pub fit_n_grid: Vec<usize>,
    /// Sizes for the whole-run fit.
    pub fit_insertion_n_grid: Vec<usize>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            p_grid: vec![0.7, 0.8, 0.9, 1.0],
            n_grid: vec![16, 64, 256],
            trials: 400,
            delta: 0.05,
            c_rounds_grid: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0],
            c_keep_grid: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            seed: 2024,
            fit_trials: 40,
            fit_n_grid: vec![16, 32, 64, 128, 256],
            fit_insertion_n_grid: vec![16, 32, 64],
        }
    }
}

impl CalibrationSettings {
    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::BadConfig(m.into()));
        if self.p_grid.is_empty() || self.n_grid.is_empty() || self.c_rounds_grid.is_empty() || self.c_keep_grid.is_empty()
        {
            return bad("calibration grids must be non-empty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return bad("tree sizes must be at least 2");
        }
        for &p in &self.p_grid {
            MwConfig::new(p, self.delta, 1.0, 1.0)?;
        }
        if self.c_rounds_grid.iter().chain(&self.c_keep_grid).any(|&c| !(c > 0.0)) {
            return bad("constants must be positive");
        }
        Ok(())
    }
}

/// Containment of one `(p, n, c_rounds, c_keep)` combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub p: f64,
    pub n: usize,
    pub c_rounds: f64,
    pub c_keep: f64,
    pub rounds: usize,
    pub keep: usize,
    pub trials: u64,
    pub contained: u64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub settings: CalibrationSettings,
    pub target_rate: f64,
    pub cells: Vec<CalibrationCell>,
    /// `(p, λ(p))` for reference.
    pub lambda: Vec<(f64, f64)>,
    /// Containment never drops by more than three binomial sigmas as
    /// `c_rounds` grows, for every `(p, n, c_keep)`.
    pub monotone: bool,
    /// Drops beyond three sigmas, as `(p, n, c_keep, c_rounds_before, c_rounds_after)`.
    pub violations: Vec<(f64, usize, f64, f64, f64)>,
    /// Smallest `c_rounds` reaching full containment in the `p = 1` rows, if any.
    pub p1_floor: Option<f64>,
    /// `None` when no tested pair suffices.
    pub chosen: Option<(f64, f64)>,
    /// Max over sizes of mean ordinal queries per search over `log2 n + ln(1/δ)`.
    pub kappa: Option<f64>,
    /// Max over trials of total queries over `n (log2 n + ln(n/δ))`.
    pub kappa_prime: Option<f64>,
    pub constants: NoisyConstants,
}

impl CalibrationReport {
    pub fn succeeded(&self) -> bool {
        self.chosen.is_some()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("target containment >= {:.4}\n", self.target_rate));
        for (p, l) in &self.lambda {
            s.push_str(&format!("lambda({p}) = {l:.5}\n"));
        }
        s.push_str("p      n     c_rounds c_keep rounds keep  rate\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{:<6} {:<5} {:<8} {:<6} {:<6} {:<5} {:.4}\n",
                c.p, c.n, c.c_rounds, c.c_keep, c.rounds, c.keep, c.rate
            ));
        }
        s.push_str(&format!("monotone in c_rounds (3 sigma): {}\n", self.monotone));
        match self.p1_floor {
            Some(f) => s.push_str(&format!("p = 1 floor: c_rounds = {f}\n")),
            None => s.push_str("p = 1 floor: not in grid\n"),
        }
        match self.chosen {
            Some((r, k)) => s.push_str(&format!("chosen: c_rounds = {r}, c_keep = {k}\n")),
            None => s.push_str("FAILED: no tested pair reaches the target; prior defaults kept\n"),
        }
        if let Some(k) = self.kappa {
            s.push_str(&format!("kappa = {k:.2}\n"));
        }
        if let Some(k) = self.kappa_prime {
            s.push_str(&format!("kappa' = {k:.2}\n"));
        }
        s
    }
}

/// Rank of `target` in the order used by [`MwReducer::candidates`].
fn target_rank(mw: &MwReducer, target: usize) -> usize {
    let lw = mw.log_weights();
    let t = lw[target];
    lw.iter()
        .enumerate()
        .filter(|&(i, &w)| w > t || (w == t && i < target))
        .count()
}

fn one_rank(p: f64, n: usize, c_rounds: f64, delta: f64, seed: u64, trial: u64) -> Result<(usize, usize), HarnessError> {
    let mut rng = trial_rng(seed, n, trial);
    let h = BinaryHierarchy::random(n, &mut rng)?;
    let target = rng.gen_range(0..h.len());
    // c_keep does not influence the rounds.
    let cfg = MwConfig::new(p, delta, c_rounds, 1.0)?;
    let mut vq = SyntheticVertexOracle::new(&h, target, p, Adversary::UniformWrong, ChaCha8Rng::seed_from_u64(rng.gen()));
    let mut mw = MwReducer::new(&h, &cfg, h.len());
    while let Some(v) = mw.pending() {
        let resp = vq.answer(&h, v.0).map(NodeId);
        mw.observe(&h, resp)?;
    }
    Ok((target_rank(&mw, target), h.len()))
}

/// Runs the calibration grid and the query-constant fits.
pub fn calibrate(settings: &CalibrationSettings) -> Result<CalibrationReport, HarnessError> {
    settings.validate()?;
    let s = settings;
    let target_rate = 1.0 - s.delta / 2.0;
    let mut cells = Vec::new();
    for &p in &s.p_grid {
        for &n in &s.n_grid {
            for (ri, &c_rounds) in s.c_rounds_grid.iter().enumerate() {
                let seed = s.seed ^ ((ri as u64) << 32) ^ p.to_bits();
                let ranks = (0..s.trials)
                    .into_par_iter()
                    .map(|t| one_rank(p, n, c_rounds, s.delta, seed, t))
                    .collect::<Result<Vec<_>, _>>()?;
                let nodes = 2 * n - 1;
                for &c_keep in &s.c_keep_grid {
                    let cfg = MwConfig::new(p, s.delta, c_rounds, c_keep)?;
                    let keep = cfg.keep(nodes).min(nodes);
                    let contained = ranks.iter().filter(|(r, _)| *r < keep).count() as u64;
                    cells.push(CalibrationCell {
                        p,
                        n,
                        c_rounds,
                        c_keep,
                        rounds: cfg.rounds(nodes),
                        keep,
                        trials: s.trials,
                        contained,
                        rate: contained as f64 / s.trials as f64,
                    });
                }
            }
        }
    }

    let find = |p: f64, n: usize, r: f64, k: f64| {
        cells
            .iter()
            .find(|c| c.p == p && c.n == n && c.c_rounds == r && c.c_keep == k)
            .expect("cell exists")
    };

    let mut violations = Vec::new();
    for &p in &s.p_grid {
        for &n in &s.n_grid {
            for &k in &s.c_keep_grid {
                for w in s.c_rounds_grid.windows(2) {
                    let (a, b) = (find(p, n, w[0], k), find(p, n, w[1], k));
                    let slack = three_sigma(a.rate.max(b.rate).min(1.0 - 1.0 / s.trials as f64), s.trials);
                    if b.rate + slack < a.rate {
                        violations.push((p, n, k, w[0], w[1]));
                    }
                }
            }
        }
    }

    let p1_floor = s.p_grid.iter().any(|&p| p == 1.0).then(|| {
        s.c_rounds_grid.iter().copied().find(|&r| {
            s.n_grid
                .iter()
                .all(|&n| s.c_keep_grid.iter().any(|&k| find(1.0, n, r, k).contained == s.trials))
        })
    });

    let passes = |r: f64, k: f64| {
        s.p_grid.iter().all(|&p| {
            s.n_grid.iter().all(|&n| {
                let c = find(p, n, r, k);
                c.rate >= target_rate && wilson_interval(c.contained, c.trials, 1.96).0 >= 1.0 - s.delta
            })
        })
    };
    let chosen = s
        .c_rounds_grid
        .iter()
        .find_map(|&r| s.c_keep_grid.iter().find(|&&k| passes(r, k)).map(|&k| (r, k)));

    let prior = NoisyConstants::shipped();
    let mut constants = match chosen {
        Some((r, k)) => NoisyConstants {
            c_rounds: r,
            c_keep: k,
            kappa: None,
            kappa_prime: None,
        },
        None => prior,
    };

    let (mut kappa, mut kappa_prime) = (None, None);
    if s.fit_trials > 0 && chosen.is_some() {
        kappa = Some(fit_kappa(s, &constants)?);
        kappa_prime = Some(fit_kappa_prime(s, &constants)?);
        constants.kappa = kappa;
        constants.kappa_prime = kappa_prime;
    }

    Ok(CalibrationReport {
        settings: s.clone(),
        target_rate,
        cells,
        lambda: s.p_grid.iter().map(|&p| (p, lambda(p))).collect(),
        monotone: violations.is_empty(),
        violations,
        p1_floor: p1_floor.flatten(),
        chosen,
        kappa,
        kappa_prime,
        constants,
    })
}

fn fit_config(s: &CalibrationSettings, c: &NoisyConstants, exp: Experiment, ns: &[usize], p: f64, delta: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(exp, ns.to_vec(), s.fit_trials);
    cfg.p = Some(p);
    cfg.delta = Some(delta);
    cfg.seed = s.seed;
    cfg.tree_shape = TreeShape::Random;
    cfg.c_rounds = Some(c.c_rounds);
    cfg.c_keep = Some(c.c_keep);
    cfg
}

/// Lowest noisy `p` of the grid; that is where queries peak.
fn worst_p(s: &CalibrationSettings) -> f64 {
    s.p_grid.iter().copied().fold(1.0, f64::min)
}

fn fit_kappa(s: &CalibrationSettings, c: &NoisyConstants) -> Result<f64, HarnessError> {
    let delta = s.delta;
    let cfg = fit_config(s, c, Experiment::RobustSibling, &s.fit_n_grid, worst_p(s), delta);
    let recs = run_records(&cfg)?;
    let mut worst: f64 = 0.0;
    for &n in &s.fit_n_grid {
        let qs: Vec<f64> = recs.iter().filter(|r| r.n == n).map(|r| r.ordinal_queries as f64).collect();
        let scale = (n as f64).log2() + (1.0 / delta).ln();
        worst = worst.max(super::stats::mean(&qs) / scale);
    }
    Ok(round_up(worst))
}

fn fit_kappa_prime(s: &CalibrationSettings, c: &NoisyConstants) -> Result<f64, HarnessError> {
    let delta = 0.1;
    let cfg = fit_config(s, c, Experiment::NoisyInsertion, &s.fit_insertion_n_grid, worst_p(s), delta);
    let recs = run_records(&cfg)?;
    let worst = recs
        .iter()
        .map(|r| {
            let n = r.n as f64;
            r.ordinal_queries as f64 / (n * (n.log2() + (n / delta).ln()))
        })
        .fold(0.0, f64::max);
    // Headroom over the observed maximum.
    Ok(round_up(worst * 1.25))
}

fn round_up(x: f64) -> f64 {
    (x * 10.0).ceil() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CalibrationSettings {
        CalibrationSettings {
            p_grid: vec![0.8, 1.0],
            n_grid: vec![8, 32],
            trials: 60,
            delta: 0.1,
            c_rounds_grid: vec![0.25, 2.0, 8.0],
            c_keep_grid: vec![0.25, 4.0],
            seed: 3,
            fit_trials: 0,
            fit_n_grid: vec![],
            fit_insertion_n_grid: vec![],
        }
    }

    #[test]
    fn small_grid_finds_constants() {
        let r = calibrate(&small()).unwrap();
        assert_eq!(r.cells.len(), 2 * 2 * 3 * 2);
        let (cr, ck) = r.chosen.expect("the largest pair keeps everything at n = 8");
        assert!(cr >= 0.25 && ck >= 0.25);
        assert_eq!(r.lambda.len(), 2);
        assert_eq!(r.lambda[1].1, 0.0);
        assert!(r.p1_floor.is_some());
        assert!(r.to_text().contains("chosen"));
    }

    #[test]
    fn impossible_target_reports_failure() {
        let mut s = small();
        s.c_rounds_grid = vec![0.01];
        s.c_keep_grid = vec![0.01];
        s.p_grid = vec![0.6];
        s.n_grid = vec![64];
        let r = calibrate(&s).unwrap();
        assert!(!r.succeeded());
        assert_eq!(r.constants, NoisyConstants::shipped());
        assert!(r.to_text().contains("FAILED"));
    }

    #[test]
    fn empty_grids_are_rejected() {
        let mut s = small();
        s.p_grid.clear();
        assert!(calibrate(&s).is_err());
    }
}
