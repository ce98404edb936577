//! Sibling search and insertion under independently noisy answers.
//!
//! Vertex queries are simulated by repeated pivot queries ([`vertex`]), the
//! candidate set is cut down by multiplicative weights ([`mw`]), and a
//! counter walk on the contracted candidate tree picks the sibling ([`walk`]).

mod robust;
pub mod mw;
pub mod vertex;
pub mod walk;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{BinaryHierarchy, ElementId, HierarchyError};
use crate::insertion::{InsertionMode, InsertionRun};
use crate::oracles::OrdinalOracle;

pub use mw::{consistent_nodes, mw_reduce, MwConfig, MwReducer};
pub use robust::{robust_find_sibling, RobustOutcome, RobustSiblingSearch};
pub use vertex::{simulate_vertex_query, true_vertex_response, VertexQuerySim, VertexResponse};
pub use walk::{
    diameter, distances, tree_walk, tree_walk_traced, walk_iterations, AdjacencyTree, SearchTree, WalkOutcome,
    WalkState, WalkStep,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoisyError {
    #[error("correctness probability must lie in (0.5, 1], got {0}")]
    BadProbability(f64),
    #[error("error budget must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("constants must be positive, got {0}")]
    BadConstant(f64),
    #[error("repetition count must be odd and positive, got {0}")]
    BadRepetitions(u32),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

pub(crate) fn check_p(p: f64) -> Result<(), NoisyError> {
    if p > 0.5 && p <= 1.0 {
        Ok(())
    } else {
        Err(NoisyError::BadProbability(p))
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<(), NoisyError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(NoisyError::BadDelta(delta))
    }
}

/// Smallest odd `k` with `1 - exp(-k (2p-1)^2 / 2) >= sqrt(p)`.
/// `p = 1` needs no repetition and gives 1.
pub fn choose_kp(p: f64) -> Result<u32, NoisyError> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(1);
    }
    let gap = (2.0 * p - 1.0).powi(2);
    let mut k = 1u32;
    while 1.0 - (-(f64::from(k)) * gap / 2.0).exp() < p.sqrt() {
        k += 2;
    }
    Ok(k)
}

/// Calibrated constants of the noisy pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyConstants {
    pub c_rounds: f64,
    pub c_keep: f64,
    /// Fitted per-search query constant; reporting only.
    pub kappa: Option<f64>,
    /// Fitted per-insertion-run query constant; reporting only.
    pub kappa_prime: Option<f64>,
}

const CONSTANTS_JSON: &str = include_str!("../../constants.json");

impl NoisyConstants {
    /// Constants shipped with the crate (output of the calibration run).
    pub fn shipped() -> NoisyConstants {
        static SHIPPED: OnceLock<NoisyConstants> = OnceLock::new();
        *SHIPPED.get_or_init(|| serde_json::from_str(CONSTANTS_JSON).expect("bundled constants.json parses"))
    }
}

impl Default for NoisyConstants {
    fn default() -> Self {
        NoisyConstants::shipped()
    }
}

/// Parameters of one robust sibling search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustConfig {
    pub p: f64,
    /// Failure budget of the whole search; each of the two phases gets half.
    pub delta: f64,
    pub k_p: u32,
    /// Reduction parameters; `mw.delta` is already halved.
    pub mw: MwConfig,
}

impl RobustConfig {
    pub fn new(p: f64, delta: f64) -> Result<Self, NoisyError> {
        Self::with_constants(p, delta, &NoisyConstants::shipped())
    }

    pub fn with_constants(p: f64, delta: f64, c: &NoisyConstants) -> Result<Self, NoisyError> {
        check_delta(delta)?;
        Ok(RobustConfig {
            p,
            delta,
            k_p: choose_kp(p)?,
            mw: MwConfig::new(p, delta / 2.0, c.c_rounds, c.c_keep)?,
        })
    }

    /// Overrides the repetition count.
    pub fn with_kp(mut self, k: u32) -> Result<Self, NoisyError> {
        if k == 0 || k % 2 == 0 {
            return Err(NoisyError::BadRepetitions(k));
        }
        self.k_p = k;
        Ok(self)
    }

    /// Same settings with the budget divided among `parts` searches.
    pub fn split(&self, parts: usize) -> RobustConfig {
        let delta = self.delta / parts.max(1) as f64;
        RobustConfig {
            delta,
            mw: MwConfig {
                delta: delta / 2.0,
                ..self.mw
            },
            ..*self
        }
    }
}

/// Insertion with a robust sibling search per element; each of the `n`
/// searches gets budget `delta / n`. Returns the tree and the ordinal query
/// count of each insertion.
pub fn noisy_insertion_clustering<O>(
    els: &[ElementId],
    o: &mut O,
    cfg: &RobustConfig,
) -> Result<(BinaryHierarchy, Vec<u64>), HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let run = InsertionRun::new(els.to_vec(), InsertionMode::Robust(*cfg))?.drive(o)?;
    let per = run.per_insertion_queries().to_vec();
    Ok((run.into_tree(), per))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kp_examples() {
        assert_eq!(choose_kp(0.9).unwrap(), 11);
        assert_eq!(choose_kp(0.8).unwrap(), 13);
        assert_eq!(choose_kp(1.0).unwrap(), 1);
        assert!(choose_kp(0.5).is_err());
        assert!(choose_kp(1.1).is_err());
    }

    #[test]
    fn kp_is_non_increasing_in_p() {
        let grid: Vec<u32> = (11..=19).map(|i| choose_kp(f64::from(i) * 0.05).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[0] >= w[1]), "{grid:?}");
        assert!(grid.iter().all(|k| k % 2 == 1));
    }

    #[test]
    fn splitting_the_budget() {
        let cfg = RobustConfig::new(0.8, 0.1).unwrap();
        assert_eq!(cfg.mw.delta, 0.05);
        let per = cfg.split(10);
        assert!((per.delta - 0.01).abs() < 1e-15);
        assert!((per.mw.delta - 0.005).abs() < 1e-15);
        assert_eq!(per.k_p, 13);
        assert!(cfg.with_kp(4).is_err());
        assert!(RobustConfig::new(0.8, 1.0).is_err());
    }

    #[test]
    fn shipped_constants_are_positive() {
        let c = NoisyConstants::shipped();
        assert!(c.c_rounds > 0.0 && c.c_keep > 0.0);
    }
}
