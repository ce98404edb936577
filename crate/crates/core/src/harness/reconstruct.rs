use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::hierarchy::BinaryHierarchy;
use crate::noiseless::{insertion_clustering, quick_clustering};
use crate::noisy::{noisy_insertion_clustering, RobustConfig};
use crate::oracles::{Adversary, ExactOracle, NoiseModel, NoisyOracle, OrdinalOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Quick,
    Insertion,
    Noisy,
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Algorithm::Quick),
            "insertion" => Ok(Algorithm::Insertion),
            "noisy" => Ok(Algorithm::Noisy),
            other => Err(HarnessError::BadConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub algorithm: Algorithm,
    /// Oracle accuracy for the noisy algorithm; exact answers otherwise.
    pub p: f64,
    pub delta: f64,
    pub adversary: String,
    pub seed: u64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            algorithm: Algorithm::Insertion,
            p: 0.8,
            delta: 0.1,
            adversary: "uniform".into(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub tree: BinaryHierarchy,
    pub queries: u64,
    pub matches_truth: bool,
}

/// Rebuilds `truth` from simulated answers. Elements are inserted in label order.
pub fn reconstruct(truth: &BinaryHierarchy, opts: &ReconstructOptions) -> Result<Reconstruction, HarnessError> {
    let els = truth.elements();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (tree, queries) = match opts.algorithm {
        Algorithm::Quick => {
            let mut o = ExactOracle::new(truth.clone());
            let (t, _) = quick_clustering(&els, &mut o, &mut rng)?;
            (t, o.queries_used())
        }
        Algorithm::Insertion => {
            let mut o = ExactOracle::new(truth.clone());
            let (t, _) = insertion_clustering(&els, &mut o)?;
            (t, o.queries_used())
        }
        Algorithm::Noisy => {
            let adversary: Adversary = opts.adversary.parse()?;
            let model = NoiseModel::new(opts.p, adversary)?;
            let cfg = RobustConfig::new(opts.p, opts.delta)?;
            let mut o = NoisyOracle::new(truth.clone(), model, ChaCha8Rng::seed_from_u64(rng.gen()));
            let (t, _) = noisy_insertion_clustering(&els, &mut o, &cfg)?;
            (t, o.queries_used())
        }
    };
    let matches_truth = tree.equivalent(truth)?;
    Ok(Reconstruction {
        tree,
        queries,
        matches_truth,
    })
}
