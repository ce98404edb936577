//! Reconstruction of rooted binary hierarchies from triplet queries: which
//! two of three elements are closest.
//!
//! - [`hierarchy`]: the tree model, Newick and JSON forms, induced and
//!   contracted trees.
//! - [`oracles`]: answer sources (exact, noisy, counting) and pivot queries.
//! - [`noiseless`]: partition-and-merge and insertion clustering.
//! - [`noisy`]: insertion that tolerates independently wrong answers.
//! - [`insertion`]: the resumable insertion state machine shared by both.
//! - [`bruteforce`]: exhaustive enumeration for small instances.
//! - [`harness`]: seeded experiments and calibration.

pub mod bruteforce;
pub mod harness;
pub mod hierarchy;
pub mod insertion;
pub mod noiseless;
pub mod noisy;
pub mod oracles;
pub mod rng;

pub use hierarchy::{BinaryHierarchy, ElementId, HierarchyError, NodeId, Triplet, TripletAnswer};
pub use oracles::{ExactOracle, NoiseModel, NoisyOracle, OrdinalOracle, PivotDirection};
