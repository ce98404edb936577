use std::str::FromStr;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, TrialRecord};
use crate::hierarchy::{default_labels, BinaryHierarchy, NodeId};
use crate::noiseless::{insertion_clustering, quick_clustering};
use crate::noisy::walk::true_response;
use crate::noisy::{
    distances, noisy_insertion_clustering, robust_find_sibling, AdjacencyTree, MwConfig, MwReducer,
    SearchTree, VertexResponse, WalkState,
};
use crate::oracles::{true_sibling, Adversary, ExactOracle, FixedRule, NoiseModel, NoisyOracle, OrdinalOracle};
use crate::rng::trial_rng;

/// Registered experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    InsertionNoiseless,
    QuickNoiseless,
    NoisyInsertion,
    RobustSibling,
    MwContainment,
    TreeWalk,
    NonadaptiveLb,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::InsertionNoiseless,
        Experiment::QuickNoiseless,
        Experiment::NoisyInsertion,
        Experiment::RobustSibling,
        Experiment::MwContainment,
        Experiment::TreeWalk,
        Experiment::NonadaptiveLb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::InsertionNoiseless => "insertion-noiseless",
            Experiment::QuickNoiseless => "quick-noiseless",
            Experiment::NoisyInsertion => "noisy-insertion",
            Experiment::RobustSibling => "robust-sibling",
            Experiment::MwContainment => "mw-containment",
            Experiment::TreeWalk => "tree-walk",
            Experiment::NonadaptiveLb => "nonadaptive-lb",
        }
    }

    /// What `n` means for this experiment.
    pub fn size_meaning(self) -> &'static str {
        match self {
            Experiment::TreeWalk => "tree diameter",
            Experiment::RobustSibling => "leaves of the partial tree",
            _ => "elements",
        }
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::UnknownExperiment(s.to_string()))
    }
}

/// Shape of generated ground truths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeShape {
    #[default]
    Random,
    Caterpillar,
    Balanced,
}

impl FromStr for TreeShape {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(TreeShape::Random),
            "caterpillar" => Ok(TreeShape::Caterpillar),
            "balanced" => Ok(TreeShape::Balanced),
            other => Err(HarnessError::BadConfig(format!("unknown tree shape `{other}`"))),
        }
    }
}

impl TreeShape {
    /// Truth over `x1..xn`.
    pub fn build<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Result<BinaryHierarchy, HarnessError> {
        let labels = default_labels(n);
        Ok(match self {
            TreeShape::Random => BinaryHierarchy::random_over(&labels, rng)?,
            TreeShape::Caterpillar => BinaryHierarchy::caterpillar(&labels)?,
            TreeShape::Balanced => BinaryHierarchy::balanced(&labels)?,
        })
    }
}

/// Vertex oracle over a known tree and target: correct with probability
/// `p`, otherwise a wrong response picked by the adversary rule.
pub struct SyntheticVertexOracle<R> {
    dist: Vec<u32>,
    p: f64,
    adversary: Adversary,
    rng: R,
    asked: u64,
}

impl<R: Rng> SyntheticVertexOracle<R> {
    pub fn new<T: SearchTree + ?Sized>(tree: &T, target: usize, p: f64, adversary: Adversary, rng: R) -> Self {
        SyntheticVertexOracle {
            dist: distances(tree, target),
            p,
            adversary,
            rng,
            asked: 0,
        }
    }

    pub fn queries_used(&self) -> u64 {
        self.asked
    }

    pub fn answer<T: SearchTree + ?Sized>(&mut self, tree: &T, v: usize) -> VertexResponse<usize> {
        self.asked += 1;
        let truth = true_response(tree, &self.dist, v);
        if self.rng.gen::<f64>() < self.p {
            return truth;
        }
        let mut wrong: Vec<VertexResponse<usize>> = std::iter::once(VertexResponse::TargetHere)
            .chain(tree.adjacent(v).into_iter().map(VertexResponse::Toward))
            .filter(|r| *r != truth)
            .collect();
        wrong.sort_by_key(|r| match r {
            VertexResponse::TargetHere => 0,
            VertexResponse::Toward(u) => u + 1,
        });
        match &self.adversary {
            Adversary::FixedWrong(FixedRule::LowestPair) => wrong[0],
            Adversary::FixedWrong(FixedRule::HighestPair) => wrong[wrong.len() - 1],
            // Callbacks are defined on triplets; vertex oracles fall back to uniform.
            Adversary::UniformWrong | Adversary::Callback(_) => wrong[self.rng.gen_range(0..wrong.len())],
        }
    }
}

/// Runs one trial. Everything random is drawn from the trial's own stream.
pub(super) fn run_trial(cfg: &ExperimentConfig, exp: Experiment, n: usize, trial: u64) -> Result<TrialRecord, HarnessError> {
    let started = Instant::now();
    let mut rng = trial_rng(cfg.seed, n, trial);
    let mut rec = TrialRecord::new(exp, n, trial);
    match exp {
        Experiment::InsertionNoiseless => {
            let truth = cfg.tree_shape.build(n, &mut rng)?;
            let mut o = ExactOracle::new(truth.clone());
            let (tree, per) = insertion_clustering(&default_labels(n), &mut o)?;
            rec.success = tree.equivalent(&truth)?;
            rec.ordinal_queries = o.queries_used();
            rec.rounds = per.iter().copied().max();
        }
        Experiment::QuickNoiseless => {
            let truth = cfg.tree_shape.build(n, &mut rng)?;
            let mut o = ExactOracle::new(truth.clone());
            let (tree, stats) = quick_clustering(&default_labels(n), &mut o, &mut rng)?;
            rec.success = tree.equivalent(&truth)?;
            rec.ordinal_queries = o.queries_used();
            rec.rounds = Some(stats.rounds);
            rec.value = Some(stats.invocations as f64);
        }
        Experiment::NoisyInsertion => {
            let truth = cfg.tree_shape.build(n, &mut rng)?;
            let model = NoiseModel::new(cfg.p_or(0.8), cfg.adversary()?)?;
            let robust = cfg.robust_config(cfg.delta_or(0.1))?;
            let mut o = NoisyOracle::new(truth.clone(), model, ChaCha8Rng::seed_from_u64(rng.gen()));
            let (tree, per) = noisy_insertion_clustering(&default_labels(n), &mut o, &robust)?;
            rec.success = tree.equivalent(&truth)?;
            rec.ordinal_queries = o.queries_used();
            rec.value = Some(mean_u64(&per));
        }
        Experiment::RobustSibling => {
            let truth = cfg.tree_shape.build(n + 1, &mut rng)?;
            let labels = default_labels(n + 1);
            let x = labels[rng.gen_range(0..labels.len())].clone();
            let rest: Vec<_> = labels.iter().filter(|e| **e != x).cloned().collect();
            let partial = truth.induced(&rest)?;
            let target = true_sibling(&truth, &partial, &x)?;
            let model = NoiseModel::new(cfg.p_or(0.8), cfg.adversary()?)?;
            let robust = cfg.robust_config(cfg.delta_or(0.05))?;
            let mut o = NoisyOracle::new(truth, model, ChaCha8Rng::seed_from_u64(rng.gen()));
            let out = robust_find_sibling(&partial, &x, &mut o, &robust)?;
            rec.success = out.node == target;
            rec.ordinal_queries = out.ordinal_queries;
            rec.vertex_queries = Some(out.vertex_queries);
            rec.value = Some(out.candidates.len() as f64);
        }
        Experiment::MwContainment => {
            let h = cfg.tree_shape.build(n, &mut rng)?;
            let target = rng.gen_range(0..h.len());
            let c = cfg.constants();
            let mw_cfg = MwConfig::new(cfg.p_or(0.8), cfg.delta_or(0.05), c.c_rounds, c.c_keep)?;
            let mut vq = SyntheticVertexOracle::new(&h, target, cfg.p_or(0.8), cfg.adversary()?, ChaCha8Rng::seed_from_u64(rng.gen()));
            let mut mw = MwReducer::new(&h, &mw_cfg, h.len());
            while let Some(v) = mw.pending() {
                let resp = vq.answer(&h, v.0).map(NodeId);
                mw.observe(&h, resp)?;
            }
            let cands = mw.candidates();
            rec.success = cands.contains(&NodeId(target));
            rec.vertex_queries = Some(vq.queries_used());
            rec.rounds = Some(mw.rounds() as u64);
            rec.value = Some(cands.len() as f64);
        }
        Experiment::TreeWalk => {
            let tree = AdjacencyTree::random_with_diameter(n, n, &mut rng);
            let target = rng.gen_range(0..tree.vertex_count());
            let start = rng.gen_range(0..tree.vertex_count());
            let p = cfg.p_or(0.75);
            let mut vq = SyntheticVertexOracle::new(&tree, target, p, cfg.adversary()?, ChaCha8Rng::seed_from_u64(rng.gen()));
            let mut walk = WalkState::new(&tree, p, cfg.delta_or(0.01), start)?;
            while !walk.is_done() {
                let resp = vq.answer(&tree, walk.current());
                walk.observe(resp);
            }
            rec.success = walk.current() == target;
            rec.vertex_queries = Some(vq.queries_used());
            rec.rounds = Some(walk.iteration());
        }
        Experiment::NonadaptiveLb => {
            let k = cfg.k.unwrap_or(100);
            let learned = nonadaptive_trial(n, k, &mut rng)?;
            rec.success = true;
            rec.ordinal_queries = k as u64;
            rec.value = Some(learned as f64);
        }
    }
    rec.wall_time = started.elapsed();
    Ok(rec)
}

fn mean_u64(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<u64>() as f64 / xs.len() as f64
    }
}

/// One draw of the non-adaptive experiment: a full binary truth over
/// permuted leaves, `k` uniform triplets, and the number of size-4 clusters
/// that contain some sampled triplet entirely.
pub fn nonadaptive_trial<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<usize, HarnessError> {
    if n < 8 || !n.is_power_of_two() {
        return Err(HarnessError::BadConfig(format!("n must be a power of two >= 8, got {n}")));
    }
    let mut labels = default_labels(n);
    labels.shuffle(rng);
    let truth = BinaryHierarchy::balanced(&labels)?;
    // Size-4 clusters of the full binary tree, as the cluster index of each leaf.
    let mut block = vec![usize::MAX; n];
    let index_of = |x: &crate::hierarchy::ElementId| labels.iter().position(|y| y == x).unwrap();
    let mut clusters = 0;
    for v in truth.node_ids() {
        let leaves = truth.subtree_leaves(v);
        if leaves.len() == 4 {
            for x in &leaves {
                block[index_of(x)] = clusters;
            }
            clusters += 1;
        }
    }
    debug_assert_eq!(clusters, n / 4);
    let mut learned = vec![false; clusters];
    for _ in 0..k {
        let t = index::sample(rng, n, 3);
        let b = block[t.index(0)];
        if block[t.index(1)] == b && block[t.index(2)] == b {
            learned[b] = true;
        }
    }
    Ok(learned.into_iter().filter(|&l| l).count())
}

/// Mean number of learned size-4 clusters over `trials` draws.
pub fn nonadaptive_experiment<R: Rng + ?Sized>(n: usize, k: usize, trials: u64, rng: &mut R) -> Result<f64, HarnessError> {
    let mut total = 0usize;
    for _ in 0..trials {
        total += nonadaptive_trial(n, k, rng)?;
    }
    Ok(total as f64 / trials.max(1) as f64)
}

/// The per-cluster-sum bound `6k / ((n-1)(n-2))`.
pub fn nonadaptive_bound(n: usize, k: usize) -> f64 {
    6.0 * k as f64 / ((n - 1) * (n - 2)) as f64
}
