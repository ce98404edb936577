use serde::{Deserialize, Serialize};

use crate::hierarchy::{BinaryHierarchy, ElementId, HierarchyError, NodeId};
use crate::oracles::{pivot_query, OrdinalOracle, PivotDirection};

/// Answer to a vertex query: the target is the queried vertex, or lies in the
/// direction of the given neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexResponse<N> {
    TargetHere,
    Toward(N),
}

impl<N> VertexResponse<N> {
    pub fn map<M>(self, f: impl FnOnce(N) -> M) -> VertexResponse<M> {
        match self {
            VertexResponse::TargetHere => VertexResponse::TargetHere,
            VertexResponse::Toward(u) => VertexResponse::Toward(f(u)),
        }
    }
}

/// Correct vertex-query answer at `v` for a known `target` in `h`.
pub fn true_vertex_response(h: &BinaryHierarchy, target: NodeId, v: NodeId) -> VertexResponse<NodeId> {
    if v == target {
        return VertexResponse::TargetHere;
    }
    if let Some([l, r]) = h.children(v) {
        for c in [l, r] {
            if h.is_ancestor_or_self(c, target) {
                return VertexResponse::Toward(c);
            }
        }
    }
    VertexResponse::Toward(h.parent(v).expect("target outside the subtree of a non-root vertex"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum Stage {
    /// One query at the root.
    Root,
    /// One query at the parent of a leaf.
    Leaf,
    /// Repeated queries at the vertex itself.
    AtVertex,
    /// Repeated queries at the parent, after the vertex voted "outside".
    AtParent,
}

/// Vertex query at `v` simulated with pivot queries, as a resumable state
/// machine: ask [`pending_pivot`](Self::pending_pivot), feed the direction to
/// [`observe`](Self::observe), until [`outcome`](Self::outcome) is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexQuerySim {
    v: NodeId,
    k: u32,
    stage: Stage,
    // Votes for Left, Right, Outside in the current stage.
    votes: [u32; 3],
    asked: u32,
    outcome: Option<VertexResponse<NodeId>>,
}

fn slot(dir: PivotDirection) -> usize {
    match dir {
        PivotDirection::Left => 0,
        PivotDirection::Right => 1,
        PivotDirection::Outside => 2,
    }
}

impl VertexQuerySim {
    /// `k` is the repetition count used at internal non-root vertices.
    pub fn new(h: &BinaryHierarchy, v: NodeId, k: u32) -> Result<Self, HierarchyError> {
        if !h.contains_node(v) {
            return Err(HierarchyError::UnknownNode(v));
        }
        let (stage, outcome) = if h.len() == 1 {
            (Stage::Root, Some(VertexResponse::TargetHere))
        } else if v == h.root() {
            (Stage::Root, None)
        } else if h.is_leaf(v) {
            (Stage::Leaf, None)
        } else {
            (Stage::AtVertex, None)
        };
        Ok(VertexQuerySim {
            v,
            k: k.max(1),
            stage,
            votes: [0; 3],
            asked: 0,
            outcome,
        })
    }

    pub fn vertex(&self) -> NodeId {
        self.v
    }

    /// Ordinal queries issued so far.
    pub fn queries(&self) -> u32 {
        self.asked
    }

    pub fn outcome(&self) -> Option<VertexResponse<NodeId>> {
        self.outcome
    }

    /// Pivot of the next ordinal query, `None` once finished.
    pub fn pending_pivot(&self, h: &BinaryHierarchy) -> Option<NodeId> {
        if self.outcome.is_some() {
            return None;
        }
        match self.stage {
            Stage::Root | Stage::AtVertex => Some(self.v),
            Stage::Leaf | Stage::AtParent => h.parent(self.v),
        }
    }

    pub fn observe(&mut self, h: &BinaryHierarchy, dir: PivotDirection) -> Result<(), HierarchyError> {
        if self.outcome.is_some() {
            return Err(HierarchyError::Malformed("vertex query already answered".into()));
        }
        self.asked += 1;
        let parent = h.parent(self.v);
        match self.stage {
            Stage::Root => {
                let [l, r] = h.children(self.v).ok_or(HierarchyError::LeafNode(self.v))?;
                self.outcome = Some(match dir {
                    PivotDirection::Left => VertexResponse::Toward(l),
                    PivotDirection::Right => VertexResponse::Toward(r),
                    PivotDirection::Outside => VertexResponse::TargetHere,
                });
            }
            Stage::Leaf => {
                let u = parent.ok_or(HierarchyError::UnknownNode(self.v))?;
                self.outcome = Some(if Some(dir) == self.side_in_parent(h) {
                    VertexResponse::TargetHere
                } else {
                    VertexResponse::Toward(u)
                });
            }
            Stage::AtVertex => {
                self.votes[slot(dir)] += 1;
                if self.votes.iter().sum::<u32>() == self.k {
                    let [l, r] = h.children(self.v).ok_or(HierarchyError::LeafNode(self.v))?;
                    let u = parent.ok_or(HierarchyError::UnknownNode(self.v))?;
                    match self.majority() {
                        Some(PivotDirection::Left) => self.outcome = Some(VertexResponse::Toward(l)),
                        Some(PivotDirection::Right) => self.outcome = Some(VertexResponse::Toward(r)),
                        Some(PivotDirection::Outside) => {
                            self.stage = Stage::AtParent;
                            self.votes = [0; 3];
                        }
                        None => self.outcome = Some(VertexResponse::Toward(u)),
                    }
                }
            }
            Stage::AtParent => {
                self.votes[slot(dir)] += 1;
                if self.votes.iter().sum::<u32>() == self.k {
                    let u = parent.ok_or(HierarchyError::UnknownNode(self.v))?;
                    self.outcome = Some(match self.majority() {
                        Some(d) if Some(d) == self.side_in_parent(h) => VertexResponse::TargetHere,
                        _ => VertexResponse::Toward(u),
                    });
                }
            }
        }
        Ok(())
    }

    fn majority(&self) -> Option<PivotDirection> {
        [PivotDirection::Left, PivotDirection::Right, PivotDirection::Outside]
            .into_iter()
            .find(|&d| 2 * self.votes[slot(d)] > self.k)
    }

    /// Which side of its parent `v` hangs on.
    fn side_in_parent(&self, h: &BinaryHierarchy) -> Option<PivotDirection> {
        let [l, _] = h.children(h.parent(self.v)?)?;
        Some(if l == self.v {
            PivotDirection::Left
        } else {
            PivotDirection::Right
        })
    }
}

/// Runs a full simulated vertex query at `v` for element `x`.
/// Returns the response and the number of ordinal queries spent.
pub fn simulate_vertex_query<O>(
    h: &BinaryHierarchy,
    v: NodeId,
    x: &ElementId,
    o: &mut O,
    k: u32,
) -> Result<(VertexResponse<NodeId>, u32), HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let mut sim = VertexQuerySim::new(h, v, k)?;
    while let Some(pivot) = sim.pending_pivot(h) {
        let dir = pivot_query(o, h, pivot, x)?;
        sim.observe(h, dir)?;
    }
    Ok((sim.outcome().expect("finished simulation has an outcome"), sim.queries()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{true_sibling, Adversary, ExactOracle, NoiseModel, NoisyOracle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Partial tree, hidden element and its true sibling.
    fn instance(seed: u64, n: usize) -> (BinaryHierarchy, BinaryHierarchy, ElementId, NodeId) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = BinaryHierarchy::random(n, &mut rng).unwrap();
        let els = truth.elements();
        let x = els[rng.gen_range(0..n)].clone();
        let rest: Vec<_> = els.iter().filter(|e| **e != x).cloned().collect();
        let partial = truth.induced(&rest).unwrap();
        let target = true_sibling(&truth, &partial, &x).unwrap();
        (truth, partial, x, target)
    }

    #[test]
    fn exact_answers_match_the_true_vertex_response() {
        for seed in 0..40 {
            let (truth, partial, x, target) = instance(seed, 6);
            let mut o = ExactOracle::new(truth);
            for v in partial.node_ids() {
                let (resp, cost) = simulate_vertex_query(&partial, v, &x, &mut o, 1).unwrap();
                assert_eq!(resp, true_vertex_response(&partial, target, v), "seed {seed} v {v}");
                let expect = if v == partial.root() || partial.is_leaf(v) { 1 } else { 2 };
                assert!(cost <= expect);
            }
        }
    }

    #[test]
    fn query_cost_bounds() {
        let (truth, partial, x, _) = instance(7, 12);
        let model = NoiseModel::new(0.7, Adversary::UniformWrong).unwrap();
        let mut o = NoisyOracle::new(truth, model, ChaCha8Rng::seed_from_u64(1));
        for _ in 0..20 {
            for v in partial.node_ids() {
                let (_, cost) = simulate_vertex_query(&partial, v, &x, &mut o, 11).unwrap();
                if v == partial.root() || partial.is_leaf(v) {
                    assert_eq!(cost, 1);
                } else {
                    assert!(cost == 11 || cost == 22);
                }
            }
        }
    }

    #[test]
    fn noisy_simulation_is_right_at_least_p_of_the_time() {
        let p = 0.8;
        let k = crate::noisy::choose_kp(p).unwrap();
        let (truth, partial, x, target) = instance(3, 16);
        let v = partial
            .node_ids()
            .find(|&v| v != partial.root() && !partial.is_leaf(v))
            .unwrap();
        let want = true_vertex_response(&partial, target, v);
        let model = NoiseModel::new(p, Adversary::UniformWrong).unwrap();
        let mut o = NoisyOracle::new(truth, model, ChaCha8Rng::seed_from_u64(5));
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|_| simulate_vertex_query(&partial, v, &x, &mut o, k).unwrap().0 == want)
            .count();
        assert!(hits as f64 / trials as f64 >= p, "{hits}");
    }

    #[test]
    fn answering_twice_is_an_error() {
        let h = BinaryHierarchy::from_newick("((a,b),c);").unwrap();
        let mut sim = VertexQuerySim::new(&h, h.root(), 1).unwrap();
        sim.observe(&h, PivotDirection::Outside).unwrap();
        assert_eq!(sim.outcome(), Some(VertexResponse::TargetHere));
        assert!(sim.observe(&h, PivotDirection::Left).is_err());
    }
}
