use serde::{Deserialize, Serialize};

use super::mw::MwReducer;
use super::vertex::{VertexQuerySim, VertexResponse};
use super::walk::WalkState;
use super::RobustConfig;
use crate::hierarchy::{BinaryHierarchy, ContractedTree, ElementId, HierarchyError, NodeId};
use crate::oracles::{pivot_query, OrdinalOracle, PivotDirection};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Phase {
    Reduce(MwReducer),
    Walk { tree: ContractedTree, walk: WalkState },
    Done(NodeId),
}

/// Resumable robust sibling search over a fixed tree. Every step is one
/// pivot query: read [`pending_pivot`](Self::pending_pivot), feed the
/// direction to [`observe`](Self::observe).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustSiblingSearch {
    element: ElementId,
    cfg: RobustConfig,
    phase: Phase,
    sim: Option<VertexQuerySim>,
    candidates: Vec<NodeId>,
    ordinal: u64,
    vertex: u64,
}

impl RobustSiblingSearch {
    pub fn new(h: &BinaryHierarchy, x: ElementId, cfg: &RobustConfig) -> Result<Self, HierarchyError> {
        if h.contains(&x) {
            return Err(HierarchyError::DuplicateElement(x));
        }
        let mut search = RobustSiblingSearch {
            element: x,
            cfg: *cfg,
            phase: Phase::Reduce(MwReducer::new(h, &cfg.mw, h.len())),
            sim: None,
            candidates: Vec::new(),
            ordinal: 0,
            vertex: 0,
        };
        search.advance(h)?;
        Ok(search)
    }

    pub fn element(&self) -> &ElementId {
        &self.element
    }

    pub fn pending_pivot(&self, h: &BinaryHierarchy) -> Option<NodeId> {
        self.sim.as_ref().and_then(|s| s.pending_pivot(h))
    }

    pub fn result(&self) -> Option<NodeId> {
        match self.phase {
            Phase::Done(v) => Some(v),
            _ => None,
        }
    }

    /// Candidates kept by the reduction phase (empty until it finishes).
    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn ordinal_queries(&self) -> u64 {
        self.ordinal
    }

    pub fn vertex_queries(&self) -> u64 {
        self.vertex
    }

    pub fn observe(&mut self, h: &BinaryHierarchy, dir: PivotDirection) -> Result<(), HierarchyError> {
        let sim = self
            .sim
            .as_mut()
            .ok_or_else(|| HierarchyError::Malformed("search already finished".into()))?;
        sim.observe(h, dir)?;
        self.ordinal += 1;
        let Some(resp) = sim.outcome() else {
            return Ok(());
        };
        let v = sim.vertex();
        self.sim = None;
        self.vertex += 1;
        match &mut self.phase {
            Phase::Reduce(mw) => mw.observe(h, resp)?,
            Phase::Walk { tree, walk } => {
                let i = tree.index_of(v).expect("walk queries retained vertices");
                let projected = match resp {
                    VertexResponse::TargetHere => VertexResponse::TargetHere,
                    VertexResponse::Toward(u) => match tree.project(i, u) {
                        Some(j) => VertexResponse::Toward(j),
                        None => VertexResponse::TargetHere,
                    },
                };
                walk.observe(projected);
            }
            Phase::Done(_) => unreachable!("no simulation runs after the search ends"),
        }
        self.advance(h)
    }

    /// Moves to the next phase when the current one is finished and starts
    /// the next vertex-query simulation.
    fn advance(&mut self, h: &BinaryHierarchy) -> Result<(), HierarchyError> {
        loop {
            match &self.phase {
                Phase::Reduce(mw) => match mw.pending() {
                    Some(v) => return self.start_sim(h, v),
                    None => {
                        self.candidates = mw.candidates();
                        let tree = h.contracted(&self.candidates)?;
                        let walk = WalkState::new(&tree, self.cfg.p, self.cfg.mw.delta, tree.top())
                            .map_err(|e| HierarchyError::Malformed(e.to_string()))?;
                        self.phase = Phase::Walk { tree, walk };
                    }
                },
                Phase::Walk { tree, walk } => {
                    if walk.is_done() {
                        self.phase = Phase::Done(tree.node(walk.current()));
                    } else {
                        let v = tree.node(walk.current());
                        return self.start_sim(h, v);
                    }
                }
                Phase::Done(_) => return Ok(()),
            }
        }
    }

    fn start_sim(&mut self, h: &BinaryHierarchy, v: NodeId) -> Result<(), HierarchyError> {
        let sim = VertexQuerySim::new(h, v, self.cfg.k_p)?;
        if let Some(resp) = sim.outcome() {
            // Single-node tree: nothing to ask.
            debug_assert_eq!(resp, VertexResponse::TargetHere);
            self.phase = Phase::Done(v);
            return Ok(());
        }
        self.sim = Some(sim);
        Ok(())
    }
}

/// Result of [`robust_find_sibling`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustOutcome {
    pub node: NodeId,
    pub ordinal_queries: u64,
    pub vertex_queries: u64,
    /// Candidate set kept after the reduction phase.
    pub candidates: Vec<NodeId>,
}

/// Finds the sibling of `x` in `h` with probability at least `1 - cfg.delta`
/// when each answer is independently correct with probability `cfg.p`.
pub fn robust_find_sibling<O>(
    h: &BinaryHierarchy,
    x: &ElementId,
    o: &mut O,
    cfg: &RobustConfig,
) -> Result<RobustOutcome, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let mut search = RobustSiblingSearch::new(h, x.clone(), cfg)?;
    while let Some(v) = search.pending_pivot(h) {
        let dir = pivot_query(o, h, v, x)?;
        search.observe(h, dir)?;
    }
    let node = search.result().expect("search without a pending query has finished");
    Ok(RobustOutcome {
        node,
        ordinal_queries: search.ordinal,
        vertex_queries: search.vertex,
        candidates: search.candidates,
    })
}
