use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vertex::VertexResponse;
use super::NoisyError;
use crate::hierarchy::{BinaryHierarchy, ContractedTree, HierarchyError, NodeId};

/// Undirected tree with vertices `0..vertex_count()`.
pub trait SearchTree {
    fn vertex_count(&self) -> usize;
    fn adjacent(&self, v: usize) -> Vec<usize>;
}

impl SearchTree for BinaryHierarchy {
    fn vertex_count(&self) -> usize {
        self.len()
    }

    fn adjacent(&self, v: usize) -> Vec<usize> {
        self.neighbors(NodeId(v)).map(NodeId::index).collect()
    }
}

impl SearchTree for ContractedTree {
    fn vertex_count(&self) -> usize {
        self.len()
    }

    fn adjacent(&self, v: usize) -> Vec<usize> {
        self.neighbors(v).collect()
    }
}

/// Plain adjacency-list tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyTree {
    adj: Vec<Vec<usize>>,
}

impl AdjacencyTree {
    /// Builds a tree from an edge list over `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, HierarchyError> {
        if n == 0 || edges.len() + 1 != n {
            return Err(HierarchyError::Malformed(format!(
                "{} edges cannot span {n} vertices as a tree",
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(HierarchyError::Malformed(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let tree = AdjacencyTree { adj };
        if distances(&tree, 0).iter().any(|&d| d == u32::MAX) {
            return Err(HierarchyError::Malformed("edges do not connect all vertices".into()));
        }
        Ok(tree)
    }

    /// Random tree of diameter exactly `diameter`: a spine path plus `extra`
    /// vertices hung so that no path gets longer than the spine.
    pub fn random_with_diameter<R: Rng + ?Sized>(diameter: usize, extra: usize, rng: &mut R) -> Self {
        let spine = diameter + 1;
        let mut adj = vec![Vec::new(); spine];
        // Distance from each vertex to the nearer spine end, measured along the spine.
        let mut reach: Vec<usize> = (0..spine).map(|i| i.min(diameter - i)).collect();
        let mut depth = vec![0usize; spine];
        for i in 1..spine {
            adj[i - 1].push(i);
            adj[i].push(i - 1);
        }
        for _ in 0..extra {
            // A child at depth d + 1 under a vertex whose spine anchor sits
            // `reach` from the nearer end keeps the diameter when
            // d + 1 <= reach of the anchor.
            let candidates: Vec<usize> = (0..adj.len()).filter(|&v| depth[v] < reach[v]).collect();
            if candidates.is_empty() {
                break;
            }
            let parent = candidates[rng.gen_range(0..candidates.len())];
            let v = adj.len();
            adj.push(vec![parent]);
            adj[parent].push(v);
            depth.push(depth[parent] + 1);
            reach.push(reach[parent]);
        }
        AdjacencyTree { adj }
    }
}

impl SearchTree for AdjacencyTree {
    fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    fn adjacent(&self, v: usize) -> Vec<usize> {
        self.adj[v].clone()
    }
}

/// BFS distances from `from`; unreachable vertices get `u32::MAX`.
pub fn distances<T: SearchTree + ?Sized>(tree: &T, from: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; tree.vertex_count()];
    let mut queue = VecDeque::from([from]);
    dist[from] = 0;
    while let Some(v) = queue.pop_front() {
        for u in tree.adjacent(v) {
            if dist[u] == u32::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Diameter by two breadth-first sweeps.
pub fn diameter<T: SearchTree + ?Sized>(tree: &T) -> usize {
    if tree.vertex_count() == 0 {
        return 0;
    }
    let first = distances(tree, 0);
    let far = (0..first.len()).max_by_key(|&v| (first[v], std::cmp::Reverse(v))).unwrap();
    let second = distances(tree, far);
    second.into_iter().max().unwrap_or(0) as usize
}

/// Correct response to a vertex query at `v` when the target is `target`.
pub fn true_response<T: SearchTree + ?Sized>(tree: &T, dist_to_target: &[u32], v: usize) -> VertexResponse<usize> {
    if dist_to_target[v] == 0 {
        return VertexResponse::TargetHere;
    }
    let next = tree
        .adjacent(v)
        .into_iter()
        .find(|&u| dist_to_target[u] < dist_to_target[v])
        .expect("a non-target vertex has a neighbour closer to the target");
    VertexResponse::Toward(next)
}

/// Number of walk iterations: `ceil(max(2(D+1)/(2p-1), 8 ln(1/δ)/(2p-1)^2))`.
pub fn walk_iterations(diameter: usize, p: f64, delta: f64) -> Result<u64, NoisyError> {
    super::check_p(p)?;
    super::check_delta(delta)?;
    let gap = 2.0 * p - 1.0;
    let by_distance = 2.0 * (diameter as f64 + 1.0) / gap;
    let by_confidence = 8.0 * (1.0 / delta).ln() / (gap * gap);
    Ok(by_distance.max(by_confidence).ceil() as u64)
}

/// One logged walk iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStep {
    pub iteration: u64,
    pub query: usize,
    pub response: VertexResponse<usize>,
    /// Counter of the queried vertex after the update.
    pub counter: u32,
    /// Potential of the target after the update.
    pub potential: i64,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Instrument {
    target: usize,
    dist: Vec<u32>,
    initial: i64,
    steps: Vec<WalkStep>,
}

/// State of the counter walk: per-vertex counters, the current query vertex
/// and the iteration number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkState {
    counters: Vec<u32>,
    current: usize,
    iteration: u64,
    total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instrument: Option<Instrument>,
}

impl WalkState {
    /// Walk over `tree` starting at `start`, with the iteration count for the
    /// tree's diameter.
    pub fn new<T: SearchTree + ?Sized>(tree: &T, p: f64, delta: f64, start: usize) -> Result<Self, NoisyError> {
        let total = walk_iterations(diameter(tree), p, delta)?;
        Ok(Self::with_iterations(tree.vertex_count(), total, start))
    }

    pub fn with_iterations(vertices: usize, total: u64, start: usize) -> Self {
        WalkState {
            counters: vec![0; vertices],
            current: start,
            iteration: 0,
            total,
            instrument: None,
        }
    }

    /// Records the target's potential and each step's correctness.
    pub fn instrument<T: SearchTree + ?Sized>(&mut self, tree: &T, target: usize) {
        let dist = distances(tree, target);
        let mut inst = Instrument {
            target,
            dist,
            initial: 0,
            steps: Vec::new(),
        };
        inst.initial = self.potential_with(&inst);
        self.instrument = Some(inst);
    }

    fn potential_with(&self, inst: &Instrument) -> i64 {
        let others: i64 = self
            .counters
            .iter()
            .enumerate()
            .filter(|&(v, _)| v != inst.target)
            .map(|(_, &c)| i64::from(c))
            .sum();
        i64::from(inst.dist[self.current]) - i64::from(self.counters[inst.target]) + others
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn total_iterations(&self) -> u64 {
        self.total
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.total
    }

    pub fn counter(&self, v: usize) -> u32 {
        self.counters[v]
    }

    /// Vertices whose counter is positive.
    pub fn positive_counters(&self) -> Vec<usize> {
        (0..self.counters.len()).filter(|&v| self.counters[v] > 0).collect()
    }

    /// Target potential before the first step, when instrumented.
    pub fn initial_potential(&self) -> Option<i64> {
        self.instrument.as_ref().map(|i| i.initial)
    }

    pub fn trace(&self) -> Option<&[WalkStep]> {
        self.instrument.as_ref().map(|i| i.steps.as_slice())
    }

    /// Applies the response to the current query.
    pub fn observe(&mut self, resp: VertexResponse<usize>) {
        let q = self.current;
        match resp {
            VertexResponse::TargetHere => self.counters[q] += 1,
            VertexResponse::Toward(_) if self.counters[q] > 0 => self.counters[q] -= 1,
            VertexResponse::Toward(u) => self.current = u,
        }
        self.iteration += 1;
        if let Some(mut inst) = self.instrument.take() {
            let correct = match resp {
                VertexResponse::TargetHere => q == inst.target,
                VertexResponse::Toward(u) => inst.dist[u] < inst.dist[q],
            };
            let step = WalkStep {
                iteration: self.iteration,
                query: q,
                response: resp,
                counter: self.counters[q],
                potential: self.potential_with(&inst),
                correct,
            };
            inst.steps.push(step);
            self.instrument = Some(inst);
        }
    }

    /// Trace as CSV: `iteration,q,response,counter,phi`.
    pub fn trace_csv(&self) -> Option<String> {
        let steps = self.trace()?;
        let mut out = String::from("iteration,q,response,counter,phi\n");
        for s in steps {
            let resp = match s.response {
                VertexResponse::TargetHere => "here".to_string(),
                VertexResponse::Toward(u) => format!("toward:{u}"),
            };
            writeln!(out, "{},{},{},{},{}", s.iteration, s.query, resp, s.counter, s.potential).unwrap();
        }
        Some(out)
    }
}

/// Result of a finished walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub node: usize,
    pub iterations: u64,
}

/// Runs the counter walk from vertex 0 with vertex oracle `vq`.
pub fn tree_walk<T, F>(tree: &T, mut vq: F, p: f64, delta: f64) -> Result<WalkOutcome, NoisyError>
where
    T: SearchTree + ?Sized,
    F: FnMut(usize) -> VertexResponse<usize>,
{
    let mut state = WalkState::new(tree, p, delta, 0)?;
    while !state.is_done() {
        let resp = vq(state.current());
        state.observe(resp);
    }
    Ok(WalkOutcome {
        node: state.current(),
        iterations: state.iteration(),
    })
}

/// Like [`tree_walk`], keeping the potential trace for a known target.
pub fn tree_walk_traced<T, F>(tree: &T, mut vq: F, p: f64, delta: f64, target: usize) -> Result<WalkState, NoisyError>
where
    T: SearchTree + ?Sized,
    F: FnMut(usize) -> VertexResponse<usize>,
{
    let mut state = WalkState::new(tree, p, delta, 0)?;
    state.instrument(tree, target);
    while !state.is_done() {
        let resp = vq(state.current());
        state.observe(resp);
    }
    Ok(state)
}
