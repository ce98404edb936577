use serde::{Deserialize, Serialize};

use super::vertex::VertexResponse;
use super::NoisyError;
use crate::hierarchy::{BinaryHierarchy, HierarchyError, NodeId};
use crate::noiseless::balanced_split;

/// Finite stand-in for `ln 0`, so weights stay serializable at `p = 1`.
const LN_ZERO: f64 = -1.0e9;

/// Parameters of the multiplicative-weights candidate reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwConfig {
    pub p: f64,
    pub delta: f64,
    pub c_rounds: f64,
    pub c_keep: f64,
}

impl MwConfig {
    pub fn new(p: f64, delta: f64, c_rounds: f64, c_keep: f64) -> Result<Self, NoisyError> {
        super::check_p(p)?;
        super::check_delta(delta)?;
        if !(c_rounds > 0.0 && c_keep > 0.0) {
            return Err(NoisyError::BadConstant(c_rounds.min(c_keep)));
        }
        Ok(MwConfig {
            p,
            delta,
            c_rounds,
            c_keep,
        })
    }

    fn scale(&self, n: usize) -> f64 {
        (n.max(1) as f64).log2() + (1.0 / self.delta).ln()
    }

    /// Number of reweighting rounds for a tree with `n` nodes.
    pub fn rounds(&self, n: usize) -> usize {
        (self.c_rounds * self.scale(n)).ceil() as usize
    }

    /// Size of the returned candidate set for a tree with `n` nodes.
    pub fn keep(&self, n: usize) -> usize {
        (self.c_keep * self.scale(n)).ceil() as usize
    }

    /// Diagnostic `λ(p) = (1 + p log p + (1-p) log(1-p)) / (2 log(p/(1-p)))`,
    /// logs base 2. Zero at `p = 1` by continuity of the numerator terms.
    pub fn lambda(&self) -> f64 {
        lambda(self.p)
    }
}

pub fn lambda(p: f64) -> f64 {
    let xlx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    let denom = 2.0 * (p / (1.0 - p)).log2();
    if denom.is_infinite() {
        return 0.0;
    }
    (1.0 + xlx(p) + xlx(1.0 - p)) / denom
}

/// Resumable candidate reduction: query [`pending`](Self::pending), feed the
/// vertex response back, and read [`candidates`](Self::candidates) once done.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwReducer {
    log_w: Vec<f64>,
    ln_p: f64,
    ln_q: f64,
    rounds: usize,
    done: usize,
    keep: usize,
    query: Option<NodeId>,
}

impl MwReducer {
    /// `n` enters the round and keep formulas; callers pass the node count of `h`.
    pub fn new(h: &BinaryHierarchy, cfg: &MwConfig, n: usize) -> Self {
        let ln_q = if cfg.p >= 1.0 { LN_ZERO } else { (1.0 - cfg.p).ln() };
        let mut mw = MwReducer {
            log_w: vec![0.0; h.len()],
            ln_p: cfg.p.ln(),
            ln_q,
            rounds: cfg.rounds(n),
            done: 0,
            keep: cfg.keep(n).min(h.len()),
            query: None,
        };
        mw.query = mw.next_query(h);
        mw
    }

    fn next_query(&self, h: &BinaryHierarchy) -> Option<NodeId> {
        if self.done >= self.rounds {
            return None;
        }
        balanced_split(h, &self.weights(), true)
    }

    /// Vertex to query next; `None` after the last round.
    pub fn pending(&self) -> Option<NodeId> {
        self.query
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn rounds_done(&self) -> usize {
        self.done
    }

    pub fn is_done(&self) -> bool {
        self.query.is_none()
    }

    /// Weights scaled so the largest is 1.
    pub fn weights(&self) -> Vec<f64> {
        let top = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_w.iter().map(|&lw| (lw - top).exp()).collect()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn observe(&mut self, h: &BinaryHierarchy, resp: VertexResponse<NodeId>) -> Result<(), HierarchyError> {
        let v = self
            .query
            .ok_or_else(|| HierarchyError::Malformed("reduction already finished".into()))?;
        let consistent = consistent_nodes(h, v, resp)?;
        for (lw, ok) in self.log_w.iter_mut().zip(consistent) {
            *lw += if ok { self.ln_p } else { self.ln_q };
        }
        self.done += 1;
        self.query = self.next_query(h);
        Ok(())
    }

    /// The heaviest nodes, heaviest first, ties by node id.
    pub fn candidates(&self) -> Vec<NodeId> {
        let mut order: Vec<usize> = (0..self.log_w.len()).collect();
        order.sort_by(|&a, &b| self.log_w[b].total_cmp(&self.log_w[a]).then(a.cmp(&b)));
        order.truncate(self.keep);
        order.into_iter().map(NodeId).collect()
    }
}

/// Membership mask of the nodes consistent with response `resp` at `v`.
pub fn consistent_nodes(
    h: &BinaryHierarchy,
    v: NodeId,
    resp: VertexResponse<NodeId>,
) -> Result<Vec<bool>, HierarchyError> {
    let mut mask = vec![false; h.len()];
    match resp {
        VertexResponse::TargetHere => mask[v.0] = true,
        VertexResponse::Toward(u) if h.parent(u) == Some(v) => {
            for w in h.subtree_nodes(u) {
                mask[w.0] = true;
            }
        }
        VertexResponse::Toward(u) if h.parent(v) == Some(u) => {
            mask.iter_mut().for_each(|m| *m = true);
            for w in h.subtree_nodes(v) {
                mask[w.0] = false;
            }
        }
        VertexResponse::Toward(u) => {
            return Err(HierarchyError::Malformed(format!("{u} is not adjacent to {v}")));
        }
    }
    Ok(mask)
}

/// Runs the whole reduction against a vertex oracle `vq`.
pub fn mw_reduce<F>(h: &BinaryHierarchy, mut vq: F, cfg: &MwConfig, n: usize) -> Result<Vec<NodeId>, HierarchyError>
where
    F: FnMut(NodeId) -> Result<VertexResponse<NodeId>, HierarchyError>,
{
    let mut mw = MwReducer::new(h, cfg, n);
    while let Some(v) = mw.pending() {
        let resp = vq(v)?;
        mw.observe(h, resp)?;
    }
    Ok(mw.candidates())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noisy::vertex::true_vertex_response;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_and_keep_counts() {
        let cfg = MwConfig::new(0.8, 0.05, 8.0, 4.0).unwrap();
        let scale = 511f64.log2() + 20f64.ln();
        assert_eq!(cfg.rounds(511), (8.0 * scale).ceil() as usize);
        assert_eq!(cfg.keep(511), (4.0 * scale).ceil() as usize);
        assert!(MwConfig::new(0.5, 0.05, 8.0, 4.0).is_err());
        assert!(MwConfig::new(0.8, 0.0, 8.0, 4.0).is_err());
        assert!(MwConfig::new(0.8, 0.1, 0.0, 4.0).is_err());
    }

    #[test]
    fn lambda_values() {
        assert!((lambda(0.8) - 0.0695).abs() < 1e-3);
        assert_eq!(lambda(1.0), 0.0);
        assert!(lambda(0.9) > lambda(0.7));
    }

    #[test]
    fn consistent_sets_are_components() {
        let h = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let a = h.node_of(&crate::hierarchy::ElementId::new("a").unwrap()).unwrap();
        let u1 = h.parent(a).unwrap();
        let u2 = h.parent(u1).unwrap();
        let count = |m: Vec<bool>| m.into_iter().filter(|&b| b).count();
        assert_eq!(count(consistent_nodes(&h, u1, VertexResponse::TargetHere).unwrap()), 1);
        assert_eq!(count(consistent_nodes(&h, u1, VertexResponse::Toward(a)).unwrap()), 1);
        let up = consistent_nodes(&h, u1, VertexResponse::Toward(u2)).unwrap();
        assert_eq!(count(up.clone()), 4);
        assert!(!up[u1.0] && up[u2.0] && up[h.root().0]);
        assert!(consistent_nodes(&h, u1, VertexResponse::Toward(h.root())).is_err());
    }

    #[test]
    fn perfect_answers_isolate_the_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let h = BinaryHierarchy::random(rng.gen_range(2..60), &mut rng).unwrap();
            let target = NodeId(rng.gen_range(0..h.len()));
            let cfg = MwConfig::new(1.0, 0.1, 8.0, 4.0).unwrap();
            let mut mw = MwReducer::new(&h, &cfg, h.len());
            while let Some(v) = mw.pending() {
                mw.observe(&h, true_vertex_response(&h, target, v)).unwrap();
            }
            let w = mw.weights();
            assert_eq!(w[target.0], 1.0);
            for (i, &wi) in w.iter().enumerate() {
                if i != target.0 {
                    assert_eq!(wi, 0.0);
                }
            }
            let cands = mw.candidates();
            assert_eq!(cands[0], target);
            assert_eq!(cands.len(), cfg.keep(h.len()).min(h.len()));
            serde_json::to_string(&mw).unwrap();
        }
    }

    #[test]
    fn weights_stay_positive_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = BinaryHierarchy::random(64, &mut rng).unwrap();
        let target = NodeId(17);
        let cfg = MwConfig::new(0.7, 0.05, 8.0, 4.0).unwrap();
        let mut mw = MwReducer::new(&h, &cfg, h.len());
        while let Some(v) = mw.pending() {
            let truth = true_vertex_response(&h, target, v);
            let resp = if rng.gen_bool(0.7) {
                truth
            } else {
                let nbrs: Vec<_> = h.neighbors(v).collect();
                let mut options: Vec<VertexResponse<NodeId>> =
                    nbrs.into_iter().map(VertexResponse::Toward).collect();
                options.push(VertexResponse::TargetHere);
                options.retain(|r| *r != truth);
                options[rng.gen_range(0..options.len())]
            };
            mw.observe(&h, resp).unwrap();
            assert!(mw.log_weights().iter().all(|w| w.is_finite()));
        }
        assert!(mw.candidates().contains(&target));
    }
}
