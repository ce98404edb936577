use serde::{Deserialize, Serialize};

use super::{BinaryHierarchy, HierarchyError, NodeId};

/// Tree over a vertex subset `V` of a hierarchy, closed under pairwise LCAs.
///
/// Its nodes are `V` plus every vertex of the spanning subtree with
/// retained vertices below both children (the LCA of some pair in `V`).
/// Each edge stands for the hierarchy path between a retained vertex and its
/// nearest retained ancestor, so the paths are vertex-disjoint apart from
/// their endpoints. Every node is a real hierarchy vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractedTree {
    nodes: Vec<NodeId>,
    // Contracted index by hierarchy node id.
    index: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    // First hierarchy step from the contracted parent down toward this node.
    via: Vec<Option<NodeId>>,
    // Hierarchy parent of this node, when that step leads to the contracted parent.
    up: Vec<Option<NodeId>>,
}

impl ContractedTree {
    /// Number of retained vertices.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Hierarchy vertex behind contracted index `i`.
    pub fn node(&self, i: usize) -> NodeId {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index_of(&self, v: NodeId) -> Option<usize> {
        self.index.get(v.0).copied().flatten()
    }

    /// Contracted index of the topmost retained vertex.
    pub fn top(&self) -> usize {
        0
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[i].into_iter().chain(self.children[i].iter().copied())
    }

    /// Maps a step from retained vertex `i` to hierarchy neighbour `toward`
    /// onto the contracted edge that starts with that step. `None` when the
    /// step leaves the retained subtree.
    pub fn project(&self, i: usize, toward: NodeId) -> Option<usize> {
        if self.up[i] == Some(toward) {
            return self.parent[i];
        }
        self.children[i]
            .iter()
            .copied()
            .find(|&j| self.via[j] == Some(toward))
    }
}

impl BinaryHierarchy {
    /// LCA-closed contraction of the vertex set `vertices`.
    pub fn contracted(&self, vertices: &[NodeId]) -> Result<ContractedTree, HierarchyError> {
        if vertices.is_empty() {
            return Err(HierarchyError::EmptyVertexSet);
        }
        let mut wanted = vec![false; self.len()];
        for &v in vertices {
            if !self.contains_node(v) {
                return Err(HierarchyError::UnknownNode(v));
            }
            wanted[v.0] = true;
        }
        let mut below = vec![0usize; self.len()];
        let mut keep = vec![false; self.len()];
        for v in self.postorder() {
            let own = usize::from(wanted[v.0]);
            match self.children(v) {
                None => below[v.0] = own,
                Some([l, r]) => {
                    below[v.0] = own + below[l.0] + below[r.0];
                    keep[v.0] = wanted[v.0] || (below[l.0] > 0 && below[r.0] > 0);
                }
            }
            if self.is_leaf(v) {
                keep[v.0] = wanted[v.0];
            }
        }

        let mut tree = ContractedTree {
            nodes: Vec::new(),
            index: vec![None; self.len()],
            parent: Vec::new(),
            children: Vec::new(),
            via: Vec::new(),
            up: Vec::new(),
        };
        // Pre-order walk carrying (nearest kept ancestor, first step below it).
        let mut stack: Vec<(NodeId, Option<usize>, Option<NodeId>)> = vec![(self.root(), None, None)];
        while let Some((v, anc, step)) = stack.pop() {
            if below[v.0] == 0 {
                continue;
            }
            let (anc, step) = if keep[v.0] {
                let i = tree.nodes.len();
                tree.nodes.push(v);
                tree.index[v.0] = Some(i);
                tree.parent.push(anc);
                tree.children.push(Vec::new());
                tree.via.push(anc.map(|_| step.expect("step recorded below a kept ancestor")));
                tree.up.push(anc.map(|_| self.parent(v).expect("kept descendant has a parent")));
                if let Some(a) = anc {
                    tree.children[a].push(i);
                }
                (Some(i), None)
            } else {
                (anc, step)
            };
            if let Some([l, r]) = self.children(v) {
                for c in [r, l] {
                    let first = match (anc, step) {
                        (Some(_), None) => Some(c),
                        (_, s) => s,
                    };
                    stack.push((c, anc, first));
                }
            }
        }
        Ok(tree)
    }
}
