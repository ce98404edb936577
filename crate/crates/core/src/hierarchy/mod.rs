//! Rooted binary hierarchies over labelled elements.
//!
//! A [`BinaryHierarchy`] is stored as an index-stable node table: node ids
//! never change once allocated, so algorithms that grow a tree by splicing
//! in new parents can keep referring to nodes across steps.

mod contract;
mod export;
mod laminar;
mod newick;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contract::ContractedTree;
pub use export::JsonNode;
pub use laminar::LaminarFamily;

/// Errors raised while building or querying hierarchies.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("element labels must be non-empty")]
    EmptyLabel,
    #[error("unknown element `{0}`")]
    UnknownElement(ElementId),
    #[error("duplicate element `{0}`")]
    DuplicateElement(ElementId),
    #[error("a triplet needs three distinct elements")]
    DegenerateTriplet,
    #[error("pair {{{0}, {1}}} is not contained in the triplet")]
    PairNotInTriplet(ElementId, ElementId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is a leaf")]
    LeafNode(NodeId),
    #[error("need at least {required} elements, got {got}")]
    TooFewElements { required: usize, got: usize },
    #[error("the hierarchies are over different element sets")]
    LeafSetMismatch,
    #[error("family is not laminar: {0}")]
    NotLaminar(String),
    #[error("family is not binary: {0}")]
    NonBinary(String),
    #[error("vertex set is empty")]
    EmptyVertexSet,
    #[error("newick: {0}")]
    Newick(String),
    #[error("malformed node table: {0}")]
    Malformed(String),
    #[error("answers are inconsistent with every hierarchy")]
    Inconsistent,
}

/// Label of an element (a leaf of the hierarchy).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(Arc<str>);

impl ElementId {
    pub fn new(label: impl AsRef<str>) -> Result<Self, HierarchyError> {
        let label = label.as_ref();
        if label.is_empty() {
            return Err(HierarchyError::EmptyLabel);
        }
        Ok(ElementId(Arc::from(label)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ElementId {
    type Err = HierarchyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementId::new(s)
    }
}

impl fmt::Debug for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds `n` default labels `x1..xn`.
pub fn default_labels(n: usize) -> Vec<ElementId> {
    (1..=n)
        .map(|i| ElementId(Arc::from(format!("x{i}"))))
        .collect()
}

/// Parses a list of labels, rejecting empty and duplicate ones.
pub fn labels<S: AsRef<str>>(raw: &[S]) -> Result<Vec<ElementId>, HierarchyError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for s in raw {
        let id = ElementId::new(s)?;
        if !seen.insert(id.clone()) {
            return Err(HierarchyError::DuplicateElement(id));
        }
        out.push(id);
    }
    Ok(out)
}

/// Stable index of a node in a [`BinaryHierarchy`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An ordinal query: three distinct elements, stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    members: [ElementId; 3],
}

impl Triplet {
    pub fn new(a: ElementId, b: ElementId, c: ElementId) -> Result<Self, HierarchyError> {
        if a == b || a == c || b == c {
            return Err(HierarchyError::DegenerateTriplet);
        }
        let mut members = [a, b, c];
        members.sort();
        Ok(Triplet { members })
    }

    pub fn members(&self) -> &[ElementId; 3] {
        &self.members
    }

    pub fn contains(&self, x: &ElementId) -> bool {
        self.members.contains(x)
    }

    /// The three possible answers, in a fixed order.
    pub fn pairs(&self) -> [TripletAnswer; 3] {
        let [a, b, c] = &self.members;
        [
            TripletAnswer::unchecked(a.clone(), b.clone()),
            TripletAnswer::unchecked(a.clone(), c.clone()),
            TripletAnswer::unchecked(b.clone(), c.clone()),
        ]
    }

    /// Builds the answer naming `a` and `b` as the closest pair.
    pub fn answer(&self, a: &ElementId, b: &ElementId) -> Result<TripletAnswer, HierarchyError> {
        if a == b || !self.contains(a) || !self.contains(b) {
            return Err(HierarchyError::PairNotInTriplet(a.clone(), b.clone()));
        }
        Ok(TripletAnswer::unchecked(a.clone(), b.clone()))
    }

    /// The member that is not part of `pair`.
    pub fn odd_one_out(&self, pair: &TripletAnswer) -> &ElementId {
        self.members
            .iter()
            .find(|m| !pair.contains(m))
            .expect("answer pair is a strict subset of the triplet")
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.members;
        write!(f, "{{{a}, {b}, {c}}}")
    }
}

/// Response to an ordinal query: the unordered closest pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripletAnswer {
    pair: [ElementId; 2],
}

impl TripletAnswer {
    fn unchecked(a: ElementId, b: ElementId) -> Self {
        if a <= b {
            TripletAnswer { pair: [a, b] }
        } else {
            TripletAnswer { pair: [b, a] }
        }
    }

    pub fn pair(&self) -> &[ElementId; 2] {
        &self.pair
    }

    pub fn contains(&self, x: &ElementId) -> bool {
        self.pair.contains(x)
    }

    pub fn is_within(&self, t: &Triplet) -> bool {
        self.pair[0] != self.pair[1] && t.contains(&self.pair[0]) && t.contains(&self.pair[1])
    }
}

impl fmt::Display for TripletAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.pair[0], self.pair[1])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    parent: Option<NodeId>,
    children: Option<[NodeId; 2]>,
    label: Option<ElementId>,
    // Leaf with the smallest label in this subtree; used as pivot representative.
    min_leaf: NodeId,
}

/// A rooted binary tree whose leaves are the elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHierarchy", into = "RawHierarchy")]
pub struct BinaryHierarchy {
    nodes: Vec<Node>,
    root: NodeId,
    leaves: HashMap<ElementId, NodeId>,
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    parent: Option<usize>,
    children: Option<[usize; 2]>,
    label: Option<ElementId>,
}

#[derive(Serialize, Deserialize)]
struct RawHierarchy {
    root: usize,
    nodes: Vec<RawNode>,
}

impl From<BinaryHierarchy> for RawHierarchy {
    fn from(h: BinaryHierarchy) -> Self {
        RawHierarchy {
            root: h.root.0,
            nodes: h
                .nodes
                .into_iter()
                .map(|n| RawNode {
                    parent: n.parent.map(|p| p.0),
                    children: n.children.map(|[l, r]| [l.0, r.0]),
                    label: n.label,
                })
                .collect(),
        }
    }
}

impl TryFrom<RawHierarchy> for BinaryHierarchy {
    type Error = HierarchyError;

    fn try_from(raw: RawHierarchy) -> Result<Self, Self::Error> {
        let len = raw.nodes.len();
        let bad = |msg: &str| HierarchyError::Malformed(msg.to_string());
        if raw.root >= len {
            return Err(bad("root out of range"));
        }
        let mut nodes = Vec::with_capacity(len);
        for (i, n) in raw.nodes.into_iter().enumerate() {
            let in_range = |j: usize| j < len;
            if n.parent.is_some_and(|p| !in_range(p))
                || n.children.is_some_and(|[l, r]| !in_range(l) || !in_range(r) || l == r)
            {
                return Err(bad("node reference out of range"));
            }
            if n.children.is_some() == n.label.is_some() {
                return Err(bad("every node is either a labelled leaf or has two children"));
            }
            nodes.push(Node {
                parent: n.parent.map(NodeId),
                children: n.children.map(|[l, r]| [NodeId(l), NodeId(r)]),
                label: n.label,
                min_leaf: NodeId(i),
            });
        }
        if nodes[raw.root].parent.is_some() {
            return Err(bad("root has a parent"));
        }
        for i in 0..len {
            if let Some(cs) = nodes[i].children {
                for c in cs {
                    if nodes[c.0].parent != Some(NodeId(i)) {
                        return Err(bad("child/parent links disagree"));
                    }
                }
            }
        }
        let mut h = BinaryHierarchy {
            nodes,
            root: NodeId(raw.root),
            leaves: HashMap::new(),
        };
        let order = h.postorder();
        if order.len() != len {
            return Err(bad("nodes unreachable from root"));
        }
        for v in order {
            match h.nodes[v.0].children {
                None => {
                    let label = h.nodes[v.0].label.clone().expect("leaf has label");
                    if h.leaves.insert(label.clone(), v).is_some() {
                        return Err(HierarchyError::DuplicateElement(label));
                    }
                }
                Some(_) => h.refresh_min_leaf(v),
            }
        }
        Ok(h)
    }
}

/// Accumulates nodes bottom-up; used by every constructor.
pub(crate) struct TableBuilder {
    nodes: Vec<Node>,
}

impl TableBuilder {
    pub(crate) fn new() -> Self {
        TableBuilder { nodes: Vec::new() }
    }

    pub(crate) fn leaf(&mut self, label: ElementId) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            parent: None,
            children: None,
            label: Some(label),
            min_leaf: id,
        });
        id
    }

    pub(crate) fn internal(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes[left.0].parent = Some(id);
        self.nodes[right.0].parent = Some(id);
        self.nodes.push(Node {
            parent: None,
            children: Some([left, right]),
            label: None,
            min_leaf: id,
        });
        id
    }

    pub(crate) fn finish(self, root: NodeId) -> Result<BinaryHierarchy, HierarchyError> {
        // Route through the validating conversion so duplicates are caught.
        let raw = RawHierarchy {
            root: root.0,
            nodes: self
                .nodes
                .into_iter()
                .map(|n| RawNode {
                    parent: n.parent.map(|p| p.0),
                    children: n.children.map(|[l, r]| [l.0, r.0]),
                    label: n.label,
                })
                .collect(),
        };
        BinaryHierarchy::try_from(raw)
    }
}

impl BinaryHierarchy {
    /// A single-leaf hierarchy.
    pub fn leaf(x: ElementId) -> Self {
        let mut b = TableBuilder::new();
        let root = b.leaf(x);
        b.finish(root).expect("single leaf is valid")
    }

    /// The unique hierarchy on two elements.
    pub fn cherry(a: ElementId, b: ElementId) -> Result<Self, HierarchyError> {
        let mut t = TableBuilder::new();
        let l = t.leaf(a);
        let r = t.leaf(b);
        let root = t.internal(l, r);
        t.finish(root)
    }

    /// Puts `left` and `right` under a new root. Element sets must be disjoint.
    pub fn join(left: &BinaryHierarchy, right: &BinaryHierarchy) -> Result<Self, HierarchyError> {
        let mut t = TableBuilder::new();
        let l = t.copy_subtree(left, left.root);
        let r = t.copy_subtree(right, right.root);
        let root = t.internal(l, r);
        t.finish(root)
    }

    /// Caterpillar `(((l1,l2),l3),...)`: the maximally unbalanced shape.
    pub fn caterpillar(labels: &[ElementId]) -> Result<Self, HierarchyError> {
        let (first, rest) = labels.split_first().ok_or(HierarchyError::TooFewElements {
            required: 1,
            got: 0,
        })?;
        let mut t = TableBuilder::new();
        let mut acc = t.leaf(first.clone());
        for x in rest {
            let l = t.leaf(x.clone());
            acc = t.internal(acc, l);
        }
        t.finish(acc)
    }

    /// Balanced hierarchy: the label list is split in halves recursively.
    pub fn balanced(labels: &[ElementId]) -> Result<Self, HierarchyError> {
        fn build(t: &mut TableBuilder, labels: &[ElementId]) -> NodeId {
            if labels.len() == 1 {
                return t.leaf(labels[0].clone());
            }
            let mid = labels.len().div_ceil(2);
            let l = build(t, &labels[..mid]);
            let r = build(t, &labels[mid..]);
            t.internal(l, r)
        }
        if labels.is_empty() {
            return Err(HierarchyError::TooFewElements {
                required: 1,
                got: 0,
            });
        }
        let mut t = TableBuilder::new();
        let root = build(&mut t, labels);
        t.finish(root)
    }

    /// Uniformly random topology over `x1..xn`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, HierarchyError> {
        Self::random_over(&default_labels(n), rng)
    }

    /// Uniformly random topology over the given labels.
    ///
    /// Sequential attachment: leaf `i+1` subdivides a uniformly chosen edge of
    /// the current tree, root edge included. Every node owns exactly one such
    /// edge (the one above it), so picking a node uniformly is enough. Each of
    /// the `(2n-3)!!` topologies comes out with equal probability.
    pub fn random_over<R: Rng + ?Sized>(
        labels: &[ElementId],
        rng: &mut R,
    ) -> Result<Self, HierarchyError> {
        if labels.len() < 2 {
            return Err(HierarchyError::TooFewElements {
                required: 2,
                got: labels.len(),
            });
        }
        let mut h = Self::cherry(labels[0].clone(), labels[1].clone())?;
        for x in &labels[2..] {
            let v = NodeId(rng.gen_range(0..h.len()));
            h.insert_sibling(v, x.clone())?;
        }
        Ok(h)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of nodes (leaves and internal).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        v.0 < self.nodes.len()
    }

    fn check(&self, v: NodeId) -> Result<(), HierarchyError> {
        if self.contains_node(v) {
            Ok(())
        } else {
            Err(HierarchyError::UnknownNode(v))
        }
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.nodes[v.0].children.is_none()
    }

    pub fn children(&self, v: NodeId) -> Option<[NodeId; 2]> {
        self.nodes[v.0].children
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.nodes[v.0].parent
    }

    pub fn label(&self, v: NodeId) -> Option<&ElementId> {
        self.nodes[v.0].label.as_ref()
    }

    pub fn node_of(&self, x: &ElementId) -> Option<NodeId> {
        self.leaves.get(x).copied()
    }

    pub fn contains(&self, x: &ElementId) -> bool {
        self.leaves.contains_key(x)
    }

    /// Elements of the hierarchy, sorted.
    pub fn elements(&self) -> Vec<ElementId> {
        let mut v: Vec<_> = self.leaves.keys().cloned().collect();
        v.sort();
        v
    }

    /// Smallest-label leaf below `v`.
    pub fn representative(&self, v: NodeId) -> &ElementId {
        let leaf = self.nodes[v.0].min_leaf;
        self.nodes[leaf.0].label.as_ref().expect("min_leaf is a leaf")
    }

    /// Undirected neighbours of `v`: parent first, then children.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let n = &self.nodes[v.0];
        n.parent.into_iter().chain(n.children.into_iter().flatten())
    }

    pub fn depth(&self, mut v: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[v.0].parent {
            v = p;
            d += 1;
        }
        d
    }

    /// Depth of every node, indexed by node id.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            if let Some(cs) = self.nodes[v.0].children {
                for c in cs {
                    depth[c.0] = depth[v.0] + 1;
                    stack.push(c);
                }
            }
        }
        depth
    }

    /// Nodes in post-order (children before parents).
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            match (expanded, self.nodes[v.0].children) {
                (false, Some([l, r])) => {
                    stack.push((v, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => out.push(v),
            }
        }
        out
    }

    /// All nodes of the subtree rooted at `v`, `v` included.
    pub fn subtree_nodes(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            if let Some(cs) = self.nodes[u.0].children {
                stack.extend(cs);
            }
        }
        out
    }

    /// Elements below `v`, sorted.
    pub fn subtree_leaves(&self, v: NodeId) -> Vec<ElementId> {
        let mut out: Vec<_> = self
            .subtree_nodes(v)
            .into_iter()
            .filter_map(|u| self.nodes[u.0].label.clone())
            .collect();
        out.sort();
        out
    }

    /// True when `a` is `b` or an ancestor of `b`.
    pub fn is_ancestor_or_self(&self, a: NodeId, mut b: NodeId) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.nodes[b.0].parent {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (da, db) = (self.depth(a), self.depth(b));
        self.lca_at_depths(a, da, b, db)
    }

    fn lca_at_depths(&self, mut a: NodeId, mut da: usize, mut b: NodeId, mut db: usize) -> NodeId {
        while da > db {
            a = self.nodes[a.0].parent.expect("deeper node has parent");
            da -= 1;
        }
        while db > da {
            b = self.nodes[b.0].parent.expect("deeper node has parent");
            db -= 1;
        }
        while a != b {
            a = self.nodes[a.0].parent.expect("distinct nodes below root");
            b = self.nodes[b.0].parent.expect("distinct nodes below root");
        }
        a
    }

    /// LCA using a precomputed depth table (see [`depths`](Self::depths)).
    pub fn lca_with(&self, depth: &[u32], a: NodeId, b: NodeId) -> NodeId {
        self.lca_at_depths(a, depth[a.0] as usize, b, depth[b.0] as usize)
    }

    /// Ground-truth answer to `t`: the pair whose LCA is strictly deepest.
    pub fn triplet_answer(&self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        let [a, b, c] = t.members();
        let leaf = |x: &ElementId| {
            self.node_of(x)
                .ok_or_else(|| HierarchyError::UnknownElement(x.clone()))
        };
        let (na, nb, nc) = (leaf(a)?, leaf(b)?, leaf(c)?);
        let ab = self.depth(self.lca(na, nb));
        let ac = self.depth(self.lca(na, nc));
        let bc = self.depth(self.lca(nb, nc));
        Ok(closest_of(t, ab, ac, bc))
    }

    pub(crate) fn triplet_answer_with(
        &self,
        depth: &[u32],
        t: &Triplet,
    ) -> Result<TripletAnswer, HierarchyError> {
        let [a, b, c] = t.members();
        let leaf = |x: &ElementId| {
            self.node_of(x)
                .ok_or_else(|| HierarchyError::UnknownElement(x.clone()))
        };
        let (na, nb, nc) = (leaf(a)?, leaf(b)?, leaf(c)?);
        let d = |u: NodeId, v: NodeId| depth[self.lca_with(depth, u, v).0] as usize;
        Ok(closest_of(t, d(na, nb), d(na, nc), d(nb, nc)))
    }

    /// Canonical string: leaves print their label, internal nodes print
    /// their two child strings sorted lexicographically inside parentheses.
    pub fn canonical_form(&self) -> String {
        let mut forms: Vec<Option<String>> = vec![None; self.nodes.len()];
        for v in self.postorder() {
            let s = match self.nodes[v.0].children {
                None => self.nodes[v.0].label.as_ref().unwrap().to_string(),
                Some([l, r]) => {
                    let a = forms[l.0].take().unwrap();
                    let b = forms[r.0].take().unwrap();
                    let (a, b) = if a <= b { (a, b) } else { (b, a) };
                    format!("({a},{b})")
                }
            };
            forms[v.0] = Some(s);
        }
        forms[self.root.0].take().unwrap()
    }

    /// Clusters as sets of ranks into the sorted element list.
    fn cluster_ranks(&self, rank: &HashMap<&ElementId, usize>) -> BTreeSet<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut out = BTreeSet::new();
        for v in self.postorder() {
            let s = match self.nodes[v.0].children {
                None => vec![rank[self.nodes[v.0].label.as_ref().unwrap()]],
                Some([l, r]) => {
                    let mut s = sets[l.0].clone();
                    s.extend_from_slice(&sets[r.0]);
                    s.sort_unstable();
                    s
                }
            };
            out.insert(s.clone());
            sets[v.0] = s;
        }
        out
    }

    /// Whether both hierarchies induce the same family of clusters.
    pub fn equivalent(&self, other: &BinaryHierarchy) -> Result<bool, HierarchyError> {
        let mine = self.elements();
        if mine != other.elements() {
            return Err(HierarchyError::LeafSetMismatch);
        }
        let rank: HashMap<&ElementId, usize> = mine.iter().enumerate().map(|(i, x)| (x, i)).collect();
        Ok(self.cluster_ranks(&rank) == other.cluster_ranks(&rank))
    }

    /// The hierarchy induced on `subset`: drop other leaves, then contract
    /// single-child nodes.
    pub fn induced(&self, subset: &[ElementId]) -> Result<BinaryHierarchy, HierarchyError> {
        let mut keep = vec![false; self.nodes.len()];
        let mut distinct = 0;
        for x in subset {
            let v = self
                .node_of(x)
                .ok_or_else(|| HierarchyError::UnknownElement(x.clone()))?;
            if !keep[v.0] {
                keep[v.0] = true;
                distinct += 1;
            }
        }
        if distinct < 2 {
            return Err(HierarchyError::TooFewElements {
                required: 2,
                got: distinct,
            });
        }
        let mut t = TableBuilder::new();
        let mut mapped: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        for v in self.postorder() {
            mapped[v.0] = match self.nodes[v.0].children {
                None if keep[v.0] => Some(t.leaf(self.nodes[v.0].label.clone().unwrap())),
                None => None,
                Some([l, r]) => match (mapped[l.0], mapped[r.0]) {
                    (Some(a), Some(b)) => Some(t.internal(a, b)),
                    (one, None) | (None, one) => one,
                },
            };
        }
        t.finish(mapped[self.root.0].expect("subset non-empty"))
    }

    /// Splices a new parent above `sibling` whose other child is a new leaf `x`.
    /// Returns the id of the new leaf; the new parent gets the id after it.
    pub fn insert_sibling(&mut self, sibling: NodeId, x: ElementId) -> Result<NodeId, HierarchyError> {
        self.graft(sibling, &BinaryHierarchy::leaf(x))
    }

    /// Splices a new parent above `sibling` whose other child is a copy of
    /// `subtree`. Returns the id of the copied subtree's root.
    pub fn graft(&mut self, sibling: NodeId, subtree: &BinaryHierarchy) -> Result<NodeId, HierarchyError> {
        self.check(sibling)?;
        for x in subtree.leaves.keys() {
            if self.leaves.contains_key(x) {
                return Err(HierarchyError::DuplicateElement(x.clone()));
            }
        }
        let offset = self.nodes.len();
        for (i, n) in subtree.nodes.iter().enumerate() {
            let shift = |v: NodeId| NodeId(v.0 + offset);
            self.nodes.push(Node {
                parent: n.parent.map(shift),
                children: n.children.map(|[l, r]| [shift(l), shift(r)]),
                label: n.label.clone(),
                min_leaf: shift(n.min_leaf),
            });
            if let Some(x) = &n.label {
                self.leaves.insert(x.clone(), NodeId(i + offset));
            }
        }
        let copied_root = NodeId(subtree.root.0 + offset);
        let joint = NodeId(self.nodes.len());
        let above = self.nodes[sibling.0].parent;
        self.nodes.push(Node {
            parent: above,
            children: Some([sibling, copied_root]),
            label: None,
            min_leaf: joint,
        });
        self.nodes[sibling.0].parent = Some(joint);
        self.nodes[copied_root.0].parent = Some(joint);
        match above {
            None => self.root = joint,
            Some(p) => {
                let cs = self.nodes[p.0].children.as_mut().expect("parent is internal");
                for c in cs.iter_mut() {
                    if *c == sibling {
                        *c = joint;
                    }
                }
            }
        }
        let mut v = Some(joint);
        while let Some(u) = v {
            let before = self.nodes[u.0].min_leaf;
            self.refresh_min_leaf(u);
            if u != joint && self.nodes[u.0].min_leaf == before {
                break;
            }
            v = self.nodes[u.0].parent;
        }
        Ok(copied_root)
    }

    fn refresh_min_leaf(&mut self, v: NodeId) {
        if let Some([l, r]) = self.nodes[v.0].children {
            let (a, b) = (self.nodes[l.0].min_leaf, self.nodes[r.0].min_leaf);
            let la = self.nodes[a.0].label.as_ref();
            let lb = self.nodes[b.0].label.as_ref();
            self.nodes[v.0].min_leaf = if la <= lb { a } else { b };
        }
    }
}

fn closest_of(t: &Triplet, ab: usize, ac: usize, bc: usize) -> TripletAnswer {
    let [a, b, c] = t.members();
    if ab > ac && ab > bc {
        TripletAnswer::unchecked(a.clone(), b.clone())
    } else if ac > ab && ac > bc {
        TripletAnswer::unchecked(a.clone(), c.clone())
    } else {
        debug_assert!(bc > ab && bc > ac, "binary trees have a unique deepest pair");
        TripletAnswer::unchecked(b.clone(), c.clone())
    }
}

impl TableBuilder {
    pub(crate) fn copy_subtree(&mut self, h: &BinaryHierarchy, v: NodeId) -> NodeId {
        let mut mapped: HashMap<NodeId, NodeId> = HashMap::new();
        for u in h.postorder_from(v) {
            let id = match h.children(u) {
                None => self.leaf(h.label(u).unwrap().clone()),
                Some([l, r]) => self.internal(mapped[&l], mapped[&r]),
            };
            mapped.insert(u, id);
        }
        mapped[&v]
    }
}

impl BinaryHierarchy {
    fn postorder_from(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![(v, false)];
        while let Some((u, expanded)) = stack.pop() {
            match (expanded, self.nodes[u.0].children) {
                (false, Some([l, r])) => {
                    stack.push((u, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => out.push(u),
            }
        }
        out
    }
}

impl fmt::Display for BinaryHierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_form())
    }
}
