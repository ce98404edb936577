//! Reconstruction from exact answers: randomized three-way partitioning with
//! a merge step, and insertion with a separator-driven sibling search.

use std::ops::{Add, Sub};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hierarchy::{BinaryHierarchy, ElementId, HierarchyError, NodeId, Triplet};
use crate::insertion::{InsertionMode, InsertionRun};
use crate::oracles::{pivot_query, OrdinalOracle, PivotDirection};

/// One partitioning round around a random pivot pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    /// Elements closer to `pivots.0` than to `pivots.1` (pivot included).
    pub a: Vec<ElementId>,
    /// Elements closer to `pivots.1` than to `pivots.0` (pivot included).
    pub b: Vec<ElementId>,
    /// Elements farther from both pivots than the pivots are from each other.
    pub c: Vec<ElementId>,
    pub pivots: (ElementId, ElementId),
    pub rounds_used: u32,
}

impl Partition {
    pub fn largest_part(&self) -> usize {
        self.a.len().max(self.b.len()).max(self.c.len())
    }

    /// The acceptance test that ends the partitioning loop:
    /// no part exceeds 15/16 of the input.
    pub fn is_balanced(&self) -> bool {
        let n = self.a.len() + self.b.len() + self.c.len();
        16 * self.largest_part() <= 15 * n
    }
}

/// Partitions `els` around a uniformly random pivot pair. Costs exactly
/// `|els| - 2` queries.
pub fn partition_round<O, R>(els: &[ElementId], o: &mut O, rng: &mut R) -> Result<Partition, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
    R: Rng + ?Sized,
{
    if els.len() < 3 {
        return Err(HierarchyError::TooFewElements {
            required: 3,
            got: els.len(),
        });
    }
    let pick = index::sample(rng, els.len(), 2);
    let (xa, xb) = (els[pick.index(0)].clone(), els[pick.index(1)].clone());
    partition_with(els, &xa, &xb, o)
}

/// Partition around a fixed pivot pair.
pub fn partition_with<O>(els: &[ElementId], xa: &ElementId, xb: &ElementId, o: &mut O) -> Result<Partition, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let mut part = Partition {
        a: vec![xa.clone()],
        b: vec![xb.clone()],
        c: Vec::new(),
        pivots: (xa.clone(), xb.clone()),
        rounds_used: 1,
    };
    for x in els {
        if x == xa || x == xb {
            continue;
        }
        let ans = o.answer(&Triplet::new(xa.clone(), xb.clone(), x.clone())?)?;
        match (ans.contains(xa), ans.contains(xb)) {
            (true, true) => part.c.push(x.clone()),
            (true, false) => part.a.push(x.clone()),
            _ => part.b.push(x.clone()),
        }
    }
    Ok(part)
}

/// Counters collected by [`quick_clustering`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuickStats {
    /// Calls on three or more elements (the ones that partition).
    pub invocations: u64,
    /// Partition rounds over all invocations.
    pub rounds: u64,
    /// Largest number of rounds any single invocation needed.
    pub max_rounds: u32,
    pub partition_queries: u64,
    pub merge_queries: u64,
}

impl QuickStats {
    pub fn mean_rounds(&self) -> f64 {
        if self.invocations == 0 {
            0.0
        } else {
            self.rounds as f64 / self.invocations as f64
        }
    }

    pub fn total_queries(&self) -> u64 {
        self.partition_queries + self.merge_queries
    }
}

/// Randomized divide and conquer: partition until balanced, recurse on the
/// three parts, merge.
pub fn quick_clustering<O, R>(
    els: &[ElementId],
    o: &mut O,
    rng: &mut R,
) -> Result<(BinaryHierarchy, QuickStats), HierarchyError>
where
    O: OrdinalOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut stats = QuickStats::default();
    let tree = quick_rec(els, o, rng, &mut stats)?;
    Ok((tree, stats))
}

fn quick_rec<O, R>(
    els: &[ElementId],
    o: &mut O,
    rng: &mut R,
    stats: &mut QuickStats,
) -> Result<BinaryHierarchy, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
    R: Rng + ?Sized,
{
    match els {
        [] => {
            return Err(HierarchyError::TooFewElements {
                required: 1,
                got: 0,
            })
        }
        [x] => return Ok(BinaryHierarchy::leaf(x.clone())),
        [x, y] => return BinaryHierarchy::cherry(x.clone(), y.clone()),
        _ => {}
    }
    stats.invocations += 1;
    let mut rounds = 0u32;
    let part = loop {
        let before = o.queries_used();
        let part = partition_round(els, o, rng)?;
        stats.partition_queries += o.queries_used() - before;
        rounds += 1;
        if part.is_balanced() {
            break Partition {
                rounds_used: rounds,
                ..part
            };
        }
    };
    stats.rounds += u64::from(rounds);
    stats.max_rounds = stats.max_rounds.max(rounds);

    let ta = quick_rec(&part.a, o, rng, stats)?;
    let tb = quick_rec(&part.b, o, rng, stats)?;
    let tc = if part.c.is_empty() {
        None
    } else {
        Some(quick_rec(&part.c, o, rng, stats)?)
    };
    let before = o.queries_used();
    let merged = merge(&ta, &tb, tc.as_ref(), o)?;
    stats.merge_queries += o.queries_used() - before;
    Ok(merged)
}

/// Joins `ta` and `tb` under a new vertex and hangs it into `tc` next to the
/// vertex found by walking down from `tc`'s root with pivot queries.
pub fn merge<O>(
    ta: &BinaryHierarchy,
    tb: &BinaryHierarchy,
    tc: Option<&BinaryHierarchy>,
    o: &mut O,
) -> Result<BinaryHierarchy, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let joined = BinaryHierarchy::join(ta, tb)?;
    let Some(tc) = tc else {
        return Ok(joined);
    };
    let x = ta.representative(ta.root()).clone();
    let mut v = tc.root();
    while let Some([l, r]) = tc.children(v) {
        match pivot_query(o, tc, v, &x)? {
            PivotDirection::Left => v = l,
            PivotDirection::Right => v = r,
            PivotDirection::Outside => break,
        }
    }
    let mut out = tc.clone();
    out.graft(v, &joined)?;
    Ok(out)
}

/// Node splitting the total weight most evenly into left subtree, right
/// subtree and the rest (node included). Minimizes the heaviest part, ties
/// go to the smallest node id. Leaves are considered only when
/// `include_leaves` is set.
pub(crate) fn balanced_split<W>(h: &BinaryHierarchy, weight: &[W], include_leaves: bool) -> Option<NodeId>
where
    W: Copy + PartialOrd + Add<Output = W> + Sub<Output = W> + Default,
{
    let mut sum = vec![W::default(); h.len()];
    for v in h.postorder() {
        sum[v.0] = match h.children(v) {
            None => weight[v.0],
            Some([l, r]) => weight[v.0] + sum[l.0] + sum[r.0],
        };
    }
    let total = sum[h.root().0];
    let mut best: Option<(W, NodeId)> = None;
    for v in h.node_ids() {
        let heaviest = match h.children(v) {
            None if include_leaves => total,
            None => continue,
            Some([l, r]) => {
                let rest = total - sum[l.0] - sum[r.0];
                let mut m = sum[l.0];
                if sum[r.0] > m {
                    m = sum[r.0];
                }
                if rest > m {
                    m = rest;
                }
                m
            }
        };
        if best.is_none_or(|(b, _)| heaviest < b) {
            best = Some((heaviest, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Candidate siblings, as a membership vector over node ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    member: Vec<bool>,
    count: usize,
}

impl CandidateSet {
    /// Every node of `h`.
    pub fn all(h: &BinaryHierarchy) -> Self {
        CandidateSet {
            member: vec![true; h.len()],
            count: h.len(),
        }
    }

    pub fn from_nodes(h: &BinaryHierarchy, nodes: &[NodeId]) -> Self {
        let mut member = vec![false; h.len()];
        for v in nodes {
            member[v.0] = true;
        }
        let count = member.iter().filter(|&&b| b).count();
        CandidateSet { member, count }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.member.get(v.0).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| NodeId(i))
    }

    /// Keeps only members of `keep`.
    fn retain(&mut self, keep: &[bool]) {
        for (m, &k) in self.member.iter_mut().zip(keep) {
            *m &= k;
        }
        self.count = self.member.iter().filter(|&&b| b).count();
    }
}

/// Pivot for the exact sibling search: the internal node minimizing
/// `max(|left ∩ S|, |right ∩ S|, |rest ∩ S|)`.
pub fn separator(h: &BinaryHierarchy, s: &CandidateSet) -> Result<NodeId, HierarchyError> {
    if s.len() < 2 {
        return Err(HierarchyError::TooFewElements {
            required: 2,
            got: s.len(),
        });
    }
    let weight: Vec<u32> = h.node_ids().map(|v| u32::from(s.contains(v))).collect();
    balanced_split(h, &weight, false).ok_or(HierarchyError::TooFewElements {
        required: 2,
        got: h.leaf_count(),
    })
}

/// Nodes on the side of pivot `v` named by `dir`.
pub(crate) fn side_mask(h: &BinaryHierarchy, v: NodeId, dir: PivotDirection) -> Vec<bool> {
    let [l, r] = h.children(v).expect("pivot is internal");
    let mut mask = vec![false; h.len()];
    let mark = |mask: &mut Vec<bool>, c: NodeId| {
        for u in h.subtree_nodes(c) {
            mask[u.0] = true;
        }
    };
    match dir {
        PivotDirection::Left => mark(&mut mask, l),
        PivotDirection::Right => mark(&mut mask, r),
        PivotDirection::Outside => {
            mask.iter_mut().for_each(|m| *m = true);
            for c in [l, r] {
                for u in h.subtree_nodes(c) {
                    mask[u.0] = false;
                }
            }
        }
    }
    mask
}

/// Resumable exact sibling search over a fixed tree: ask the pending pivot,
/// feed the direction back, repeat until one candidate is left.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiblingSearch {
    element: ElementId,
    candidates: CandidateSet,
    pivot: Option<NodeId>,
    asked: u32,
}

impl SiblingSearch {
    pub fn new(h: &BinaryHierarchy, x: ElementId) -> Result<Self, HierarchyError> {
        if h.contains(&x) {
            return Err(HierarchyError::DuplicateElement(x));
        }
        let candidates = CandidateSet::all(h);
        let pivot = if candidates.len() > 1 {
            Some(separator(h, &candidates)?)
        } else {
            None
        };
        Ok(SiblingSearch {
            element: x,
            candidates,
            pivot,
            asked: 0,
        })
    }

    pub fn element(&self) -> &ElementId {
        &self.element
    }

    /// Pivot to query next; `None` once the sibling is known.
    pub fn pending_pivot(&self) -> Option<NodeId> {
        self.pivot
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn queries(&self) -> u32 {
        self.asked
    }

    pub fn observe(&mut self, h: &BinaryHierarchy, dir: PivotDirection) -> Result<(), HierarchyError> {
        let v = self.pivot.ok_or(HierarchyError::TooFewElements {
            required: 2,
            got: self.candidates.len(),
        })?;
        let mut next = self.candidates.clone();
        next.retain(&side_mask(h, v, dir));
        if next.is_empty() {
            return Err(HierarchyError::Inconsistent);
        }
        self.asked += 1;
        self.candidates = next;
        self.pivot = if self.candidates.len() > 1 {
            Some(separator(h, &self.candidates)?)
        } else {
            None
        };
        Ok(())
    }

    /// The sibling, once a single candidate remains.
    pub fn result(&self) -> Option<NodeId> {
        match (self.pivot, self.candidates.len()) {
            (None, 1) => self.candidates.iter().next(),
            _ => None,
        }
    }
}

/// Finds the node next to which `x` belongs in `h`, using exact answers.
pub fn find_sibling<O>(h: &BinaryHierarchy, x: &ElementId, o: &mut O) -> Result<NodeId, HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let mut search = SiblingSearch::new(h, x.clone())?;
    while let Some(v) = search.pending_pivot() {
        let dir = pivot_query(o, h, v, x)?;
        search.observe(h, dir)?;
    }
    // An inconsistent oracle can empty the candidate set.
    search.result().ok_or(HierarchyError::Inconsistent)
}

/// Inserts the elements one by one in the given order, each next to the node
/// [`find_sibling`] reports.
pub fn insertion_clustering<O>(els: &[ElementId], o: &mut O) -> Result<(BinaryHierarchy, Vec<u64>), HierarchyError>
where
    O: OrdinalOracle + ?Sized,
{
    let run = InsertionRun::new(els.to_vec(), InsertionMode::Exact)?.drive(o)?;
    let per = run.per_insertion_queries().to_vec();
    Ok((run.into_tree(), per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ExactOracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn el(s: &str) -> ElementId {
        ElementId::new(s).unwrap()
    }

    fn nw(s: &str) -> BinaryHierarchy {
        BinaryHierarchy::from_newick(s).unwrap()
    }

    fn names(v: &[ElementId]) -> Vec<&str> {
        let mut out: Vec<_> = v.iter().map(ElementId::as_str).collect();
        out.sort();
        out
    }

    #[test]
    fn partition_on_balanced_truth() {
        let mut o = ExactOracle::new(nw("((a,b),(c,d));"));
        let els = [el("a"), el("b"), el("c"), el("d")];
        let p = partition_with(&els, &el("a"), &el("c"), &mut o).unwrap();
        assert_eq!(names(&p.a), ["a", "b"]);
        assert_eq!(names(&p.b), ["c", "d"]);
        assert!(p.c.is_empty());
        assert_eq!(o.queries_used(), 2);
    }

    #[test]
    fn partition_on_caterpillar_with_sibling_pivots() {
        let mut o = ExactOracle::new(nw("(((a,b),c),d);"));
        let els = [el("a"), el("b"), el("c"), el("d")];
        let p = partition_with(&els, &el("a"), &el("b"), &mut o).unwrap();
        assert_eq!(names(&p.a), ["a"]);
        assert_eq!(names(&p.b), ["b"]);
        assert_eq!(names(&p.c), ["c", "d"]);
    }

    #[test]
    fn partition_round_costs_n_minus_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = BinaryHierarchy::random(20, &mut rng).unwrap();
        let mut o = ExactOracle::new(truth.clone());
        let p = partition_round(&truth.elements(), &mut o, &mut rng).unwrap();
        assert_eq!(o.queries_used(), 18);
        assert_eq!(p.a.len() + p.b.len() + p.c.len(), 20);
        assert!(partition_round(&truth.elements()[..2], &mut o, &mut rng).is_err());
    }

    #[test]
    fn quick_clustering_base_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut o = ExactOracle::new(nw("(a,b);"));
        let (t, stats) = quick_clustering(&[el("a"), el("b")], &mut o, &mut rng).unwrap();
        assert_eq!(t.canonical_form(), "(a,b)");
        assert_eq!(stats.total_queries(), 0);
        assert_eq!(o.queries_used(), 0);
        let (t, _) = quick_clustering(&[el("a")], &mut o, &mut rng).unwrap();
        assert_eq!(t.canonical_form(), "a");
    }

    #[test]
    fn quick_clustering_recovers_random_truths() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [3, 5, 9, 17, 40, 64] {
            for _ in 0..10 {
                let truth = BinaryHierarchy::random(n, &mut rng).unwrap();
                let mut o = ExactOracle::new(truth.clone());
                let (t, stats) = quick_clustering(&truth.elements(), &mut o, &mut rng).unwrap();
                assert!(t.equivalent(&truth).unwrap(), "n={n}");
                assert_eq!(stats.total_queries(), o.queries_used());
            }
        }
    }

    #[test]
    fn merge_small_cases() {
        let mut o = ExactOracle::new(nw("((a,b),c);"));
        let ta = BinaryHierarchy::leaf(el("a"));
        let tb = BinaryHierarchy::leaf(el("b"));
        let tc = BinaryHierarchy::leaf(el("c"));
        let m = merge(&ta, &tb, Some(&tc), &mut o).unwrap();
        assert_eq!(m.canonical_form(), "((a,b),c)");
        assert_eq!(o.queries_used(), 0);

        let mut o = ExactOracle::new(nw("((a,b),(c,d));"));
        let m = merge(&nw("(a,b);"), &nw("(c,d);"), None, &mut o).unwrap();
        assert_eq!(m.canonical_form(), "((a,b),(c,d))");
    }

    #[test]
    fn merge_stops_at_the_sibling_cluster() {
        // 6-leaf caterpillar; the pivot pair {c, d} has LCA whose sibling
        // side in the rest is the cluster {a, b}.
        let truth = nw("(((((a,b),(c,d)),e),f),g);");
        let mut o = ExactOracle::new(truth.clone());
        let tc = nw("((((a,b),e),f),g);");
        let m = merge(
            &BinaryHierarchy::leaf(el("c")),
            &BinaryHierarchy::leaf(el("d")),
            Some(&tc),
            &mut o,
        )
        .unwrap();
        assert!(m.equivalent(&truth).unwrap());
        // Three steps down to the cherry, then one query stopping there.
        assert_eq!(o.queries_used(), 4);
    }

    #[test]
    fn separator_on_caterpillar() {
        let h = nw("(((a,b),c),d);");
        let s = CandidateSet::all(&h);
        let v = separator(&h, &s).unwrap();
        let u2 = h.parent(h.node_of(&el("c")).unwrap()).unwrap();
        assert_eq!(v, u2);
    }

    #[test]
    fn separator_on_parent_pair() {
        let h = nw("(((a,b),c),d);");
        let u1 = h.parent(h.node_of(&el("a")).unwrap()).unwrap();
        let u2 = h.parent(u1).unwrap();
        let s = CandidateSet::from_nodes(&h, &[u1, u2]);
        assert_eq!(separator(&h, &s).unwrap(), u2);
        let one = CandidateSet::from_nodes(&h, &[u1]);
        assert!(separator(&h, &one).is_err());
    }

    #[test]
    fn find_sibling_on_caterpillar() {
        let partial = nw("(((a,b),c),d);");
        let truth = nw("(((a,b),(c,x)),d);");
        let mut o = ExactOracle::new(truth);
        let v = find_sibling(&partial, &el("x"), &mut o).unwrap();
        assert_eq!(v, partial.node_of(&el("c")).unwrap());
        assert_eq!(o.queries_used(), 1);
    }

    #[test]
    fn three_candidates_take_one_query() {
        for truth in ["((a,x),b);", "(a,(b,x));", "((a,b),x);"] {
            let partial = nw("(a,b);");
            let mut o = ExactOracle::new(nw(truth));
            let v = find_sibling(&partial, &el("x"), &mut o).unwrap();
            assert_eq!(o.queries_used(), 1);
            let mut grown = partial.clone();
            grown.insert_sibling(v, el("x")).unwrap();
            assert!(grown.equivalent(&nw(truth)).unwrap());
        }
    }

    #[test]
    fn candidate_set_halves_and_keeps_the_sibling() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.gen_range(4..40);
            let truth = BinaryHierarchy::random(n, &mut rng).unwrap();
            let els = truth.elements();
            let x = els[rng.gen_range(0..n)].clone();
            let rest: Vec<_> = els.iter().filter(|e| **e != x).cloned().collect();
            let partial = truth.induced(&rest).unwrap();
            let target = crate::oracles::true_sibling(&truth, &partial, &x).unwrap();
            let mut o = ExactOracle::new(truth);
            let mut search = SiblingSearch::new(&partial, x.clone()).unwrap();
            while let Some(v) = search.pending_pivot() {
                let before = search.candidates().len();
                let dir = pivot_query(&mut o, &partial, v, &x).unwrap();
                search.observe(&partial, dir).unwrap();
                assert!(search.candidates().contains(target));
                assert!(search.candidates().len() <= before.div_ceil(2));
            }
            assert_eq!(search.result(), Some(target));
        }
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let truth = nw("((a,b),(c,d));");
        let els = [el("a"), el("b"), el("c"), el("d")];
        let mut orders = 0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let idx = [i, j, k, l];
                        let mut seen = [false; 4];
                        idx.iter().for_each(|&q| seen[q] = true);
                        if !seen.iter().all(|&s| s) {
                            continue;
                        }
                        orders += 1;
                        let order: Vec<_> = idx.iter().map(|&q| els[q].clone()).collect();
                        let mut o = ExactOracle::new(truth.clone());
                        let (t, _) = insertion_clustering(&order, &mut o).unwrap();
                        assert!(t.equivalent(&truth).unwrap());
                    }
                }
            }
        }
        assert_eq!(orders, 24);
    }

    #[test]
    fn insertion_two_elements_is_free() {
        let mut o = ExactOracle::new(nw("(a,b);"));
        let (t, per) = insertion_clustering(&[el("a"), el("b")], &mut o).unwrap();
        assert_eq!(t.canonical_form(), "(a,b)");
        assert!(per.is_empty());
        assert_eq!(o.queries_used(), 0);
    }
}
