//! Answer sources for ordinal queries.
//!
//! Algorithms only see the [`OrdinalOracle`] trait. The ground truth lives
//! inside [`ExactOracle`] and [`NoisyOracle`]; [`CountingOracle`] attributes
//! calls to named phases.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{BinaryHierarchy, ElementId, HierarchyError, NodeId, Triplet, TripletAnswer};

/// Something that answers ordinal queries.
pub trait OrdinalOracle {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError>;

    /// Number of answers handed out so far.
    fn queries_used(&self) -> u64;
}

impl<O: OrdinalOracle + ?Sized> OrdinalOracle for &mut O {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        (**self).answer(t)
    }

    fn queries_used(&self) -> u64 {
        (**self).queries_used()
    }
}

impl<O: OrdinalOracle + ?Sized> OrdinalOracle for Box<O> {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        (**self).answer(t)
    }

    fn queries_used(&self) -> u64 {
        (**self).queries_used()
    }
}

/// Answers every query from the ground truth.
#[derive(Clone, Debug)]
pub struct ExactOracle {
    truth: BinaryHierarchy,
    depth: Vec<u32>,
    used: u64,
}

impl ExactOracle {
    pub fn new(truth: BinaryHierarchy) -> Self {
        let depth = truth.depths();
        ExactOracle {
            truth,
            depth,
            used: 0,
        }
    }

    pub fn truth(&self) -> &BinaryHierarchy {
        &self.truth
    }
}

impl OrdinalOracle for ExactOracle {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        let a = self.truth.triplet_answer_with(&self.depth, t)?;
        self.used += 1;
        Ok(a)
    }

    fn queries_used(&self) -> u64 {
        self.used
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("correctness probability must lie in (0.5, 1], got {0}")]
    BadProbability(f64),
    #[error("unknown adversary `{0}` (expected uniform, fixed, fixed-low or fixed-high)")]
    UnknownAdversary(String),
}

/// Which of the two wrong pairs a fixed adversary names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedRule {
    /// The first wrong pair in sorted order.
    LowestPair,
    /// The second wrong pair in sorted order.
    HighestPair,
}

/// Chooses among the two wrong pairs: gets the triplet, the correct pair and
/// the wrong pairs; returns 0 or 1 (other values are reduced mod 2).
pub type AdversaryFn = dyn Fn(&Triplet, &TripletAnswer, &[TripletAnswer; 2]) -> usize + Send + Sync;

/// How wrong answers are chosen when the noise coin comes up wrong.
#[derive(Clone)]
pub enum Adversary {
    UniformWrong,
    FixedWrong(FixedRule),
    Callback(Arc<AdversaryFn>),
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::UniformWrong => f.write_str("UniformWrong"),
            Adversary::FixedWrong(r) => write!(f, "FixedWrong({r:?})"),
            Adversary::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

impl FromStr for Adversary {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Adversary::UniformWrong),
            "fixed" | "fixed-low" => Ok(Adversary::FixedWrong(FixedRule::LowestPair)),
            "fixed-high" => Ok(Adversary::FixedWrong(FixedRule::HighestPair)),
            other => Err(NoiseError::UnknownAdversary(other.to_string())),
        }
    }
}

impl Adversary {
    /// Short name accepted by `FromStr`, when one exists.
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::UniformWrong => "uniform",
            Adversary::FixedWrong(FixedRule::LowestPair) => "fixed",
            Adversary::FixedWrong(FixedRule::HighestPair) => "fixed-high",
            Adversary::Callback(_) => "callback",
        }
    }
}

/// Independent noise: each answer is correct with probability `p`.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    p: f64,
    adversary: Adversary,
}

impl NoiseModel {
    pub fn new(p: f64, adversary: Adversary) -> Result<Self, NoiseError> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(NoiseError::BadProbability(p));
        }
        Ok(NoiseModel { p, adversary })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }
}

/// Ground-truth oracle that lies with probability `1 - p`, independently
/// per call. Repeating a query re-draws the coin.
pub struct NoisyOracle<R> {
    truth: ExactOracle,
    model: NoiseModel,
    rng: R,
}

impl<R: RngCore> NoisyOracle<R> {
    pub fn new(truth: BinaryHierarchy, model: NoiseModel, rng: R) -> Self {
        NoisyOracle {
            truth: ExactOracle::new(truth),
            model,
            rng,
        }
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn truth(&self) -> &BinaryHierarchy {
        self.truth.truth()
    }
}

impl<R: RngCore> OrdinalOracle for NoisyOracle<R> {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        let correct = self.truth.answer(t)?;
        // Always draw the coin so p = 1 consumes the stream like p < 1 does.
        let lie = self.rng.gen::<f64>() >= self.model.p;
        if !lie {
            return Ok(correct);
        }
        let mut wrong = t.pairs().into_iter().filter(|a| *a != correct);
        let wrong = [wrong.next().unwrap(), wrong.next().unwrap()];
        let pick = match &self.model.adversary {
            Adversary::UniformWrong => self.rng.gen_range(0..2),
            Adversary::FixedWrong(FixedRule::LowestPair) => 0,
            Adversary::FixedWrong(FixedRule::HighestPair) => 1,
            Adversary::Callback(f) => f(t, &correct, &wrong) % 2,
        };
        let [w0, w1] = wrong;
        Ok(if pick == 0 { w0 } else { w1 })
    }

    fn queries_used(&self) -> u64 {
        self.truth.queries_used()
    }
}

/// Outcome of a pivot query at internal node `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PivotDirection {
    /// `x` belongs below `v`'s left child.
    Left,
    /// `x` belongs below `v`'s right child.
    Right,
    /// `x` belongs outside both child subtrees.
    Outside,
}

/// The triplet `{x_L, x_R, x}` asked for pivot `v`, with the representatives
/// of `v`'s two child subtrees.
pub fn pivot_triplet(
    h: &BinaryHierarchy,
    v: NodeId,
    x: &ElementId,
) -> Result<(Triplet, ElementId, ElementId), HierarchyError> {
    if !h.contains_node(v) {
        return Err(HierarchyError::UnknownNode(v));
    }
    let [l, r] = h.children(v).ok_or(HierarchyError::LeafNode(v))?;
    if h.contains(x) {
        return Err(HierarchyError::DuplicateElement(x.clone()));
    }
    let (xl, xr) = (h.representative(l).clone(), h.representative(r).clone());
    Ok((Triplet::new(xl.clone(), xr.clone(), x.clone())?, xl, xr))
}

/// Reads an answer to a pivot triplet as a direction.
pub fn interpret_pivot(answer: &TripletAnswer, xl: &ElementId, xr: &ElementId) -> PivotDirection {
    match (answer.contains(xl), answer.contains(xr)) {
        (true, true) => PivotDirection::Outside,
        (true, false) => PivotDirection::Left,
        _ => PivotDirection::Right,
    }
}

/// One ordinal query for `x` with pivot `v`.
pub fn pivot_query<O: OrdinalOracle + ?Sized>(
    o: &mut O,
    h: &BinaryHierarchy,
    v: NodeId,
    x: &ElementId,
) -> Result<PivotDirection, HierarchyError> {
    let (t, xl, xr) = pivot_triplet(h, v, x)?;
    let a = o.answer(&t)?;
    Ok(interpret_pivot(&a, &xl, &xr))
}

/// Query totals, split by phase tag.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLog {
    total: u64,
    phases: BTreeMap<String, u64>,
}

impl QueryLog {
    pub fn record(&mut self, phase: &str, count: u64) {
        self.total += count;
        *self.phases.entry(phase.to_string()).or_default() += count;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn phase(&self, phase: &str) -> u64 {
        self.phases.get(phase).copied().unwrap_or(0)
    }

    pub fn phases(&self) -> &BTreeMap<String, u64> {
        &self.phases
    }

    pub fn merge(&mut self, other: &QueryLog) {
        for (k, v) in &other.phases {
            self.record(k, *v);
        }
    }

    /// `phase,queries` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,queries\n");
        for (k, v) in &self.phases {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

/// Delegates to an inner oracle and books every call under the current phase.
pub struct CountingOracle<O> {
    inner: O,
    phase: String,
    log: QueryLog,
}

impl<O: OrdinalOracle> CountingOracle<O> {
    pub fn new(inner: O, phase: impl Into<String>) -> Self {
        CountingOracle {
            inner,
            phase: phase.into(),
            log: QueryLog::default(),
        }
    }

    pub fn set_phase(&mut self, phase: impl Into<String>) {
        self.phase = phase.into();
    }

    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_parts(self) -> (O, QueryLog) {
        (self.inner, self.log)
    }
}

impl<O: OrdinalOracle> OrdinalOracle for CountingOracle<O> {
    fn answer(&mut self, t: &Triplet) -> Result<TripletAnswer, HierarchyError> {
        let a = self.inner.answer(t)?;
        self.log.record(&self.phase, 1);
        Ok(a)
    }

    fn queries_used(&self) -> u64 {
        self.log.total()
    }
}

/// Where `x` belongs in `partial`, read off the ground truth: the vertex
/// whose cluster is the sibling of `x` once `x` is added.
pub fn true_sibling(
    truth: &BinaryHierarchy,
    partial: &BinaryHierarchy,
    x: &ElementId,
) -> Result<NodeId, HierarchyError> {
    let xt = truth
        .node_of(x)
        .ok_or_else(|| HierarchyError::UnknownElement(x.clone()))?;
    let mut v = xt;
    while let Some(p) = truth.parent(v) {
        let [l, r] = truth.children(p).unwrap();
        let other = if l == v { r } else { l };
        let hits: Vec<NodeId> = truth
            .subtree_leaves(other)
            .iter()
            .filter_map(|y| partial.node_of(y))
            .collect();
        if let Some((&first, rest)) = hits.split_first() {
            let depth = partial.depths();
            return Ok(rest.iter().fold(first, |acc, &u| partial.lca_with(&depth, acc, u)));
        }
        v = p;
    }
    Err(HierarchyError::TooFewElements {
        required: 2,
        got: partial.leaf_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn el(s: &str) -> ElementId {
        ElementId::new(s).unwrap()
    }

    fn trip(a: &str, b: &str, c: &str) -> Triplet {
        Triplet::new(el(a), el(b), el(c)).unwrap()
    }

    #[test]
    fn exact_oracle_counts_and_is_stateless() {
        let h = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let mut o = ExactOracle::new(h);
        let t = trip("a", "b", "c");
        let first = o.answer(&t).unwrap();
        assert_eq!(first, t.answer(&el("a"), &el("b")).unwrap());
        let other = trip("b", "c", "d");
        o.answer(&other).unwrap();
        for _ in 0..3 {
            assert_eq!(o.answer(&t).unwrap(), first);
        }
        assert_eq!(o.queries_used(), 5);
    }

    #[test]
    fn noise_model_rejects_bad_p() {
        assert!(NoiseModel::new(0.5, Adversary::UniformWrong).is_err());
        assert!(NoiseModel::new(1.01, Adversary::UniformWrong).is_err());
        assert!(NoiseModel::new(f64::NAN, Adversary::UniformWrong).is_err());
        assert!(NoiseModel::new(1.0, Adversary::UniformWrong).is_ok());
    }

    #[test]
    fn p_one_matches_exact_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = BinaryHierarchy::random(12, &mut rng).unwrap();
        let mut exact = ExactOracle::new(h.clone());
        let model = NoiseModel::new(1.0, Adversary::UniformWrong).unwrap();
        let mut noisy = NoisyOracle::new(h.clone(), model, ChaCha8Rng::seed_from_u64(9));
        let els = h.elements();
        for _ in 0..500 {
            let idx = rand::seq::index::sample(&mut rng, els.len(), 3);
            let t = Triplet::new(
                els[idx.index(0)].clone(),
                els[idx.index(1)].clone(),
                els[idx.index(2)].clone(),
            )
            .unwrap();
            assert_eq!(noisy.answer(&t).unwrap(), exact.answer(&t).unwrap());
        }
    }

    #[test]
    fn noisy_rate_matches_p() {
        let h = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let model = NoiseModel::new(0.8, Adversary::UniformWrong).unwrap();
        let mut o = NoisyOracle::new(h, model, ChaCha8Rng::seed_from_u64(11));
        let t = trip("a", "b", "d");
        let truth = t.answer(&el("a"), &el("b")).unwrap();
        let calls = 100_000;
        let mut right = 0;
        let mut wrong_counts = BTreeMap::new();
        for _ in 0..calls {
            let a = o.answer(&t).unwrap();
            if a == truth {
                right += 1;
            } else {
                *wrong_counts.entry(a).or_insert(0u32) += 1;
            }
        }
        let freq = right as f64 / calls as f64;
        assert!((freq - 0.8).abs() <= 0.01, "freq {freq}");
        // Both wrong pairs show up roughly equally often under UniformWrong.
        assert_eq!(wrong_counts.len(), 2);
        for &c in wrong_counts.values() {
            assert!((c as f64 / (calls - right) as f64 - 0.5).abs() < 0.02);
        }
        assert_eq!(o.queries_used(), calls as u64);
    }

    #[test]
    fn fixed_adversary_always_names_the_same_wrong_pair() {
        let h = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let t = trip("a", "b", "c");
        let truth = t.answer(&el("a"), &el("b")).unwrap();
        for (rule, expect) in [
            (FixedRule::LowestPair, t.answer(&el("a"), &el("c")).unwrap()),
            (FixedRule::HighestPair, t.answer(&el("b"), &el("c")).unwrap()),
        ] {
            let model = NoiseModel::new(0.8, Adversary::FixedWrong(rule)).unwrap();
            let mut o = NoisyOracle::new(h.clone(), model, ChaCha8Rng::seed_from_u64(5));
            let mut lies = 0;
            for _ in 0..2000 {
                let a = o.answer(&t).unwrap();
                if a != truth {
                    assert_eq!(a, expect);
                    lies += 1;
                }
            }
            assert!(lies > 300);
        }
    }

    #[test]
    fn callback_adversary_is_consulted() {
        let h = BinaryHierarchy::from_newick("((a,b),c);").unwrap();
        let model = NoiseModel::new(
            0.6,
            Adversary::Callback(Arc::new(|_t, correct, wrong| {
                assert!(!wrong.contains(correct));
                1
            })),
        )
        .unwrap();
        let mut o = NoisyOracle::new(h, model, ChaCha8Rng::seed_from_u64(1));
        let t = trip("a", "b", "c");
        let second_wrong = t.answer(&el("b"), &el("c")).unwrap();
        let seen: Vec<_> = (0..200).map(|_| o.answer(&t).unwrap()).collect();
        assert!(seen.contains(&second_wrong));
        assert!(!seen.contains(&t.answer(&el("a"), &el("c")).unwrap()));
    }

    #[test]
    fn adversary_names_parse() {
        assert!(matches!("uniform".parse(), Ok(Adversary::UniformWrong)));
        assert!(matches!(
            "fixed".parse(),
            Ok(Adversary::FixedWrong(FixedRule::LowestPair))
        ));
        assert!("sneaky".parse::<Adversary>().is_err());
    }

    #[test]
    fn pivot_queries_follow_the_truth() {
        // x sits next to a.
        let truth = BinaryHierarchy::from_newick("((((a,x),b),c),d);").unwrap();
        let partial = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let mut o = ExactOracle::new(truth);
        let x = el("x");
        let u1 = partial.parent(partial.node_of(&el("a")).unwrap()).unwrap();
        assert_eq!(pivot_query(&mut o, &partial, u1, &x).unwrap(), PivotDirection::Left);
        let root = partial.root();
        assert_eq!(pivot_query(&mut o, &partial, root, &x).unwrap(), PivotDirection::Left);

        let truth = BinaryHierarchy::from_newick("((((a,b),c),x),d);").unwrap();
        let mut o = ExactOracle::new(truth);
        assert_eq!(pivot_query(&mut o, &partial, u1, &x).unwrap(), PivotDirection::Outside);

        let leaf = partial.node_of(&el("a")).unwrap();
        assert_eq!(
            pivot_query(&mut o, &partial, leaf, &x),
            Err(HierarchyError::LeafNode(leaf))
        );
        assert!(pivot_query(&mut o, &partial, root, &el("a")).is_err());
    }

    #[test]
    fn counting_wrapper_books_phases() {
        let h = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let mut inner = CountingOracle::new(ExactOracle::new(h), "inner");
        {
            let mut outer = CountingOracle::new(&mut inner, "search");
            assert_eq!(outer.log().total(), 0);
            let t = trip("a", "b", "c");
            for _ in 0..3 {
                outer.answer(&t).unwrap();
            }
            outer.set_phase("verify");
            outer.answer(&t).unwrap();
            assert_eq!(outer.log().phase("search"), 3);
            assert_eq!(outer.log().phase("verify"), 1);
            assert_eq!(outer.log().to_csv(), "phase,queries\nsearch,3\nverify,1\n");
        }
        assert_eq!(inner.log().total(), 4);
        assert_eq!(inner.inner().queries_used(), 4);
    }

    #[test]
    fn true_sibling_reads_the_truth() {
        let truth = BinaryHierarchy::from_newick("(((a,(b,x)),c),d);").unwrap();
        let partial = BinaryHierarchy::from_newick("(((a,b),c),d);").unwrap();
        let s = true_sibling(&truth, &partial, &el("x")).unwrap();
        assert_eq!(s, partial.node_of(&el("b")).unwrap());
        let truth = BinaryHierarchy::from_newick("((((a,b),c),d),x);").unwrap();
        assert_eq!(true_sibling(&truth, &partial, &el("x")).unwrap(), partial.root());
    }
}
