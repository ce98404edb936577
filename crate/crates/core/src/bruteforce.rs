//! Exhaustive search over all topologies for small element counts.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::hierarchy::{default_labels, BinaryHierarchy, ElementId, HierarchyError, Triplet, TripletAnswer};
use crate::oracles::OrdinalOracle;

/// Largest element count [`enumerate`] accepts.
pub const MAX_ENUMERATE: usize = 8;
/// Largest element count the consistency filter accepts.
pub const MAX_CONSISTENT: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("element count {n} outside the supported range 2..={max}")]
    OutOfRange { n: usize, max: usize },
    #[error("answer table is missing {missing} of the triplets")]
    IncompleteTable { missing: usize },
    #[error("no hierarchy agrees with every answer")]
    NoConsistentTopology,
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// `(2n-3)!!`, the number of topologies on `n >= 2` labelled leaves.
pub fn topology_count(n: usize) -> u64 {
    (1..=(2 * n).saturating_sub(3) as u64).step_by(2).product()
}

/// Every topology over `x1..xn`.
pub fn enumerate(n: usize) -> Result<Vec<BinaryHierarchy>, BruteForceError> {
    enumerate_over(&default_labels(n))
}

/// Every topology over `labels`, built by attaching each next label to every
/// node (the root edge included) of every tree on the previous labels.
pub fn enumerate_over(labels: &[ElementId]) -> Result<Vec<BinaryHierarchy>, BruteForceError> {
    let n = labels.len();
    if !(2..=MAX_ENUMERATE).contains(&n) {
        return Err(BruteForceError::OutOfRange { n, max: MAX_ENUMERATE });
    }
    let mut trees = vec![BinaryHierarchy::cherry(labels[0].clone(), labels[1].clone())?];
    for x in &labels[2..] {
        let mut next = Vec::with_capacity(trees.len() * (2 * trees[0].leaf_count() - 1));
        for t in &trees {
            for v in t.node_ids() {
                let mut grown = t.clone();
                grown.insert_sibling(v, x.clone())?;
                next.push(grown);
            }
        }
        trees = next;
    }
    let mut seen = HashSet::new();
    trees.retain(|t| seen.insert(t.canonical_form()));
    Ok(trees)
}

/// Answer for every triplet of `labels`.
pub type TripletTable = HashMap<Triplet, TripletAnswer>;

/// All triplets over `labels`, in index order.
pub fn all_triplets(labels: &[ElementId]) -> Result<Vec<Triplet>, HierarchyError> {
    let n = labels.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push(Triplet::new(labels[i].clone(), labels[j].clone(), labels[k].clone())?);
            }
        }
    }
    Ok(out)
}

/// The full answer table of a hierarchy.
pub fn triplet_table(h: &BinaryHierarchy) -> Result<TripletTable, HierarchyError> {
    let depth = h.depths();
    all_triplets(&h.elements())?
        .into_iter()
        .map(|t| h.triplet_answer_with(&depth, &t).map(|a| (t, a)))
        .collect()
}

/// Topologies over `labels` that give every answer in `table`.
pub fn consistent_with(table: &TripletTable, labels: &[ElementId]) -> Result<Vec<BinaryHierarchy>, BruteForceError> {
    let n = labels.len();
    if !(2..=MAX_CONSISTENT).contains(&n) {
        return Err(BruteForceError::OutOfRange { n, max: MAX_CONSISTENT });
    }
    let triplets = all_triplets(labels)?;
    let missing = triplets.iter().filter(|t| !table.contains_key(t)).count();
    if missing > 0 {
        return Err(BruteForceError::IncompleteTable { missing });
    }
    let mut out = Vec::new();
    for h in enumerate_over(labels)? {
        let depth = h.depths();
        let mut agrees = true;
        for t in &triplets {
            if h.triplet_answer_with(&depth, t)? != table[t] {
                agrees = false;
                break;
            }
        }
        if agrees {
            out.push(h);
        }
    }
    Ok(out)
}

/// Asks every triplet once and returns the only topology consistent with
/// the answers.
pub fn reconstruct_exhaustive<O>(o: &mut O, labels: &[ElementId]) -> Result<BinaryHierarchy, BruteForceError>
where
    O: OrdinalOracle + ?Sized,
{
    let mut table = TripletTable::new();
    for t in all_triplets(labels)? {
        let a = o.answer(&t)?;
        table.insert(t, a);
    }
    let mut found = consistent_with(&table, labels)?;
    match found.len() {
        1 => Ok(found.pop().unwrap()),
        _ => Err(BruteForceError::NoConsistentTopology),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ExactOracle;

    #[test]
    fn counts_match_the_double_factorial() {
        for (n, want) in [(2, 1), (3, 3), (4, 15), (5, 105), (6, 945)] {
            assert_eq!(topology_count(n), want);
            assert_eq!(enumerate(n).unwrap().len() as u64, want);
        }
        assert_eq!(topology_count(8), 135_135);
        assert!(enumerate(1).is_err());
        assert!(enumerate(9).is_err());
    }

    #[test]
    fn a_table_pins_down_its_tree() {
        for truth in enumerate(4).unwrap() {
            let table = triplet_table(&truth).unwrap();
            let found = consistent_with(&table, &truth.elements()).unwrap();
            assert_eq!(found.len(), 1);
            assert!(found[0].equivalent(&truth).unwrap());
        }
    }

    #[test]
    fn a_flipped_answer_leaves_no_survivor() {
        let truth = BinaryHierarchy::from_newick("((x1,x2),(x3,x4));").unwrap();
        let mut table = triplet_table(&truth).unwrap();
        let t = all_triplets(&truth.elements()).unwrap()[0].clone();
        let wrong = t.pairs().into_iter().find(|p| *p != table[&t]).unwrap();
        table.insert(t, wrong);
        assert!(consistent_with(&table, &truth.elements()).unwrap().is_empty());
        table.clear();
        assert!(matches!(
            consistent_with(&table, &truth.elements()),
            Err(BruteForceError::IncompleteTable { missing: 4 })
        ));
    }

    #[test]
    fn exhaustive_reconstruction_cost() {
        for (n, cost) in [(4, 4), (7, 35)] {
            let truth = enumerate(n).unwrap().pop().unwrap();
            let mut o = ExactOracle::new(truth.clone());
            let got = reconstruct_exhaustive(&mut o, &truth.elements()).unwrap();
            assert!(got.equivalent(&truth).unwrap());
            assert_eq!(o.queries_used(), cost);
        }
    }
}
