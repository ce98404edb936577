use std::collections::BTreeSet;

use super::{BinaryHierarchy, ElementId, HierarchyError, NodeId, TableBuilder};

/// A family of element sets, each pair nested or disjoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaminarFamily {
    clusters: BTreeSet<BTreeSet<ElementId>>,
}

fn show(c: &BTreeSet<ElementId>) -> String {
    let items: Vec<_> = c.iter().map(ElementId::as_str).collect();
    format!("{{{}}}", items.join(","))
}

impl LaminarFamily {
    pub fn new<I, C>(clusters: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = ElementId>,
    {
        LaminarFamily {
            clusters: clusters
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect(),
        }
    }

    pub fn clusters(&self) -> &BTreeSet<BTreeSet<ElementId>> {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn contains(&self, cluster: &BTreeSet<ElementId>) -> bool {
        self.clusters.contains(cluster)
    }

    /// Union of all clusters.
    pub fn ground_set(&self) -> BTreeSet<ElementId> {
        self.clusters.iter().flatten().cloned().collect()
    }

    /// `{C ∩ S : C in self} \ {∅}`.
    pub fn restrict(&self, subset: &BTreeSet<ElementId>) -> LaminarFamily {
        LaminarFamily {
            clusters: self
                .clusters
                .iter()
                .map(|c| c.intersection(subset).cloned().collect::<BTreeSet<_>>())
                .filter(|c| !c.is_empty())
                .collect(),
        }
    }

    /// Checks the hierarchical-clustering axioms: laminar, no empty set,
    /// contains the ground set and every singleton.
    pub fn validate(&self) -> Result<(), HierarchyError> {
        if self.clusters.iter().any(BTreeSet::is_empty) {
            return Err(HierarchyError::NotLaminar("contains the empty set".into()));
        }
        let ground = self.ground_set();
        if ground.is_empty() {
            return Err(HierarchyError::NotLaminar("family is empty".into()));
        }
        if !self.clusters.contains(&ground) {
            return Err(HierarchyError::NotLaminar("ground set missing".into()));
        }
        for x in &ground {
            if !self.clusters.contains(&BTreeSet::from([x.clone()])) {
                return Err(HierarchyError::NotLaminar(format!("singleton {{{x}}} missing")));
            }
        }
        let all: Vec<_> = self.clusters.iter().collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                let meets = a.intersection(b).next().is_some();
                if meets && !a.is_subset(b) && !b.is_subset(a) {
                    return Err(HierarchyError::NotLaminar(format!(
                        "{} and {} overlap",
                        show(a),
                        show(b)
                    )));
                }
            }
        }
        Ok(())
    }
}

impl BinaryHierarchy {
    /// The clusters (leaf sets of every subtree).
    pub fn to_laminar(&self) -> LaminarFamily {
        let mut sets: Vec<BTreeSet<ElementId>> = vec![BTreeSet::new(); self.len()];
        for v in self.postorder() {
            sets[v.0] = match self.children(v) {
                None => BTreeSet::from([self.label(v).unwrap().clone()]),
                Some([l, r]) => sets[l.0].union(&sets[r.0]).cloned().collect(),
            };
        }
        LaminarFamily {
            clusters: sets.into_iter().collect(),
        }
    }

    /// Rebuilds the tree of a binary laminar family.
    pub fn from_laminar(family: &LaminarFamily) -> Result<BinaryHierarchy, HierarchyError> {
        family.validate()?;
        // Sorting by size means every cluster's maximal proper subclusters
        // appear before it.
        let mut by_size: Vec<&BTreeSet<ElementId>> = family.clusters.iter().collect();
        by_size.sort_by_key(|c| c.len());
        let mut built: Vec<(&BTreeSet<ElementId>, NodeId)> = Vec::new();
        let mut tops: Vec<bool> = Vec::new();
        let mut t = TableBuilder::new();
        for c in by_size {
            let id = if c.len() == 1 {
                t.leaf(c.first().unwrap().clone())
            } else {
                let parts: Vec<usize> = (0..built.len())
                    .filter(|&i| tops[i] && built[i].0.is_subset(c))
                    .collect();
                let covered: usize = parts.iter().map(|&i| built[i].0.len()).sum();
                if parts.len() != 2 || covered != c.len() {
                    return Err(HierarchyError::NonBinary(format!(
                        "{} does not split into exactly two member clusters",
                        show(c)
                    )));
                }
                for &i in &parts {
                    tops[i] = false;
                }
                t.internal(built[parts[0]].1, built[parts[1]].1)
            };
            built.push((c, id));
            tops.push(true);
        }
        let root = built.last().expect("validated family is non-empty").1;
        t.finish(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> Vec<ElementId> {
        items.iter().map(|s| ElementId::new(s).unwrap()).collect()
    }

    #[test]
    fn to_laminar_lists_every_subtree() {
        let h = BinaryHierarchy::from_newick("((a,b),c);").unwrap();
        let expect = LaminarFamily::new([
            set(&["a"]),
            set(&["b"]),
            set(&["c"]),
            set(&["a", "b"]),
            set(&["a", "b", "c"]),
        ]);
        assert_eq!(h.to_laminar(), expect);
    }

    #[test]
    fn from_laminar_builds_cherry() {
        let f = LaminarFamily::new([set(&["a"]), set(&["b"]), set(&["a", "b"])]);
        assert_eq!(BinaryHierarchy::from_laminar(&f).unwrap().canonical_form(), "(a,b)");
    }

    #[test]
    fn from_laminar_rejects_ternary_split() {
        let f = LaminarFamily::new([set(&["a"]), set(&["b"]), set(&["c"]), set(&["a", "b", "c"])]);
        assert!(matches!(
            BinaryHierarchy::from_laminar(&f),
            Err(HierarchyError::NonBinary(_))
        ));
    }

    #[test]
    fn from_laminar_rejects_overlap_and_missing_parts() {
        let overlap = LaminarFamily::new([
            set(&["a"]),
            set(&["b"]),
            set(&["c"]),
            set(&["a", "b"]),
            set(&["b", "c"]),
            set(&["a", "b", "c"]),
        ]);
        assert!(matches!(
            BinaryHierarchy::from_laminar(&overlap),
            Err(HierarchyError::NotLaminar(_))
        ));
        let no_singleton = LaminarFamily::new([set(&["a"]), set(&["a", "b"])]);
        assert!(matches!(
            BinaryHierarchy::from_laminar(&no_singleton),
            Err(HierarchyError::NotLaminar(_))
        ));
        let with_empty = LaminarFamily::new([set(&[]), set(&["a"])]);
        assert!(with_empty.validate().is_err());
    }

    #[test]
    fn round_trip_on_balanced_tree() {
        let h = BinaryHierarchy::from_newick("(((a,b),(c,d)),((e,f),g));").unwrap();
        let back = BinaryHierarchy::from_laminar(&h.to_laminar()).unwrap();
        assert!(back.equivalent(&h).unwrap());
    }
}
