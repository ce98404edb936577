//! Insertion clustering as a resumable state machine. One element at a time
//! is placed next to the sibling found by an exact or a robust search; the
//! machine stops between pivot queries so an external answerer (a test
//! oracle or a person behind the session service) can drive it.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::hierarchy::{BinaryHierarchy, ElementId, HierarchyError, NodeId, Triplet, TripletAnswer};
use crate::noiseless::SiblingSearch;
use crate::noisy::{RobustConfig, RobustSiblingSearch};
use crate::oracles::{interpret_pivot, pivot_triplet, OrdinalOracle};

/// How siblings are searched for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InsertionMode {
    Exact,
    /// Robust search; `delta` is the budget for the whole run and is split
    /// evenly over the elements.
    Robust(RobustConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Search {
    Exact(SiblingSearch),
    Robust(Box<RobustSiblingSearch>),
}

impl Search {
    fn pending_pivot(&self, h: &BinaryHierarchy) -> Option<NodeId> {
        match self {
            Search::Exact(s) => s.pending_pivot(),
            Search::Robust(s) => s.pending_pivot(h),
        }
    }

    fn result(&self) -> Option<NodeId> {
        match self {
            Search::Exact(s) => s.result(),
            Search::Robust(s) => s.result(),
        }
    }

    fn element(&self) -> &ElementId {
        match self {
            Search::Exact(s) => s.element(),
            Search::Robust(s) => s.element(),
        }
    }
}

/// A pending pivot question in triplet form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub triplet: Triplet,
    /// Sequence number of the question, counting from 1.
    pub seq: u64,
}

/// Suspended insertion clustering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionRun {
    elements: Vec<ElementId>,
    mode: InsertionMode,
    tree: BinaryHierarchy,
    queue: VecDeque<ElementId>,
    search: Option<Search>,
    per_insertion: Vec<u64>,
    current_queries: u64,
    asked: u64,
}

impl InsertionRun {
    /// Starts from the cherry of the first two elements (or a single leaf).
    pub fn new(elements: Vec<ElementId>, mode: InsertionMode) -> Result<Self, HierarchyError> {
        let mut seen = HashSet::new();
        for x in &elements {
            if !seen.insert(x) {
                return Err(HierarchyError::DuplicateElement(x.clone()));
            }
        }
        let tree = match elements.as_slice() {
            [] => {
                return Err(HierarchyError::TooFewElements {
                    required: 1,
                    got: 0,
                })
            }
            [x] => BinaryHierarchy::leaf(x.clone()),
            [x, y, ..] => BinaryHierarchy::cherry(x.clone(), y.clone())?,
        };
        let queue = elements.iter().skip(2).cloned().collect();
        let mut run = InsertionRun {
            elements,
            mode,
            tree,
            queue,
            search: None,
            per_insertion: Vec::new(),
            current_queries: 0,
            asked: 0,
        };
        run.start_next()?;
        Ok(run)
    }

    fn start_next(&mut self) -> Result<(), HierarchyError> {
        while self.search.is_none() {
            let Some(x) = self.queue.pop_front() else {
                return Ok(());
            };
            let search = match &self.mode {
                InsertionMode::Exact => Search::Exact(SiblingSearch::new(&self.tree, x)?),
                InsertionMode::Robust(cfg) => {
                    let per = cfg.split(self.elements.len());
                    Search::Robust(Box::new(RobustSiblingSearch::new(&self.tree, x, &per)?))
                }
            };
            self.search = Some(search);
            self.current_queries = 0;
            self.finish_if_found()?;
        }
        Ok(())
    }

    fn finish_if_found(&mut self) -> Result<(), HierarchyError> {
        let Some(search) = &self.search else {
            return Ok(());
        };
        if search.pending_pivot(&self.tree).is_some() {
            return Ok(());
        }
        let sibling = search.result().ok_or(HierarchyError::Inconsistent)?;
        let x = search.element().clone();
        self.tree.insert_sibling(sibling, x)?;
        self.per_insertion.push(self.current_queries);
        self.search = None;
        Ok(())
    }

    pub fn mode(&self) -> &InsertionMode {
        &self.mode
    }

    pub fn elements(&self) -> &[ElementId] {
        &self.elements
    }

    pub fn is_done(&self) -> bool {
        self.search.is_none() && self.queue.is_empty()
    }

    /// The partial tree (complete once [`is_done`](Self::is_done)).
    pub fn tree(&self) -> &BinaryHierarchy {
        &self.tree
    }

    pub fn into_tree(self) -> BinaryHierarchy {
        self.tree
    }

    /// Questions answered so far.
    pub fn queries(&self) -> u64 {
        self.asked
    }

    /// Queries spent by each completed insertion, in insertion order.
    pub fn per_insertion_queries(&self) -> &[u64] {
        &self.per_insertion
    }

    /// Element currently being placed.
    pub fn inserting(&self) -> Option<&ElementId> {
        self.search.as_ref().map(Search::element)
    }

    fn pending_parts(&self) -> Option<Result<(Triplet, ElementId, ElementId), HierarchyError>> {
        let search = self.search.as_ref()?;
        let v = search.pending_pivot(&self.tree)?;
        Some(pivot_triplet(&self.tree, v, search.element()))
    }

    /// The question to ask next; `None` once done.
    pub fn pending_query(&self) -> Option<PendingQuery> {
        let (triplet, _, _) = self.pending_parts()?.ok()?;
        Some(PendingQuery {
            triplet,
            seq: self.asked + 1,
        })
    }

    /// Feeds the answer to the pending question. On error the state is left
    /// unchanged.
    pub fn submit(&mut self, answer: &TripletAnswer) -> Result<(), HierarchyError> {
        let (triplet, xl, xr) = self
            .pending_parts()
            .ok_or_else(|| HierarchyError::Malformed("no pending query".into()))??;
        if !answer.is_within(&triplet) {
            let [a, b] = answer.pair().clone();
            return Err(HierarchyError::PairNotInTriplet(a, b));
        }
        let dir = interpret_pivot(answer, &xl, &xr);
        let mut search = self.search.clone().expect("pending query implies a search");
        match &mut search {
            Search::Exact(s) => s.observe(&self.tree, dir)?,
            Search::Robust(s) => s.observe(&self.tree, dir)?,
        }
        self.search = Some(search);
        self.asked += 1;
        self.current_queries += 1;
        self.finish_if_found()?;
        self.start_next()
    }

    /// Answers every question with `o` until done.
    pub fn drive<O: OrdinalOracle + ?Sized>(mut self, o: &mut O) -> Result<Self, HierarchyError> {
        while let Some(q) = self.pending_query() {
            let answer = o.answer(&q.triplet)?;
            self.submit(&answer)?;
        }
        if self.is_done() {
            Ok(self)
        } else {
            // A pending pivot that cannot be phrased as a triplet.
            Err(self.pending_parts().and_then(Result::err).unwrap_or(HierarchyError::Inconsistent))
        }
    }
}
