use std::collections::{BTreeMap, VecDeque};

use super::allen::{AllenRelation, RelationSet};
use super::TemporalError;

/// A qualitative constraint network over event ids.
///
/// Edges are stored densely in both directions; `edge(j, i)` is always the
/// converse of `edge(i, j)` and `edge(i, i)` is `{equals}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalNetwork {
    nodes: Vec<u32>,
    index: BTreeMap<u32, usize>,
    edges: Vec<RelationSet>,
}

impl TemporalNetwork {
    pub fn new<I: IntoIterator<Item = u32>>(nodes: I) -> Self {
        let mut nodes: Vec<u32> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let n = nodes.len();
        let index = nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut edges = vec![RelationSet::FULL; n * n];
        for i in 0..n {
            edges[i * n + i] = RelationSet::single(AllenRelation::Equals);
        }
        Self { nodes, index, edges }
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn idx(&self, id: u32) -> Result<usize, TemporalError> {
        self.index.get(&id).copied().ok_or(TemporalError::UnknownEvent(id))
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> RelationSet {
        self.edges[i * self.nodes.len() + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, s: RelationSet) {
        let n = self.nodes.len();
        self.edges[i * n + j] = s;
        self.edges[j * n + i] = s.converse();
    }

    /// The relation set between two events; unconstrained pairs yield the full set.
    pub fn edge(&self, a: u32, b: u32) -> RelationSet {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) => self.at(i, j),
            _ => RelationSet::FULL,
        }
    }

    /// Intersects `edge(a, b)` with `set` without propagating.
    pub fn constrain(&mut self, a: u32, b: u32, set: RelationSet) -> Result<(), TemporalError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        let s = self.at(i, j).intersection(set);
        if s.is_empty() {
            return Err(TemporalError::InconsistentNetwork { i: a, j: b, k: b });
        }
        self.set(i, j, s);
        Ok(())
    }

    /// Pairs `(a, b)` with `a < b` whose edge is not the full set.
    pub fn constrained_pairs(&self) -> Vec<(u32, u32)> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !self.at(i, j).is_full() {
                    out.push((self.nodes[i], self.nodes[j]));
                }
            }
        }
        out
    }

    /// Path-consistency closure. Never adds relations to an edge; fails as
    /// soon as some edge becomes empty.
    pub fn closure(&self) -> Result<TemporalNetwork, TemporalError> {
        let mut out = self.clone();
        let n = out.nodes.len();
        let mut seeds = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if !out.at(i, j).is_full() {
                    seeds.push((i, j));
                }
            }
        }
        out.propagate(seeds)?;
        Ok(out)
    }

    /// Tightens one edge of an already path-consistent network and restores
    /// path consistency incrementally. On error the network is left partially
    /// tightened and should be discarded.
    pub fn add_and_propagate(&mut self, a: u32, b: u32, set: RelationSet) -> Result<(), TemporalError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        let cur = self.at(i, j);
        let s = cur.intersection(set);
        if s.is_empty() {
            return Err(TemporalError::InconsistentNetwork { i: a, j: b, k: b });
        }
        if s == cur {
            return Ok(());
        }
        self.set(i, j, s);
        self.propagate(vec![(i.min(j), i.max(j))])
    }

    fn propagate(&mut self, seeds: Vec<(usize, usize)>) -> Result<(), TemporalError> {
        let n = self.nodes.len();
        let mut queued = vec![false; n * n];
        let mut queue = VecDeque::with_capacity(seeds.len());
        for (i, j) in seeds {
            if !queued[i * n + j] {
                queued[i * n + j] = true;
                queue.push_back((i, j));
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            queued[i * n + j] = false;
            let rij = self.at(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                // edge(i, k) ⊆ edge(i, j) ∘ edge(j, k)
                let rik = self.at(i, k);
                let tightened = rik.intersection(rij.compose(self.at(j, k)));
                if tightened != rik {
                    if tightened.is_empty() {
                        return Err(self.inconsistent(i, k, j));
                    }
                    self.set(i, k, tightened);
                    let key = (i.min(k), i.max(k));
                    if !queued[key.0 * n + key.1] {
                        queued[key.0 * n + key.1] = true;
                        queue.push_back(key);
                    }
                }
                // edge(k, j) ⊆ edge(k, i) ∘ edge(i, j)
                let rkj = self.at(k, j);
                let tightened = rkj.intersection(self.at(k, i).compose(rij));
                if tightened != rkj {
                    if tightened.is_empty() {
                        return Err(self.inconsistent(k, j, i));
                    }
                    self.set(k, j, tightened);
                    let key = (k.min(j), k.max(j));
                    if !queued[key.0 * n + key.1] {
                        queued[key.0 * n + key.1] = true;
                        queue.push_back(key);
                    }
                }
            }
        }
        Ok(())
    }

    fn inconsistent(&self, i: usize, j: usize, k: usize) -> TemporalError {
        TemporalError::InconsistentNetwork { i: self.nodes[i], j: self.nodes[j], k: self.nodes[k] }
    }
}
