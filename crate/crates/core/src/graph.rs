//! Attributed graph data model.
//!
//! Graphs are undirected, simple (no self-loops, no multi-edges) and carry
//! discrete feature tokens on nodes and edges. An unattributed graph is one in
//! which every token is [`FeatureToken::DEFAULT`].

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque discrete feature value, compared by exact equality.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FeatureToken(pub u32);

impl FeatureToken {
    pub const DEFAULT: FeatureToken = FeatureToken(0);
}

impl fmt::Display for FeatureToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bijection on `0..n`. `map[i]` is the image of node `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsoMapping(Vec<usize>);

impl IsoMapping {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::Validation(format!("{map:?} is not a permutation")));
            }
            seen[v] = true;
        }
        Ok(IsoMapping(map))
    }

    pub fn identity(n: usize) -> Self {
        IsoMapping((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `self.then(other)` maps `i` to `other(self(i))`.
    pub fn then(&self, other: &IsoMapping) -> IsoMapping {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        IsoMapping(self.0.iter().map(|&v| other.0[v]).collect())
    }

    pub fn inverse(&self) -> IsoMapping {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        IsoMapping(inv)
    }
}

/// Undirected attributed graph `G = (V, E, x, e)` on nodes `0..n`.
///
/// Immutable once built; use [`GraphBuilder`] to construct one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AttributedGraph {
    n: usize,
    node_features: Vec<FeatureToken>,
    /// Dense `n * n` symmetric adjacency; `None` means no edge.
    adj: Vec<Option<FeatureToken>>,
    neighbors: Vec<Vec<usize>>,
}

impl fmt::Debug for AttributedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self.edges().collect();
        f.debug_struct("AttributedGraph")
            .field("n", &self.n)
            .field("node_features", &self.node_features)
            .field("edges", &edges)
            .finish()
    }
}

impl AttributedGraph {
    /// Unattributed graph from an edge list (0-based endpoints).
    pub fn unattributed(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut b = GraphBuilder::new(n);
        for &(i, j) in edges {
            b.add_edge(i, j, FeatureToken::DEFAULT)?;
        }
        Ok(b.build())
    }

    pub fn empty(n: usize) -> Self {
        GraphBuilder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            for j in i + 1..n {
                b.add_edge(i, j, FeatureToken::DEFAULT).expect("fresh pair");
            }
        }
        b.build()
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 nodes");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::unattributed(n, &edges).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::unattributed(n, &edges).expect("valid path")
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::unattributed(leaves + 1, &edges).expect("valid star")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_feature(&self, i: usize) -> FeatureToken {
        self.node_features[i]
    }

    pub fn node_features(&self) -> &[FeatureToken] {
        &self.node_features
    }

    /// Edge token of `{i, j}`, or `None` if the pair is not an edge.
    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> Option<FeatureToken> {
        self.adj[i * self.n + j]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j].is_some()
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j, token)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, FeatureToken)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors[i]
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j, self.edge(i, j).expect("neighbor is an edge")))
        })
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|i| self.degree(i)).collect();
        d.sort_unstable();
        d
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// True when every node token and edge token is the default token.
    pub fn is_unattributed(&self) -> bool {
        self.node_features.iter().all(|&t| t == FeatureToken::DEFAULT)
            && self.edges().all(|(_, _, t)| t == FeatureToken::DEFAULT)
    }

    pub fn max_edge_token(&self) -> Option<FeatureToken> {
        self.edges().map(|(_, _, t)| t).max()
    }

    pub fn max_node_token(&self) -> Option<FeatureToken> {
        self.node_features.iter().copied().max()
    }

    /// Multiset of node tokens as a sorted count map.
    pub fn node_token_histogram(&self) -> BTreeMap<FeatureToken, usize> {
        let mut h = BTreeMap::new();
        for &t in &self.node_features {
            *h.entry(t).or_insert(0) += 1;
        }
        h
    }

    pub fn edge_token_histogram(&self) -> BTreeMap<FeatureToken, usize> {
        let mut h = BTreeMap::new();
        for (_, _, t) in self.edges() {
            *h.entry(t).or_insert(0) += 1;
        }
        h
    }

    /// Relabel nodes: node `i` of `self` becomes node `perm(i)` of the result.
    pub fn permuted(&self, perm: &IsoMapping) -> AttributedGraph {
        assert_eq!(perm.len(), self.n, "permutation size mismatch");
        let mut b = GraphBuilder::new(self.n);
        for i in 0..self.n {
            b.set_node_feature(perm.apply(i), self.node_features[i]);
        }
        for (i, j, t) in self.edges() {
            b.add_edge(perm.apply(i), perm.apply(j), t).expect("permutation preserves simplicity");
        }
        b.build()
    }

    /// Subgraph induced by `nodes`; node `nodes[a]` becomes node `a`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<AttributedGraph> {
        if nodes.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut seen = vec![false; self.n];
        for &v in nodes {
            if v >= self.n {
                return Err(Error::IndexOutOfRange { index: v, n: self.n });
            }
            if seen[v] {
                return Err(Error::Validation(format!("node {v} selected twice")));
            }
            seen[v] = true;
        }
        let mut b = GraphBuilder::new(nodes.len());
        for (a, &u) in nodes.iter().enumerate() {
            b.set_node_feature(a, self.node_features[u]);
            for (c, &v) in nodes.iter().enumerate().skip(a + 1) {
                if let Some(t) = self.edge(u, v) {
                    b.add_edge(a, c, t)?;
                }
            }
        }
        Ok(b.build())
    }

    /// Disjoint union; nodes of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &AttributedGraph) -> AttributedGraph {
        let mut b = GraphBuilder::from_graph(self);
        b.grow(other.n);
        for i in 0..other.n {
            b.set_node_feature(self.n + i, other.node_features[i]);
        }
        for (i, j, t) in other.edges() {
            b.add_edge(self.n + i, self.n + j, t).expect("disjoint copies");
        }
        b.build()
    }
}

/// Mutable construction helper for [`AttributedGraph`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    n: usize,
    node_features: Vec<FeatureToken>,
    edges: BTreeMap<(usize, usize), FeatureToken>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            node_features: vec![FeatureToken::DEFAULT; n],
            edges: BTreeMap::new(),
        }
    }

    pub fn from_graph(g: &AttributedGraph) -> Self {
        GraphBuilder {
            n: g.n,
            node_features: g.node_features.clone(),
            edges: g.edges().map(|(i, j, t)| ((i, j), t)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Append `extra` isolated default-token nodes.
    pub fn grow(&mut self, extra: usize) -> &mut Self {
        self.n += extra;
        self.node_features.resize(self.n, FeatureToken::DEFAULT);
        self
    }

    pub fn set_node_feature(&mut self, i: usize, token: FeatureToken) -> &mut Self {
        self.node_features[i] = token;
        self
    }

    fn key(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        for v in [i, j] {
            if v >= self.n {
                return Err(Error::IndexOutOfRange { index: v, n: self.n });
            }
        }
        if i == j {
            return Err(Error::Validation(format!("self-loop on node {}", i + 1)));
        }
        Ok((i.min(j), i.max(j)))
    }

    pub fn add_edge(&mut self, i: usize, j: usize, token: FeatureToken) -> Result<&mut Self> {
        let key = self.key(i, j)?;
        if self.edges.contains_key(&key) {
            return Err(Error::Validation(format!(
                "duplicate edge {{{}, {}}}",
                key.0 + 1,
                key.1 + 1
            )));
        }
        self.edges.insert(key, token);
        Ok(self)
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<FeatureToken> {
        let key = self.key(i, j)?;
        self.edges.remove(&key).ok_or_else(|| {
            Error::Validation(format!("no edge {{{}, {}}} to remove", key.0 + 1, key.1 + 1))
        })
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i.min(j), i.max(j)))
    }

    pub fn build(self) -> AttributedGraph {
        let n = self.n;
        let mut adj = vec![None; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for (&(i, j), &t) in &self.edges {
            adj[i * n + j] = Some(t);
            adj[j * n + i] = Some(t);
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        AttributedGraph {
            n,
            node_features: self.node_features,
            adj,
            neighbors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn induced_subgraph_of_cycle() {
        let c6 = AttributedGraph::cycle(6);
        let p = c6.induced_subgraph(&[0, 1, 2]).unwrap();
        assert_eq!(p, AttributedGraph::path(3));
        let e = c6.induced_subgraph(&[0, 2, 4]).unwrap();
        assert_eq!(e.edge_count(), 0);
        assert_eq!(e.n(), 3);
    }

    #[test]
    fn induced_subgraph_of_clique_is_clique() {
        let k4 = AttributedGraph::complete(4);
        for sel in [[0, 1, 2], [1, 2, 3], [3, 0, 2]] {
            assert_eq!(k4.induced_subgraph(&sel).unwrap(), AttributedGraph::complete(3));
        }
    }

    #[test]
    fn induced_subgraph_rejects_empty_selection() {
        let g = AttributedGraph::cycle(4);
        assert!(matches!(g.induced_subgraph(&[]), Err(Error::EmptySelection)));
        assert!(matches!(
            g.induced_subgraph(&[7]),
            Err(Error::IndexOutOfRange { index: 7, n: 4 })
        ));
    }

    #[test]
    fn builder_rejects_loops_and_multi_edges() {
        let mut b = GraphBuilder::new(3);
        assert!(matches!(b.add_edge(1, 1, FeatureToken(0)), Err(Error::Validation(_))));
        b.add_edge(0, 1, FeatureToken(0)).unwrap();
        assert!(matches!(b.add_edge(1, 0, FeatureToken(2)), Err(Error::Validation(_))));
    }

    #[test]
    fn edge_tokens_are_symmetric() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(2, 0, FeatureToken(5)).unwrap();
        let g = b.build();
        assert_eq!(g.edge(0, 2), Some(FeatureToken(5)));
        assert_eq!(g.edge(2, 0), Some(FeatureToken(5)));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2, FeatureToken(5))]);
    }

    #[test]
    fn mapping_compose_and_invert() {
        let p = IsoMapping::new(vec![1, 2, 0]).unwrap();
        let q = p.inverse();
        assert_eq!(p.then(&q), IsoMapping::identity(3));
        assert!(IsoMapping::new(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn disjoint_union_shifts_second_graph() {
        let g = AttributedGraph::complete(3).disjoint_union(&AttributedGraph::complete(3));
        assert_eq!(g.n(), 6);
        assert_eq!(g.edge_count(), 6);
        assert!(!g.is_connected());
        assert!(g.has_edge(3, 5));
    }
}
