//! Exact matching-count and containment-count.
//!
//! * matching-count `M(G; P)`: number of node subsets whose induced subgraph is
//!   isomorphic to `P`.
//! * containment-count `C(G; P)`: number of (node set, edge set) subgraphs
//!   isomorphic to `P`, computed as the number of token-preserving edge
//!   monomorphisms `P -> G` divided by `|Aut(P)|`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FeatureToken, GraphBuilder};
use crate::iso::{automorphism_count, find_isomorphism};

/// Largest pattern the counting oracles accept.
pub const PATTERN_NODE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Matching,
    Containment,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Matching => "matching",
            CountMode::Containment => "containment",
        })
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matching" => Ok(CountMode::Matching),
            "containment" => Ok(CountMode::Containment),
            _ => Err(Error::InvalidArgument(format!("unknown count mode `{s}`"))),
        }
    }
}

/// A graph designated as a pattern, with its automorphism count cached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    name: String,
    graph: AttributedGraph,
    aut_count: u64,
    connected: bool,
}

impl Pattern {
    pub fn new(graph: AttributedGraph) -> Result<Self> {
        Self::named("custom", graph)
    }

    pub fn named(name: impl Into<String>, graph: AttributedGraph) -> Result<Self> {
        let aut_count = automorphism_count(&graph)?;
        Ok(Self::with_aut(name, graph, aut_count))
    }

    fn with_aut(name: impl Into<String>, graph: AttributedGraph, aut_count: u64) -> Self {
        let connected = graph.is_connected();
        Pattern {
            name: name.into(),
            graph,
            aut_count,
            connected,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &AttributedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn aut_count(&self) -> u64 {
        self.aut_count
    }

    /// Disconnected patterns are counted like any other but flagged here.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn is_clique(&self) -> bool {
        let n = self.graph.n();
        self.graph.edge_count() == n * n.saturating_sub(1) / 2
    }

    pub fn triangle() -> Self {
        Self::named("triangle", AttributedGraph::complete(3)).expect("small pattern")
    }

    pub fn clique(m: usize) -> Result<Self> {
        Self::named(format!("clique:{m}"), AttributedGraph::complete(m))
    }

    /// Resolve `triangle`, `3star`, `<m>star`, `path:<m>`, `star:<m>` or `clique:<m>`.
    pub fn builtin(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown builtin pattern `{spec}`"));
        let arg = |s: &str| s.parse::<usize>().map_err(|_| bad());
        if spec == "triangle" {
            return Ok(Self::triangle());
        }
        if let Some(m) = spec.strip_prefix("path:") {
            return path_pattern(arg(m)?);
        }
        if let Some(m) = spec.strip_prefix("star:") {
            return star_pattern(arg(m)?, None);
        }
        if let Some(m) = spec.strip_prefix("clique:") {
            return Self::clique(arg(m)?);
        }
        if let Some(leaves) = spec.strip_suffix("star") {
            return star_pattern(arg(leaves)? + 1, None);
        }
        Err(bad())
    }
}

/// Path pattern `H_m`: nodes `0..m`, edges `{i, i+1}`.
pub fn path_pattern(m: usize) -> Result<Pattern> {
    if m == 0 {
        return Err(Error::InvalidArgument("path pattern needs m >= 1".into()));
    }
    let aut = if m == 1 { 1 } else { 2 };
    Ok(Pattern::with_aut(format!("path:{m}"), AttributedGraph::path(m), aut))
}

fn is_default_path(p: &AttributedGraph) -> bool {
    p.is_unattributed()
        && p.is_connected()
        && p.edge_count() + 1 == p.n()
        && (0..p.n()).all(|v| p.degree(v) <= 2)
}

/// `M(g; H_m)` by extending chordless paths one node at a time. Only nodes and
/// edges with the default token can take part.
pub fn induced_path_count(g: &AttributedGraph, m: usize) -> u64 {
    let ok_node = |v: usize| g.node_feature(v) == FeatureToken::DEFAULT;
    match m {
        0 => return 1,
        1 => return (0..g.n()).filter(|&v| ok_node(v)).count() as u64,
        _ => {}
    }
    fn extend(
        g: &AttributedGraph,
        m: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        count: &mut u64,
    ) {
        if path.len() == m {
            *count += 1;
            return;
        }
        let last = *path.last().expect("non-empty path");
        for &w in g.neighbors(last) {
            if on_path[w]
                || g.node_feature(w) != FeatureToken::DEFAULT
                || g.edge(last, w) != Some(FeatureToken::DEFAULT)
                || path[..path.len() - 1].iter().any(|&u| g.has_edge(u, w))
            {
                continue;
            }
            path.push(w);
            on_path[w] = true;
            extend(g, m, path, on_path, count);
            on_path[w] = false;
            path.pop();
        }
    }
    let mut count = 0;
    let mut on_path = vec![false; g.n()];
    for v in (0..g.n()).filter(|&v| ok_node(v)) {
        on_path[v] = true;
        extend(g, m, &mut vec![v], &mut on_path, &mut count);
        on_path[v] = false;
    }
    // every path is found once from each end
    count / 2
}

/// Tokens of an attributed star: center token, then `(leaf token, edge token)`
/// for each leaf in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarFeatures {
    pub center: FeatureToken,
    pub leaves: Vec<(FeatureToken, FeatureToken)>,
}

/// Star on `m` nodes: center 0 joined to leaves `1..m`.
pub fn star_pattern(m: usize, features: Option<&StarFeatures>) -> Result<Pattern> {
    if m < 2 {
        return Err(Error::InvalidArgument("star pattern needs m >= 2".into()));
    }
    let mut b = GraphBuilder::new(m);
    match features {
        None => {
            for leaf in 1..m {
                b.add_edge(0, leaf, FeatureToken::DEFAULT)?;
            }
        }
        Some(f) => {
            if f.leaves.len() != m - 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{} leaf features for a star with {} leaves",
                    f.leaves.len(),
                    m - 1
                )));
            }
            b.set_node_feature(0, f.center);
            for (leaf, &(x, e)) in (1..m).zip(&f.leaves) {
                b.set_node_feature(leaf, x);
                b.add_edge(0, leaf, e)?;
            }
        }
    }
    Pattern::named(format!("star:{m}"), b.build())
}

fn check_pattern(p: &Pattern) -> Result<()> {
    if p.n() > PATTERN_NODE_LIMIT {
        return Err(Error::PatternTooLarge {
            n: p.n(),
            limit: PATTERN_NODE_LIMIT,
        });
    }
    Ok(())
}

/// `M(g; p)`: number of induced subgraphs of `g` isomorphic to `p`.
///
/// Returns 0 when `p` has more nodes than `g`.
///
/// Path patterns beyond the pattern size limit go through
/// [`induced_path_count`].
pub fn matching_count(g: &AttributedGraph, p: &Pattern) -> Result<u64> {
    if p.n() > PATTERN_NODE_LIMIT && is_default_path(&p.graph) {
        return Ok(induced_path_count(g, p.n()));
    }
    check_pattern(p)?;
    let m = p.n();
    if m > g.n() {
        return Ok(0);
    }
    if m == 0 {
        return Ok(1);
    }
    let target_edges = p.graph.edge_count();
    let mut chosen = Vec::with_capacity(m);
    let mut count = 0u64;
    subsets(g, p, m, target_edges, 0, 0, &mut chosen, &mut count);
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn subsets(
    g: &AttributedGraph,
    p: &Pattern,
    m: usize,
    target_edges: usize,
    start: usize,
    edges_so_far: usize,
    chosen: &mut Vec<usize>,
    count: &mut u64,
) {
    if chosen.len() == m {
        if edges_so_far == target_edges {
            let sub = g.induced_subgraph(chosen).expect("distinct in-range nodes");
            if find_isomorphism(&sub, &p.graph).is_some() {
                *count += 1;
            }
        }
        return;
    }
    let remaining = m - chosen.len();
    for v in start..=g.n() - remaining {
        let added = chosen.iter().filter(|&&u| g.has_edge(u, v)).count();
        if edges_so_far + added > target_edges {
            continue;
        }
        chosen.push(v);
        subsets(g, p, m, target_edges, v + 1, edges_so_far + added, chosen, count);
        chosen.pop();
    }
}

/// `C(g; p)`: number of subgraphs of `g` isomorphic to `p`.
pub fn containment_count(g: &AttributedGraph, p: &Pattern) -> Result<u64> {
    check_pattern(p)?;
    if p.n() > g.n() {
        return Ok(0);
    }
    let embeddings = monomorphism_count(g, p.graph());
    if !embeddings.is_multiple_of(p.aut_count) {
        return Err(Error::Internal(format!(
            "{embeddings} monomorphisms not divisible by |Aut| = {}",
            p.aut_count
        )));
    }
    Ok(embeddings / p.aut_count)
}

/// Count in the requested mode.
pub fn count(g: &AttributedGraph, p: &Pattern, mode: CountMode) -> Result<u64> {
    match mode {
        CountMode::Matching => matching_count(g, p),
        CountMode::Containment => containment_count(g, p),
    }
}

/// Pattern node order for backtracking: highest degree first, then always the
/// node with most already-placed neighbors.
fn search_order(p: &AttributedGraph) -> Vec<usize> {
    let n = p.n();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| {
                let back = p.neighbors(v).iter().filter(|&&u| placed[u]).count();
                (back, p.degree(v), std::cmp::Reverse(v))
            })
            .expect("unplaced node exists");
        placed[next] = true;
        order.push(next);
    }
    order
}

/// Number of injective maps `f: V(p) -> V(g)` with matching node tokens such
/// that every pattern edge maps to a host edge with the same token.
pub fn monomorphism_count(g: &AttributedGraph, p: &AttributedGraph) -> u64 {
    if p.n() > g.n() {
        return 0;
    }
    let order = search_order(p);
    let mut image = vec![usize::MAX; p.n()];
    let mut used = vec![false; g.n()];
    let mut count = 0u64;
    embed(g, p, &order, 0, &mut image, &mut used, &mut count);
    count
}

fn embed(
    g: &AttributedGraph,
    p: &AttributedGraph,
    order: &[usize],
    depth: usize,
    image: &mut [usize],
    used: &mut [bool],
    count: &mut u64,
) {
    if depth == order.len() {
        *count += 1;
        return;
    }
    let u = order[depth];
    let anchor = p.neighbors(u).iter().copied().find(|&w| image[w] != usize::MAX);
    let candidates: Vec<usize> = match anchor {
        Some(w) => g.neighbors(image[w]).to_vec(),
        None => (0..g.n()).collect(),
    };
    for v in candidates {
        if used[v] || g.node_feature(v) != p.node_feature(u) || g.degree(v) < p.degree(u) {
            continue;
        }
        let ok = p.neighbors(u).iter().all(|&w| {
            image[w] == usize::MAX || g.edge(image[w], v) == p.edge(w, u)
        });
        if !ok {
            continue;
        }
        image[u] = v;
        used[v] = true;
        embed(g, p, order, depth + 1, image, used, count);
        used[v] = false;
        image[u] = usize::MAX;
    }
}

/// Star shape check: node 0 adjacent to every other node, no other edges.
pub fn is_star(p: &AttributedGraph) -> bool {
    p.n() >= 2 && p.degree(0) == p.n() - 1 && p.edge_count() == p.n() - 1
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Containment-count of a star pattern by the per-node decomposition
/// `sum_j f(x_j, {(x_k, e_jk) : k in N(j)})`, where `f` is 0 on a center token
/// mismatch and otherwise the number of sub-multisets of the neighbor multiset
/// equal to the pattern's leaf multiset.
///
/// For unattributed 3-stars this is `sum_j C(deg(j), 3)`.
pub fn star_containment_count(g: &AttributedGraph, p: &Pattern) -> Result<u64> {
    let pg = p.graph();
    if !is_star(pg) {
        return Err(Error::NotAStar(format!(
            "{} nodes, {} edges, center degree {}",
            pg.n(),
            pg.edge_count(),
            if pg.n() > 0 { pg.degree(0) } else { 0 }
        )));
    }
    let center = pg.node_feature(0);
    let mut needed: BTreeMap<(FeatureToken, FeatureToken), u64> = BTreeMap::new();
    for leaf in 1..pg.n() {
        let key = (pg.node_feature(leaf), pg.edge(0, leaf).expect("star edge"));
        *needed.entry(key).or_insert(0) += 1;
    }
    let overflow = || Error::Overflow("star containment count exceeds 64 bits".into());
    let mut total: u64 = 0;
    for j in 0..g.n() {
        if g.node_feature(j) != center {
            continue;
        }
        let mut available: BTreeMap<(FeatureToken, FeatureToken), u64> = BTreeMap::new();
        for &k in g.neighbors(j) {
            let key = (g.node_feature(k), g.edge(j, k).expect("neighbor edge"));
            *available.entry(key).or_insert(0) += 1;
        }
        let mut ways: u64 = 1;
        for (key, &need) in &needed {
            let have = available.get(key).copied().unwrap_or(0);
            ways = ways
                .checked_mul(binomial(have, need).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
            if ways == 0 {
                break;
            }
        }
        total = total.checked_add(ways).ok_or_else(overflow)?;
    }
    // A single edge with equal end tokens is seen once from each end.
    if pg.n() == 2 && pg.node_feature(0) == pg.node_feature(1) {
        total /= 2;
    }
    Ok(total)
}

/// All connected unattributed graphs on `size` nodes, one per isomorphism
/// class, for `3 <= size <= 5`.
pub fn enumerate_connected_patterns(size: usize) -> Result<Vec<Pattern>> {
    if !(3..=5).contains(&size) {
        return Err(Error::SizeLimitExceeded { n: size, limit: 5 });
    }
    let pairs: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (i + 1..size).map(move |j| (i, j)))
        .collect();
    let mut classes: Vec<AttributedGraph> = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &e)| e)
            .collect();
        let g = AttributedGraph::unattributed(size, &edges)?;
        if !g.is_connected() {
            continue;
        }
        if classes.iter().all(|c| find_isomorphism(c, &g).is_none()) {
            classes.push(g);
        }
    }
    classes
        .into_iter()
        .enumerate()
        .map(|(idx, g)| Pattern::named(format!("connected:{size}:{idx}"), g))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> AttributedGraph {
        AttributedGraph::complete(3).disjoint_union(&AttributedGraph::complete(3))
    }

    #[test]
    fn matching_counts() {
        let tri = Pattern::triangle();
        assert_eq!(matching_count(&AttributedGraph::complete(3), &tri).unwrap(), 1);
        assert_eq!(matching_count(&AttributedGraph::cycle(6), &tri).unwrap(), 0);
        assert_eq!(matching_count(&two_triangles(), &tri).unwrap(), 2);
        let h6 = path_pattern(6).unwrap();
        assert_eq!(matching_count(&AttributedGraph::cycle(12), &h6).unwrap(), 12);
    }

    #[test]
    fn larger_pattern_than_host_counts_zero() {
        let k4 = Pattern::clique(4).unwrap();
        assert_eq!(matching_count(&AttributedGraph::complete(3), &k4).unwrap(), 0);
        assert_eq!(containment_count(&AttributedGraph::complete(3), &k4).unwrap(), 0);
    }

    #[test]
    fn containment_counts() {
        let k4 = AttributedGraph::complete(4);
        assert_eq!(containment_count(&k4, &Pattern::triangle()).unwrap(), 4);
        let star3 = star_pattern(4, None).unwrap();
        assert_eq!(containment_count(&k4, &star3).unwrap(), 4);
        assert_eq!(matching_count(&k4, &star3).unwrap(), 0);
        // paths of 3 nodes in a 4-cycle: 4 as subgraphs and induced
        let h3 = path_pattern(3).unwrap();
        assert_eq!(containment_count(&AttributedGraph::cycle(4), &h3).unwrap(), 4);
        assert_eq!(containment_count(&k4, &h3).unwrap(), 12);
    }

    #[test]
    fn pattern_limit() {
        let p = Pattern::new(AttributedGraph::star(8)).unwrap();
        let g = AttributedGraph::path(12);
        assert!(matches!(matching_count(&g, &p), Err(Error::PatternTooLarge { n: 9, .. })));
        assert!(matches!(containment_count(&g, &p), Err(Error::PatternTooLarge { .. })));
    }

    #[test]
    fn star_formula() {
        let star3 = star_pattern(4, None).unwrap();
        assert_eq!(star_containment_count(&AttributedGraph::complete(4), &star3).unwrap(), 4);
        assert_eq!(star_containment_count(&AttributedGraph::star(5), &star3).unwrap(), 10);
        assert!(matches!(
            star_containment_count(&AttributedGraph::star(5), &Pattern::triangle()),
            Err(Error::NotAStar(_))
        ));
    }

    #[test]
    fn single_edge_star_is_not_double_counted() {
        let edge = star_pattern(2, None).unwrap();
        let g = AttributedGraph::cycle(5);
        assert_eq!(star_containment_count(&g, &edge).unwrap(), 5);
        assert_eq!(containment_count(&g, &edge).unwrap(), 5);
    }

    #[test]
    fn attributed_star_formula() {
        // center token 1 with leaves {(2, e0), (2, e0)}
        let f = StarFeatures {
            center: FeatureToken(1),
            leaves: vec![(FeatureToken(2), FeatureToken(0)); 2],
        };
        let p = star_pattern(3, Some(&f)).unwrap();
        let mut b = GraphBuilder::new(5);
        b.set_node_feature(0, FeatureToken(1));
        for leaf in 1..5 {
            b.set_node_feature(leaf, FeatureToken(2));
            b.add_edge(0, leaf, FeatureToken(if leaf == 4 { 1 } else { 0 })).unwrap();
        }
        let g = b.build();
        // three eligible leaves, choose two
        assert_eq!(star_containment_count(&g, &p).unwrap(), 3);
        assert_eq!(containment_count(&g, &p).unwrap(), 3);
    }

    #[test]
    fn builtin_patterns() {
        assert_eq!(Pattern::builtin("3star").unwrap().graph(), &AttributedGraph::star(3));
        assert_eq!(Pattern::builtin("path:8").unwrap().n(), 8);
        assert_eq!(Pattern::builtin("triangle").unwrap().aut_count(), 6);
        assert!(Pattern::builtin("hexagon").is_err());
    }

    #[test]
    fn path_and_star_shapes() {
        assert_eq!(path_pattern(1).unwrap().graph().edge_count(), 0);
        assert_eq!(path_pattern(3).unwrap().graph().edge_count(), 2);
        assert_eq!(star_pattern(2, None).unwrap().graph().edge_count(), 1);
        assert_eq!(star_pattern(2, None).unwrap().aut_count(), 2);
        for m in 3..=6 {
            let factorial: u64 = (1..m as u64).product();
            assert_eq!(star_pattern(m, None).unwrap().aut_count(), factorial);
        }
    }

    #[test]
    fn path_counter_agrees_with_subset_oracle() {
        use crate::datasets::random_attributed_graph;
        let mut rng = crate::rng::stream(11, "path-count", 0);
        for _ in 0..40 {
            let g = random_attributed_graph(8, 0.35, 2, 2, &mut rng);
            for m in 1..=6 {
                let p = path_pattern(m).unwrap();
                assert_eq!(induced_path_count(&g, m), matching_count(&g, &p).unwrap(), "m = {m}");
            }
        }
    }

    #[test]
    fn long_paths_in_cycles() {
        let c24 = AttributedGraph::cycle(24);
        assert_eq!(matching_count(&c24, &path_pattern(12).unwrap()).unwrap(), 24);
        let two_c12 = AttributedGraph::cycle(12).disjoint_union(&AttributedGraph::cycle(12));
        assert_eq!(matching_count(&two_c12, &path_pattern(12).unwrap()).unwrap(), 0);
        assert_eq!(path_pattern(12).unwrap().aut_count(), 2);
        assert!(containment_count(&c24, &path_pattern(12).unwrap()).is_err());
    }

    #[test]
    fn connected_pattern_classes() {
        let sizes: Vec<usize> = (3..=5)
            .map(|s| enumerate_connected_patterns(s).unwrap().len())
            .collect();
        assert_eq!(sizes, vec![2, 6, 21]);
        assert!(enumerate_connected_patterns(6).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 3), Some(84));
        assert_eq!(binomial(2, 3), Some(0));
        assert_eq!(binomial(60, 30), Some(118264581564861424));
    }
}
