//! k-WL color refinement with exact color interning.
//!
//! Tuples `s in V^k` are initialised by their isomorphism type and refined by
//!
//! ```text
//! C_w(s)   = intern( {{ c(s') : s' in N_w(s) }} )      for w = 1..k
//! c'(s)    = intern( (c(s), C_1(s), .., C_k(s)) )
//! ```
//!
//! where `N_w(s)` replaces the `w`-th entry of `s` by every node. Both interners
//! are shared by all graphs refined together and rebuilt every iteration, so
//! colors are comparable across graphs at the same iteration and equal
//! signatures always get equal ids. Tuples are visited in lexicographic order,
//! which fixes the ids; the verdicts only depend on multisets.
//!
//! `k = 1` is classic node refinement (own color plus the multiset of
//! `(neighbor color, edge token)` pairs).

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FeatureToken};

pub type ColorId = u32;

/// Sorted `(color, multiplicity)` list of one graph at one iteration.
pub type Histogram = Vec<(ColorId, usize)>;

/// Default bound on `n^k` per graph.
pub const DEFAULT_BUDGET: usize = 200_000;

/// Canonical isomorphism type of a k-tuple.
///
/// Two tuples (in the same or in different graphs) get equal codes iff their
/// entry equality patterns, per-position node tokens, and per-position-pair
/// adjacency and edge tokens all agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsoTypeCode {
    /// For each position, the first position holding the same node.
    pub equality_pattern: Vec<u16>,
    pub node_features: Vec<FeatureToken>,
    /// Row-major over ordered position pairs `(a, b)`, `a != b`.
    pub pair_relations: Vec<Option<FeatureToken>>,
}

pub fn iso_type(g: &AttributedGraph, s: &[usize]) -> Result<IsoTypeCode> {
    if let Some(&bad) = s.iter().find(|&&v| v >= g.n()) {
        return Err(Error::IndexOutOfRange { index: bad, n: g.n() });
    }
    Ok(iso_type_unchecked(g, s))
}

fn iso_type_unchecked(g: &AttributedGraph, s: &[usize]) -> IsoTypeCode {
    let k = s.len();
    let equality_pattern = (0..k)
        .map(|a| (0..=a).find(|&b| s[b] == s[a]).expect("a matches itself") as u16)
        .collect();
    let node_features = s.iter().map(|&v| g.node_feature(v)).collect();
    let mut pair_relations = Vec::with_capacity(k * k.saturating_sub(1));
    for a in 0..k {
        for b in 0..k {
            if a != b {
                pair_relations.push(if s[a] == s[b] { None } else { g.edge(s[a], s[b]) });
            }
        }
    }
    IsoTypeCode {
        equality_pattern,
        node_features,
        pair_relations,
    }
}

/// Injective map from signatures to dense color ids, in first-seen order.
struct Interner<K> {
    ids: HashMap<K, ColorId>,
}

impl<K: Hash + Eq> Interner<K> {
    fn new() -> Self {
        Interner { ids: HashMap::new() }
    }

    fn intern(&mut self, key: K) -> ColorId {
        let next = self.ids.len() as ColorId;
        *self.ids.entry(key).or_insert(next)
    }

    fn len(&self) -> usize {
        self.ids.len()
    }
}

impl Interner<Vec<u32>> {
    fn intern_slice(&mut self, key: &[u32]) -> ColorId {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let next = self.ids.len() as ColorId;
        self.ids.insert(key.to_vec(), next);
        next
    }
}

/// Iteration control for a refinement run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Iterations {
    Fixed(usize),
    UntilStable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DistinguishedAtIteration(usize),
    IndistinguishableAfter(usize),
    IndistinguishableStable,
}

impl Verdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, Verdict::DistinguishedAtIteration(_))
    }
}

#[derive(Clone, Debug)]
pub struct DistinguishResult {
    pub verdict: Verdict,
    /// Per graph, per iteration color histogram.
    pub histories: [Vec<Histogram>; 2],
    /// Number of color classes over both graphs, per iteration.
    pub class_counts: Vec<usize>,
}

/// Simultaneous refinement of several graphs with shared interners.
pub struct Refinement<'a> {
    graphs: Vec<&'a AttributedGraph>,
    k: usize,
    colors: Vec<Vec<ColorId>>,
    classes: usize,
    iteration: usize,
}

fn check_budget(g: &AttributedGraph, k: usize, budget: usize) -> Result<usize> {
    match g.n().checked_pow(k as u32) {
        Some(t) if t <= budget => Ok(t),
        _ => Err(Error::BudgetExceeded {
            n: g.n(),
            k,
            budget,
        }),
    }
}

/// Entries of the tuple with lexicographic index `idx` over `n` nodes.
pub fn tuple_entries(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    for w in (0..k).rev() {
        s[w] = idx % n;
        idx /= n;
    }
    s
}

pub fn tuple_index(s: &[usize], n: usize) -> usize {
    s.iter().fold(0, |acc, &v| acc * n + v)
}

impl<'a> Refinement<'a> {
    /// Initial coloring (iteration 0) of `graphs`.
    pub fn new(graphs: &[&'a AttributedGraph], k: usize, budget: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        for g in graphs {
            check_budget(g, k, budget)?;
        }
        let (colors, classes) = if k == 1 {
            let mut tokens = Interner::new();
            let colors: Vec<Vec<ColorId>> = graphs
                .iter()
                .map(|g| (0..g.n()).map(|v| tokens.intern(g.node_feature(v))).collect())
                .collect();
            (colors, tokens.len())
        } else {
            let mut iso_codes = Interner::new();
            let colors: Vec<Vec<ColorId>> = graphs
                .iter()
                .map(|g| {
                    let n = g.n();
                    (0..n.pow(k as u32))
                        .map(|idx| {
                            iso_codes.intern(iso_type_unchecked(g, &tuple_entries(idx, n, k)))
                        })
                        .collect()
                })
                .collect();
            (colors, iso_codes.len())
        };
        Ok(Refinement {
            graphs: graphs.to_vec(),
            k,
            colors,
            classes,
            iteration: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Number of distinct colors over all graphs.
    pub fn class_count(&self) -> usize {
        self.classes
    }

    /// Colors of graph `idx`, indexed by node (k = 1) or by lexicographic
    /// tuple index.
    pub fn colors(&self, idx: usize) -> &[ColorId] {
        &self.colors[idx]
    }

    pub fn histogram(&self, idx: usize) -> Histogram {
        let mut sorted = self.colors[idx].clone();
        sorted.sort_unstable();
        let mut h: Histogram = Vec::new();
        for c in sorted {
            match h.last_mut() {
                Some((last, m)) if *last == c => *m += 1,
                _ => h.push((c, 1)),
            }
        }
        h
    }

    /// One refinement round. Returns `false` when the partition did not change.
    pub fn step(&mut self) -> bool {
        let before = self.classes;
        let mut multisets: Interner<Vec<u32>> = Interner::new();
        let mut signatures: Interner<Vec<u32>> = Interner::new();
        let mut next = Vec::with_capacity(self.colors.len());
        for (g, old) in self.graphs.iter().zip(&self.colors) {
            let colors = if self.k == 1 {
                node_step(g, old, &mut signatures)
            } else {
                tuple_step(g.n(), self.k, old, &mut multisets, &mut signatures)
            };
            next.push(colors);
        }
        self.colors = next;
        self.classes = signatures.len();
        self.iteration += 1;
        self.classes != before
    }
}

fn node_step(g: &AttributedGraph, old: &[ColorId], signatures: &mut Interner<Vec<u32>>) -> Vec<ColorId> {
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut sig: Vec<u32> = Vec::new();
    (0..g.n())
        .map(|v| {
            pairs.clear();
            pairs.extend(
                g.neighbors(v)
                    .iter()
                    .map(|&u| (old[u], g.edge(u, v).expect("neighbor edge").0)),
            );
            pairs.sort_unstable();
            sig.clear();
            sig.push(old[v]);
            for &(c, t) in &pairs {
                sig.push(c);
                sig.push(t);
            }
            signatures.intern_slice(&sig)
        })
        .collect()
}

fn tuple_step(
    n: usize,
    k: usize,
    old: &[ColorId],
    multisets: &mut Interner<Vec<u32>>,
    signatures: &mut Interner<Vec<u32>>,
) -> Vec<ColorId> {
    let strides: Vec<usize> = (0..k).map(|w| n.pow((k - 1 - w) as u32)).collect();
    let mut scratch: Vec<u32> = Vec::with_capacity(n);
    let mut sig: Vec<u32> = Vec::with_capacity(k + 1);
    (0..old.len())
        .map(|s| {
            sig.clear();
            sig.push(old[s]);
            for &stride in &strides {
                let digit = (s / stride) % n;
                let base = s - digit * stride;
                scratch.clear();
                scratch.extend((0..n).map(|j| old[base + j * stride]));
                scratch.sort_unstable();
                sig.push(multisets.intern_slice(&scratch));
            }
            signatures.intern_slice(&sig)
        })
        .collect()
}

/// Options for [`wl_refine_pair`].
#[derive(Clone, Copy, Debug)]
pub struct WlOptions {
    pub k: usize,
    pub iterations: Iterations,
    pub budget: usize,
}

impl WlOptions {
    pub fn new(k: usize, iterations: Iterations) -> Self {
        WlOptions {
            k,
            iterations,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Run k-WL on two graphs with a shared dictionary and compare the global
/// color multisets after every iteration.
pub fn wl_refine_pair(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    opts: WlOptions,
) -> Result<DistinguishResult> {
    if g1.n() != g2.n() {
        return Ok(DistinguishResult {
            verdict: Verdict::DistinguishedAtIteration(0),
            histories: [Vec::new(), Vec::new()],
            class_counts: Vec::new(),
        });
    }
    let mut r = Refinement::new(&[g1, g2], opts.k, opts.budget)?;
    let mut histories = [vec![r.histogram(0)], vec![r.histogram(1)]];
    let mut class_counts = vec![r.class_count()];
    let differs = |h: &[Vec<Histogram>; 2]| h[0].last() != h[1].last();
    if differs(&histories) {
        return Ok(DistinguishResult {
            verdict: Verdict::DistinguishedAtIteration(0),
            histories,
            class_counts,
        });
    }
    let verdict = loop {
        if let Iterations::Fixed(t) = opts.iterations {
            if r.iteration() >= t {
                break Verdict::IndistinguishableAfter(t);
            }
        }
        let changed = r.step();
        histories[0].push(r.histogram(0));
        histories[1].push(r.histogram(1));
        class_counts.push(r.class_count());
        if differs(&histories) {
            break Verdict::DistinguishedAtIteration(r.iteration());
        }
        if !changed {
            break match opts.iterations {
                Iterations::Fixed(t) => Verdict::IndistinguishableAfter(t),
                Iterations::UntilStable => Verdict::IndistinguishableStable,
            };
        }
    };
    Ok(DistinguishResult {
        verdict,
        histories,
        class_counts,
    })
}

/// Per-iteration color histograms of a single graph, `t = 0..=iterations`.
pub fn wl_color_histogram(
    g: &AttributedGraph,
    k: usize,
    iterations: usize,
    budget: usize,
) -> Result<Vec<Histogram>> {
    let mut r = Refinement::new(&[g], k, budget)?;
    let mut out = vec![r.histogram(0)];
    for _ in 0..iterations {
        r.step();
        out.push(r.histogram(0));
    }
    Ok(out)
}

/// Node color history of classic refinement, `t = 0..=iterations`.
pub fn wl1_node_refinement(g: &AttributedGraph, iterations: usize) -> Vec<Vec<ColorId>> {
    let mut r = Refinement::new(&[g], 1, usize::MAX).expect("k = 1 has no budget");
    let mut out = vec![r.colors(0).to_vec()];
    for _ in 0..iterations {
        r.step();
        out.push(r.colors(0).to_vec());
    }
    out
}

/// Partition `graphs` into classes that stable k-WL (or `iterations` rounds)
/// cannot tell apart. Returns a class id per graph, dense in first-seen order.
pub fn wl_equivalence_classes(
    graphs: &[&AttributedGraph],
    k: usize,
    iterations: Iterations,
    budget: usize,
) -> Result<Vec<usize>> {
    let mut r = Refinement::new(graphs, k, budget)?;
    loop {
        if let Iterations::Fixed(t) = iterations {
            if r.iteration() >= t {
                break;
            }
        }
        if !r.step() {
            break;
        }
    }
    let mut ids: HashMap<(usize, Histogram), usize> = HashMap::new();
    Ok((0..graphs.len())
        .map(|i| {
            let next = ids.len();
            *ids.entry((graphs[i].n(), r.histogram(i))).or_insert(next)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IsoMapping;

    fn two_triangles() -> AttributedGraph {
        AttributedGraph::complete(3).disjoint_union(&AttributedGraph::complete(3))
    }

    #[test]
    fn iso_type_examples() {
        let k3 = AttributedGraph::complete(3);
        assert_eq!(iso_type(&k3, &[0, 0]).unwrap(), iso_type(&k3, &[2, 2]).unwrap());
        assert_eq!(iso_type(&k3, &[0, 1]).unwrap(), iso_type(&k3, &[1, 2]).unwrap());
        let c6 = AttributedGraph::cycle(6);
        assert_ne!(iso_type(&c6, &[0, 1]).unwrap(), iso_type(&c6, &[0, 2]).unwrap());
        assert!(matches!(
            iso_type(&c6, &[0, 6]),
            Err(Error::IndexOutOfRange { index: 6, n: 6 })
        ));
    }

    #[test]
    fn two_wl_cannot_separate_hexagon_from_two_triangles() {
        let r = wl_refine_pair(
            &AttributedGraph::cycle(6),
            &two_triangles(),
            WlOptions::new(2, Iterations::UntilStable),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::IndistinguishableStable);
    }

    #[test]
    fn three_wl_separates_at_initialization() {
        let r = wl_refine_pair(
            &AttributedGraph::cycle(6),
            &two_triangles(),
            WlOptions::new(3, Iterations::Fixed(0)),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::DistinguishedAtIteration(0));
    }

    #[test]
    fn relabeled_graph_is_indistinguishable() {
        let g = AttributedGraph::unattributed(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let h = g.permuted(&IsoMapping::new(vec![3, 0, 4, 1, 2]).unwrap());
        for k in 1..=3 {
            let r = wl_refine_pair(&g, &h, WlOptions::new(k, Iterations::UntilStable)).unwrap();
            assert_eq!(r.verdict, Verdict::IndistinguishableStable, "k = {k}");
        }
    }

    #[test]
    fn unequal_sizes_are_trivially_distinguished() {
        let r = wl_refine_pair(
            &AttributedGraph::cycle(5),
            &AttributedGraph::cycle(6),
            WlOptions::new(2, Iterations::UntilStable),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::DistinguishedAtIteration(0));
    }

    #[test]
    fn budget_is_enforced() {
        let g = AttributedGraph::cycle(60);
        let err = wl_refine_pair(&g, &g, WlOptions::new(3, Iterations::Fixed(1))).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { n: 60, k: 3, .. }));
    }

    #[test]
    fn triangle_two_wl_histogram_at_zero() {
        let h = wl_color_histogram(&AttributedGraph::complete(3), 2, 0, DEFAULT_BUDGET).unwrap();
        let mut mults: Vec<usize> = h[0].iter().map(|&(_, m)| m).collect();
        mults.sort_unstable();
        assert_eq!(mults, vec![3, 6]);
    }

    #[test]
    fn vertex_transitive_graph_keeps_one_node_class() {
        for h in wl_color_histogram(&AttributedGraph::cycle(7), 1, 4, DEFAULT_BUDGET).unwrap() {
            assert_eq!(h.len(), 1);
        }
    }

    #[test]
    fn node_refinement_splits_by_degree() {
        let c6 = wl1_node_refinement(&AttributedGraph::cycle(6), 3);
        assert!(c6.iter().all(|cs| cs.iter().all(|&c| c == cs[0])));

        let p3 = wl1_node_refinement(&AttributedGraph::path(3), 1);
        assert!(p3[0].iter().all(|&c| c == p3[0][0]));
        assert_eq!(p3[1][0], p3[1][2]);
        assert_ne!(p3[1][0], p3[1][1]);

        let star = wl1_node_refinement(&AttributedGraph::star(3), 1);
        assert!(star[1][1..].iter().all(|&c| c == star[1][1]));
        assert_ne!(star[1][0], star[1][1]);
    }

    #[test]
    fn tuple_indexing_round_trips() {
        for idx in 0..125 {
            assert_eq!(tuple_index(&tuple_entries(idx, 5, 3), 5), idx);
        }
        assert_eq!(tuple_entries(7, 5, 2), vec![1, 2]);
    }

    #[test]
    fn equivalence_classes_group_wl_equivalent_graphs() {
        let c6 = AttributedGraph::cycle(6);
        let tt = two_triangles();
        let p6 = AttributedGraph::path(6);
        let classes =
            wl_equivalence_classes(&[&c6, &tt, &p6], 2, Iterations::UntilStable, DEFAULT_BUDGET)
                .unwrap();
        assert_eq!(classes, vec![0, 0, 1]);
    }
}
