//! Pairs of graphs with different matching-counts that WL cannot separate.
//!
//! * Doubled pattern: two copies of a connected pattern `P` on `m` nodes,
//!   wired together through one non-adjacent node pair either inside each copy
//!   (`g1`, no induced copy of `P`) or across the copies (`g2`, two induced
//!   copies). 2-WL never separates them.
//! * Path pair: two `m`-cycles versus one `2m`-cycle. `T` rounds of k-WL do not
//!   separate them when `m >= (k + 1) * 2^T`, yet `M(.; H_m)` is 0 versus `2m`.

use serde::{Deserialize, Serialize};

use crate::counting::{matching_count, path_pattern, CountMode, Pattern};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FeatureToken, GraphBuilder, IsoMapping};
use crate::wl::{wl_refine_pair, Iterations, Verdict, WlOptions};

/// `a` if `a` divides `b`, otherwise `b mod a`. Always in `1..=a`.
pub fn mod_a(a: u64, b: u64) -> u64 {
    assert!(a >= 1, "modulus must be positive");
    match b % a {
        0 => a,
        r => r,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    DoubledPattern {
        pattern: String,
        clique: bool,
        /// The (0-based, original labels) node pair used for rewiring.
        rewired: (usize, usize),
    },
    PathCounterexample {
        k: usize,
        t: usize,
        m: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ExpectedCounts {
    pub pattern: Pattern,
    pub mode: CountMode,
    pub count_g1: u64,
    pub count_g2: u64,
}

#[derive(Clone, Debug)]
pub struct CounterexamplePair {
    pub g1: AttributedGraph,
    pub g2: AttributedGraph,
    pub construction: Construction,
    pub expected: ExpectedCounts,
    /// False when a path pair is built outside `m >= (k + 1) * 2^T`.
    pub in_regime: bool,
}

/// Two copies of `q` on nodes `0..m` and `m..2m` plus `extra` edges.
fn doubled_with(
    q: &AttributedGraph,
    remove: &[(usize, usize)],
    extra: &[(usize, usize)],
    token: FeatureToken,
) -> Result<AttributedGraph> {
    let mut b = GraphBuilder::from_graph(&q.disjoint_union(q));
    for &(i, j) in remove {
        b.remove_edge(i, j)?;
    }
    for &(i, j) in extra {
        b.add_edge(i, j, token)?;
    }
    Ok(b.build())
}

/// Doubled-pattern pair for a connected pattern with at least 3 nodes.
///
/// Non-clique patterns are rewired through their lexicographically smallest
/// non-adjacent pair, relabeled to nodes 0 and 1; the four added edges carry
/// the fresh token `max edge token + 1`. Cliques drop edge `{0, 1}` in both
/// copies of `g1` and reconnect across copies with the dropped edge's token,
/// while `g2` is the plain doubled clique.
pub fn doubled_pattern_pair(p: &Pattern) -> Result<CounterexamplePair> {
    let m = p.n();
    if m < 3 {
        return Err(Error::PatternTooSmall(m));
    }
    if !p.is_connected() {
        return Err(Error::PatternDisconnected);
    }
    let cross = [(0, 1 + m), (m, 1)];
    let (g1, g2, rewired, clique) = if p.is_clique() {
        let q = p.graph();
        let token = q.edge(0, 1).expect("clique edge");
        let g1 = doubled_with(q, &[(0, 1), (m, m + 1)], &cross, token)?;
        let g2 = q.disjoint_union(q);
        (g1, g2, (0, 1), true)
    } else {
        let pg = p.graph();
        let (a, b) = (0..m)
            .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
            .find(|&(a, b)| !pg.has_edge(a, b))
            .expect("non-clique has a non-adjacent pair");
        let mut order = vec![a, b];
        order.extend((0..m).filter(|&v| v != a && v != b));
        // order[new] = old, so the permutation sends old -> new
        let perm = IsoMapping::new(order).expect("reordering").inverse();
        let q = pg.permuted(&perm);
        let fresh = FeatureToken(q.max_edge_token().map_or(0, |t| t.0 + 1));
        let g1 = doubled_with(&q, &[], &[(0, 1), (m, m + 1)], fresh)?;
        let g2 = doubled_with(&q, &[], &cross, fresh)?;
        (g1, g2, (a, b), false)
    };
    Ok(CounterexamplePair {
        g1,
        g2,
        construction: Construction::DoubledPattern {
            pattern: p.name().to_string(),
            clique,
            rewired,
        },
        expected: ExpectedCounts {
            pattern: p.clone(),
            mode: CountMode::Matching,
            count_g1: 0,
            count_g2: 2,
        },
        in_regime: true,
    })
}

/// Two disjoint `H_m` closed into two `m`-cycles (`g1`) or one `2m`-cycle
/// (`g2`). The added edges carry the path's own token so that every window of
/// `m` consecutive cycle nodes in `g2` is an induced `H_m`.
pub fn path_counterexample_pair(k: usize, t: usize, m: usize) -> Result<CounterexamplePair> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "path pair needs m >= 3, got {m}"
        )));
    }
    let h = AttributedGraph::path(m);
    let token = FeatureToken::DEFAULT;
    let g1 = doubled_with(&h, &[], &[(0, m - 1), (m, 2 * m - 1)], token)?;
    let g2 = doubled_with(&h, &[], &[(0, 2 * m - 1), (m - 1, m)], token)?;
    let in_regime = 1usize
        .checked_shl(t as u32)
        .and_then(|p| p.checked_mul(k + 1))
        .is_some_and(|bound| m >= bound);
    Ok(CounterexamplePair {
        g1,
        g2,
        construction: Construction::PathCounterexample { k, t, m },
        expected: ExpectedCounts {
            pattern: path_pattern(m)?,
            mode: CountMode::Matching,
            count_g1: 0,
            count_g2: 2 * m as u64,
        },
        in_regime,
    })
}

/// What the theory says k-WL should do on a pair at the checked setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WlExpectation {
    Indistinguishable,
    Distinguishable,
    NoClaim,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairVerification {
    pub construction: Construction,
    pub k: usize,
    pub iterations: Iterations,
    pub count_g1: u64,
    pub count_g2: u64,
    pub counts_match_expected: bool,
    pub verdict: Verdict,
    pub expectation: WlExpectation,
    pub pass: bool,
}

fn expectation(cp: &CounterexamplePair, k: usize, iterations: Iterations) -> WlExpectation {
    let pattern_nodes = cp.expected.pattern.n();
    match cp.construction {
        Construction::DoubledPattern { .. } if k <= 2 => WlExpectation::Indistinguishable,
        Construction::PathCounterexample { m, .. } => match iterations {
            Iterations::Fixed(t)
                if 1usize
                    .checked_shl(t as u32)
                    .and_then(|p| p.checked_mul(k + 1))
                    .is_some_and(|bound| m >= bound) =>
            {
                WlExpectation::Indistinguishable
            }
            _ if pattern_nodes <= k => WlExpectation::Distinguishable,
            _ => WlExpectation::NoClaim,
        },
        _ if pattern_nodes <= k => WlExpectation::Distinguishable,
        _ => WlExpectation::NoClaim,
    }
}

/// Recompute the counts of `cp` and run k-WL on it.
pub fn verify_pair(
    cp: &CounterexamplePair,
    k: usize,
    iterations: Iterations,
    budget: usize,
) -> Result<PairVerification> {
    debug_assert_eq!(cp.expected.mode, CountMode::Matching);
    let count_g1 = matching_count(&cp.g1, &cp.expected.pattern)?;
    let count_g2 = matching_count(&cp.g2, &cp.expected.pattern)?;
    let counts_match_expected =
        count_g1 == cp.expected.count_g1 && count_g2 == cp.expected.count_g2;
    let opts = WlOptions {
        k,
        iterations,
        budget,
    };
    let verdict = wl_refine_pair(&cp.g1, &cp.g2, opts)?.verdict;
    let expectation = expectation(cp, k, iterations);
    let wl_ok = match expectation {
        WlExpectation::Indistinguishable => !verdict.is_distinguished(),
        WlExpectation::Distinguishable => verdict.is_distinguished(),
        WlExpectation::NoClaim => true,
    };
    Ok(PairVerification {
        construction: cp.construction.clone(),
        k,
        iterations,
        count_g1,
        count_g2,
        counts_match_expected,
        verdict,
        expectation,
        pass: counts_match_expected && wl_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::is_isomorphic;
    use crate::wl::DEFAULT_BUDGET;

    fn two_triangles() -> AttributedGraph {
        AttributedGraph::complete(3).disjoint_union(&AttributedGraph::complete(3))
    }

    #[test]
    fn mod_a_values() {
        assert_eq!(mod_a(12, 12), 12);
        assert_eq!(mod_a(6, 8), 2);
        assert_eq!(mod_a(6, 7), 1);
        assert_eq!(mod_a(1, 5), 1);
    }

    #[test]
    fn doubled_triangle_is_hexagon_versus_two_triangles() {
        let cp = doubled_pattern_pair(&Pattern::triangle()).unwrap();
        assert!(is_isomorphic(&cp.g1, &AttributedGraph::cycle(6)).unwrap().is_some());
        assert!(is_isomorphic(&cp.g2, &two_triangles()).unwrap().is_some());
        let tri = Pattern::triangle();
        assert_eq!(matching_count(&cp.g1, &tri).unwrap(), 0);
        assert_eq!(matching_count(&cp.g2, &tri).unwrap(), 2);
    }

    #[test]
    fn doubled_path_has_counts_zero_and_two() {
        let h3 = path_pattern(3).unwrap();
        let cp = doubled_pattern_pair(&h3).unwrap();
        assert_eq!(matching_count(&cp.g1, &h3).unwrap(), 0);
        assert_eq!(matching_count(&cp.g2, &h3).unwrap(), 2);
        assert_eq!(
            cp.construction,
            Construction::DoubledPattern {
                pattern: "path:3".into(),
                clique: false,
                rewired: (0, 2)
            }
        );
        // added edges carry token 1 in both graphs
        assert_eq!(cp.g1.edge(0, 1), Some(FeatureToken(1)));
        assert_eq!(cp.g2.edge(0, 4), Some(FeatureToken(1)));
        assert_eq!(cp.g2.edge(3, 1), Some(FeatureToken(1)));
    }

    #[test]
    fn doubled_pattern_preconditions() {
        let edge = Pattern::new(AttributedGraph::path(2)).unwrap();
        assert!(matches!(doubled_pattern_pair(&edge), Err(Error::PatternTooSmall(2))));
        let split = Pattern::new(AttributedGraph::unattributed(4, &[(0, 1), (2, 3)]).unwrap())
            .unwrap();
        assert!(matches!(doubled_pattern_pair(&split), Err(Error::PatternDisconnected)));
    }

    #[test]
    fn path_pairs() {
        let cp = path_counterexample_pair(2, 1, 6).unwrap();
        assert!(cp.in_regime);
        let c6 = AttributedGraph::cycle(6);
        assert!(is_isomorphic(&cp.g1.induced_subgraph(&[0, 1, 2, 3, 4, 5]).unwrap(), &c6)
            .unwrap()
            .is_some());
        assert!(cp.g2.is_connected());
        assert_eq!(cp.g2.degree_sequence(), vec![2; 12]);
        let h6 = path_pattern(6).unwrap();
        assert_eq!(matching_count(&cp.g1, &h6).unwrap(), 0);
        assert_eq!(matching_count(&cp.g2, &h6).unwrap(), 12);

        let fig = path_counterexample_pair(3, 1, 8).unwrap();
        assert!(fig.in_regime);
        assert_eq!(fig.g1.n(), 16);
        assert!(fig.g1.has_edge(0, 7) && fig.g2.has_edge(0, 15) && fig.g2.has_edge(7, 8));

        assert!(!path_counterexample_pair(3, 1, 7).unwrap().in_regime);
        assert!(path_counterexample_pair(2, 0, 2).is_err());
    }

    #[test]
    fn smallest_path_pair_matches_doubled_triangle() {
        let a = path_counterexample_pair(2, 0, 3).unwrap();
        let b = doubled_pattern_pair(&Pattern::triangle()).unwrap();
        assert!(is_isomorphic(&a.g1, &b.g2).unwrap().is_some());
        assert!(is_isomorphic(&a.g2, &b.g1).unwrap().is_some());
    }

    #[test]
    fn verification_of_small_pairs() {
        let h3 = doubled_pattern_pair(&path_pattern(3).unwrap()).unwrap();
        let v = verify_pair(&h3, 2, Iterations::UntilStable, DEFAULT_BUDGET).unwrap();
        assert!(v.pass, "{v:?}");
        assert_eq!(v.verdict, Verdict::IndistinguishableStable);

        let k3 = doubled_pattern_pair(&Pattern::triangle()).unwrap();
        let v = verify_pair(&k3, 3, Iterations::Fixed(0), DEFAULT_BUDGET).unwrap();
        assert_eq!(v.expectation, WlExpectation::Distinguishable);
        assert_eq!(v.verdict, Verdict::DistinguishedAtIteration(0));
        assert!(v.pass);

        let p = path_counterexample_pair(2, 1, 6).unwrap();
        let v = verify_pair(&p, 2, Iterations::Fixed(1), DEFAULT_BUDGET).unwrap();
        assert_eq!(v.verdict, Verdict::IndistinguishableAfter(1));
        assert_eq!((v.count_g1, v.count_g2), (0, 12));
        assert!(v.pass);
    }
}
