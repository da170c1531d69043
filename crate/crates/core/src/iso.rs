//! Brute-force isomorphism and automorphism counting for small graphs.
//!
//! Nodes of the first graph are assigned in index order and candidates are
//! tried in increasing order, so the first complete assignment found is the
//! lexicographically smallest witness.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, IsoMapping};

/// Largest graph accepted by [`is_isomorphic`] and [`automorphism_count`].
pub const ISO_NODE_LIMIT: usize = 10;

fn check_size(g: &AttributedGraph) -> Result<()> {
    if g.n() > ISO_NODE_LIMIT {
        return Err(Error::SizeLimitExceeded {
            n: g.n(),
            limit: ISO_NODE_LIMIT,
        });
    }
    Ok(())
}

/// Returns the lexicographically smallest isomorphism `g1 -> g2`, if any.
///
/// An isomorphism preserves the edge set, node tokens and edge tokens.
pub fn is_isomorphic(g1: &AttributedGraph, g2: &AttributedGraph) -> Result<Option<IsoMapping>> {
    check_size(g1)?;
    check_size(g2)?;
    Ok(find_isomorphism(g1, g2))
}

/// Number of automorphisms of `g` (always at least 1).
pub fn automorphism_count(g: &AttributedGraph) -> Result<u64> {
    check_size(g)?;
    let mut count = 0u64;
    for_each_isomorphism(g, g, |_| {
        count += 1;
        ControlFlow::Continue(())
    });
    Ok(count)
}

/// Unbounded variant of [`is_isomorphic`] for internal use on graphs that are
/// already known to be small.
pub(crate) fn find_isomorphism(g1: &AttributedGraph, g2: &AttributedGraph) -> Option<IsoMapping> {
    if !cheap_invariants_match(g1, g2) {
        return None;
    }
    let mut found = None;
    for_each_isomorphism(g1, g2, |m| {
        found = Some(IsoMapping::new(m.to_vec()).expect("search yields bijections"));
        ControlFlow::Break(())
    });
    found
}

pub(crate) fn cheap_invariants_match(g1: &AttributedGraph, g2: &AttributedGraph) -> bool {
    g1.n() == g2.n()
        && g1.edge_count() == g2.edge_count()
        && g1.degree_sequence() == g2.degree_sequence()
        && g1.node_token_histogram() == g2.node_token_histogram()
        && g1.edge_token_histogram() == g2.edge_token_histogram()
}

/// Calls `visit` with every isomorphism `g1 -> g2` in lexicographic order.
pub(crate) fn for_each_isomorphism<F>(g1: &AttributedGraph, g2: &AttributedGraph, mut visit: F)
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let n = g1.n();
    if n != g2.n() {
        return;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let _ = extend(g1, g2, 0, &mut map, &mut used, &mut visit);
}

fn extend<F>(
    g1: &AttributedGraph,
    g2: &AttributedGraph,
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let n = g1.n();
    if depth == n {
        return visit(map);
    }
    let u = depth;
    for v in 0..n {
        if used[v] || g1.node_feature(u) != g2.node_feature(v) || g1.degree(u) != g2.degree(v) {
            continue;
        }
        let consistent = (0..depth).all(|w| g1.edge(w, u) == g2.edge(map[w], v));
        if !consistent {
            continue;
        }
        map[u] = v;
        used[v] = true;
        let flow = extend(g1, g2, depth + 1, map, used, visit);
        used[v] = false;
        map[u] = usize::MAX;
        flow?;
    }
    ControlFlow::Continue(())
}
