//! Egonets and cropped egonet tensors.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Induced neighborhood of a root. The root is node 0 of `graph`, the other
/// nodes follow in breadth-first discovery order with index tie-break.
#[derive(Clone, Debug, PartialEq)]
pub struct Egonet {
    pub root: usize,
    pub depth: usize,
    pub graph: AttributedGraph,
    /// `nodes[a]` is the node of the host graph placed at position `a`.
    pub nodes: Vec<usize>,
}

impl Egonet {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn root_degree(&self) -> usize {
        self.graph.degree(0)
    }
}

pub fn extract_egonet(g: &AttributedGraph, i: usize, depth: usize) -> Result<Egonet> {
    if i >= g.n() {
        return Err(Error::IndexOutOfRange { index: i, n: g.n() });
    }
    let mut dist = vec![usize::MAX; g.n()];
    let mut order = vec![i];
    let mut queue = VecDeque::from([i]);
    dist[i] = 0;
    while let Some(u) = queue.pop_front() {
        if dist[u] == depth {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    Ok(Egonet {
        root: i,
        depth,
        graph: g.induced_subgraph(&order)?,
        nodes: order,
    })
}

/// Channel layout of egonet tensors: adjacency, diagonal presence, then
/// one-hot node tokens on the diagonal and one-hot edge tokens off it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorLayout {
    pub node_vocab: usize,
    pub edge_vocab: usize,
}

impl TensorLayout {
    pub fn unattributed() -> Self {
        Self::default()
    }

    pub fn channels(&self) -> usize {
        2 + self.node_vocab + self.edge_vocab
    }

    /// Smallest layout covering the tokens of `graphs`; unattributed when all
    /// tokens are the default.
    pub fn covering<'a>(graphs: impl IntoIterator<Item = &'a AttributedGraph>) -> Self {
        let (mut nmax, mut emax) = (0u32, 0u32);
        for g in graphs {
            nmax = nmax.max(g.max_node_token().map_or(0, |t| t.0));
            emax = emax.max(g.max_edge_token().map_or(0, |t| t.0));
        }
        if nmax == 0 && emax == 0 {
            Self::unattributed()
        } else {
            TensorLayout {
                node_vocab: nmax as usize + 1,
                edge_vocab: emax as usize + 1,
            }
        }
    }
}

/// A `k x k x d` tensor, row-major with the channel axis last.
#[derive(Clone, Debug, PartialEq)]
pub struct EgonetTensor {
    pub k: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl EgonetTensor {
    pub fn zeros(k: usize, d: usize) -> Self {
        EgonetTensor {
            k,
            d,
            data: vec![0.0; k * k * d],
        }
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.k + b) * self.d + c]
    }

    fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.k + b) * self.d + c] = v;
    }
}

/// Crop of `graph` with position `a < order.len()` holding node `order[a]`;
/// positions past `order` are zero.
pub fn crop_tensor(
    graph: &AttributedGraph,
    order: &[usize],
    k: usize,
    layout: TensorLayout,
) -> Result<EgonetTensor> {
    let mut t = EgonetTensor::zeros(k, layout.channels());
    let order = &order[..order.len().min(k)];
    for (a, &u) in order.iter().enumerate() {
        t.set(a, a, 1, 1.0);
        if layout.node_vocab > 0 {
            let tok = graph.node_feature(u).0 as usize;
            if tok >= layout.node_vocab {
                return Err(Error::DimensionMismatch(format!(
                    "node token {tok} outside vocabulary of size {}",
                    layout.node_vocab
                )));
            }
            t.set(a, a, 2 + tok, 1.0);
        }
        for (b, &v) in order.iter().enumerate() {
            if let Some(tok) = graph.edge(u, v) {
                t.set(a, b, 0, 1.0);
                if layout.edge_vocab > 0 {
                    let tok = tok.0 as usize;
                    if tok >= layout.edge_vocab {
                        return Err(Error::DimensionMismatch(format!(
                            "edge token {tok} outside vocabulary of size {}",
                            layout.edge_vocab
                        )));
                    }
                    t.set(a, b, 2 + layout.node_vocab + tok, 1.0);
                }
            }
        }
    }
    Ok(t)
}

/// Sum over root-fixing orderings of an egonet, reduced to ordered tuples of
/// neighbors: the full sum equals `tuple_weight` times the sum over `crops`.
#[derive(Clone, Debug)]
pub struct CropSum {
    /// One crop per ordered tuple of `min(D, k-1)` distinct neighbors.
    pub crops: Vec<EgonetTensor>,
    /// Number of orderings sharing each tuple, `(D - min(D, k-1))!`.
    pub tuple_weight: f64,
    /// Number of root-fixing orderings, `D!`.
    pub ordering_count: f64,
}

impl CropSum {
    /// Weight of each crop once the sum is divided by `D!`.
    pub fn normalized_weight(&self) -> f64 {
        1.0 / self.crops.len() as f64
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn ordered_tuples(pool: &[usize], len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for &v in pool {
        if !prefix.contains(&v) {
            prefix.push(v);
            ordered_tuples(pool, len, prefix, out);
            prefix.pop();
        }
    }
}

/// Crops of the depth-1 egonet `e` over all orderings that keep the root
/// first.
pub fn lrp_feature_sum(e: &Egonet, k: usize, layout: TensorLayout) -> Result<CropSum> {
    if e.depth != 1 {
        return Err(Error::DepthUnsupported(e.depth));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("crop size must be at least 1".into()));
    }
    let d = e.n() - 1;
    let r = d.min(k - 1);
    let pool: Vec<usize> = (1..=d).collect();
    let mut tuples = Vec::new();
    ordered_tuples(&pool, r, &mut Vec::with_capacity(r + 1), &mut tuples);
    let crops = tuples
        .into_iter()
        .map(|mut t| {
            t.insert(0, 0);
            crop_tensor(&e.graph, &t, k, layout)
        })
        .collect::<Result<_>>()?;
    Ok(CropSum {
        crops,
        tuple_weight: factorial(d - r),
        ordering_count: factorial(d),
    })
}
