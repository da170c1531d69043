//! Reference message passing network.
//!
//! Tokens are one-hot embedded. Each layer computes
//! `h_i' = U([h_i; sum_j M([h_i; h_j; onehot(e_ij)])])` with `M` and `U` two
//! layer dense maps with relu in between, and the readout sums the final
//! node states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

use super::init_uniform;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Dense {
            in_dim,
            out_dim,
            weights: (0..in_dim * out_dim).map(|_| init_uniform(rng, in_dim)).collect(),
            bias: (0..out_dim).map(|_| init_uniform(rng, in_dim)).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.weights.len() != self.in_dim * self.out_dim || self.bias.len() != self.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "dense {}x{} with {} weights and {} biases",
                self.out_dim,
                self.in_dim,
                self.weights.len(),
                self.bias.len()
            )));
        }
        if !self.weights.iter().chain(&self.bias).all(|w| w.is_finite()) {
            return Err(Error::Validation("non-finite MPNN parameter".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.weights
            .chunks_exact(self.in_dim.max(1))
            .take(self.out_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// `out(relu(hidden(x)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLayer {
    pub hidden: Dense,
    pub out: Dense,
}

impl TwoLayer {
    pub fn random<R: Rng + ?Sized>(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut R) -> Self {
        TwoLayer {
            hidden: Dense::random(in_dim, hidden, rng),
            out: Dense::random(hidden, out_dim, rng),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.hidden.forward(x);
        z.iter_mut().for_each(|v| *v = v.max(0.0));
        self.out.forward(&z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpnnLayer {
    pub message: TwoLayer,
    pub update: TwoLayer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpnnParams {
    pub node_vocab: usize,
    pub edge_vocab: usize,
    pub layers: Vec<MpnnLayer>,
}

impl MpnnParams {
    /// `layers` layers of width `hidden` over the given token vocabularies.
    pub fn random<R: Rng + ?Sized>(
        node_vocab: usize,
        edge_vocab: usize,
        hidden: usize,
        layers: usize,
        rng: &mut R,
    ) -> Self {
        let mut dim = node_vocab;
        let layers = (0..layers)
            .map(|_| {
                let layer = MpnnLayer {
                    message: TwoLayer::random(2 * dim + edge_vocab, hidden, hidden, rng),
                    update: TwoLayer::random(dim + hidden, hidden, hidden, rng),
                };
                dim = hidden;
                layer
            })
            .collect();
        MpnnParams {
            node_vocab,
            edge_vocab,
            layers,
        }
    }

    /// Width of the readout vector.
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.node_vocab, |l| l.update.out.out_dim)
    }

    pub fn validate(&self) -> Result<()> {
        let mut dim = self.node_vocab;
        for (t, layer) in self.layers.iter().enumerate() {
            for d in [
                &layer.message.hidden,
                &layer.message.out,
                &layer.update.hidden,
                &layer.update.out,
            ] {
                d.validate()?;
            }
            let msg = layer.message.out.out_dim;
            let chained = layer.message.hidden.in_dim == 2 * dim + self.edge_vocab
                && layer.message.out.in_dim == layer.message.hidden.out_dim
                && layer.update.hidden.in_dim == dim + msg
                && layer.update.out.in_dim == layer.update.hidden.out_dim;
            if !chained {
                return Err(Error::DimensionMismatch(format!("layer {t} does not chain")));
            }
            dim = layer.update.out.out_dim;
        }
        Ok(())
    }
}

fn one_hot(token: u32, vocab: usize, what: &str) -> Result<Vec<f64>> {
    let t = token as usize;
    if t >= vocab {
        return Err(Error::DimensionMismatch(format!(
            "{what} token {t} outside vocabulary of size {vocab}"
        )));
    }
    let mut v = vec![0.0; vocab];
    v[t] = 1.0;
    Ok(v)
}

/// Readout vector `sum_i h_i^(T)`. Neighbors and nodes are summed in index
/// order.
pub fn mpnn_forward(g: &AttributedGraph, params: &MpnnParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut h: Vec<Vec<f64>> = g
        .node_features()
        .iter()
        .map(|t| one_hot(t.0, params.node_vocab, "node"))
        .collect::<Result<_>>()?;
    let mut edge_codes = vec![Vec::new(); g.n() * g.n()];
    for (i, j, t) in g.edges() {
        let code = one_hot(t.0, params.edge_vocab, "edge")?;
        edge_codes[i * g.n() + j] = code.clone();
        edge_codes[j * g.n() + i] = code;
    }
    for layer in &params.layers {
        let msg_dim = layer.message.out.out_dim;
        h = (0..g.n())
            .map(|i| {
                let mut agg = vec![0.0; msg_dim];
                for &j in g.neighbors(i) {
                    let input: Vec<f64> = h[i]
                        .iter()
                        .chain(&h[j])
                        .chain(&edge_codes[i * g.n() + j])
                        .copied()
                        .collect();
                    for (a, m) in agg.iter_mut().zip(layer.message.forward(&input)) {
                        *a += m;
                    }
                }
                let input: Vec<f64> = h[i].iter().chain(&agg).copied().collect();
                layer.update.forward(&input)
            })
            .collect();
    }
    let mut out = vec![0.0; params.output_dim()];
    for hi in &h {
        for (o, v) in out.iter_mut().zip(hi) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IsoMapping;
    use crate::rng::stream;

    #[test]
    fn single_node_sees_zero_message() {
        let mut rng = stream(1, "mpnn", 0);
        let p = MpnnParams::random(1, 1, 4, 1, &mut rng);
        let out = mpnn_forward(&AttributedGraph::empty(1), &p).unwrap();
        let expect = p.layers[0].update.forward(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out, expect);
    }

    #[test]
    fn no_layers_counts_tokens() {
        let p = MpnnParams::random(2, 1, 4, 0, &mut stream(1, "mpnn", 0));
        let out = mpnn_forward(&AttributedGraph::cycle(5), &p).unwrap();
        assert_eq!(out, vec![5.0, 0.0]);
    }

    #[test]
    fn relabeling_invariance() {
        let mut rng = stream(2, "mpnn", 0);
        let p = MpnnParams::random(1, 1, 8, 3, &mut rng);
        let g = AttributedGraph::unattributed(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]).unwrap();
        let pg = g.permuted(&IsoMapping::new(vec![3, 0, 4, 1, 2]).unwrap());
        let a = mpnn_forward(&g, &p).unwrap();
        let b = mpnn_forward(&pg, &p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn token_outside_vocabulary() {
        let p = MpnnParams::random(1, 1, 2, 1, &mut stream(1, "mpnn", 0));
        let mut b = crate::graph::GraphBuilder::new(2);
        b.set_node_feature(1, crate::graph::FeatureToken(3));
        assert!(matches!(mpnn_forward(&b.build(), &p), Err(Error::DimensionMismatch(_))));
    }
}
