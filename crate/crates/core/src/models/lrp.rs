//! LRP-1-k: local relational pooling over depth-1 egonets.
//!
//! For node `i` with degree `D` and crops `C` of its egonet,
//!
//! ```text
//! u_j  = mean over root-fixing orderings of tanh(<W2_j, C>)
//! g    = M relu(a D + c) + e
//! h_ij = relu(g_j u_j)
//! y    = <W1, sum_i h_i> + b1
//! ```

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

use super::egonet::{extract_egonet, lrp_feature_sum, TensorLayout};
use super::{init_uniform, pairwise_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LrpConfig {
    pub depth: usize,
    pub crop: usize,
    pub hidden: usize,
    pub layout: TensorLayout,
}

impl Default for LrpConfig {
    fn default() -> Self {
        LrpConfig {
            depth: 1,
            crop: 4,
            hidden: 16,
            layout: TensorLayout::unattributed(),
        }
    }
}

impl LrpConfig {
    /// Length of a flattened crop, `k * k * d`.
    pub fn crop_len(&self) -> usize {
        self.crop * self.crop * self.layout.channels()
    }

    pub fn param_count(&self) -> usize {
        let (h, k) = (self.hidden, self.crop_len());
        h * k + 2 * h + h * h + h + h + 1
    }

    fn offsets(&self) -> Offsets {
        let (h, k) = (self.hidden, self.crop_len());
        let w2 = 0;
        let a = w2 + h * k;
        let c = a + h;
        let m = c + h;
        let e = m + h * h;
        let w1 = e + h;
        let b1 = w1 + h;
        Offsets { w2, a, c, m, e, w1, b1 }
    }
}

#[derive(Clone, Copy)]
struct Offsets {
    w2: usize,
    a: usize,
    c: usize,
    m: usize,
    e: usize,
    w1: usize,
    b1: usize,
}

/// Parameters are stored flat in the order `W2` (row per hidden unit), `a`,
/// `c`, `M` (row-major), `e`, `W1`, `b1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrpModel {
    pub config: LrpConfig,
    pub params: Vec<f64>,
}

impl LrpModel {
    pub fn zeros(config: LrpConfig) -> Self {
        LrpModel {
            config,
            params: vec![0.0; config.param_count()],
        }
    }

    pub fn random<R: Rng + ?Sized>(config: LrpConfig, rng: &mut R) -> Self {
        let o = config.offsets();
        let (h, k) = (config.hidden, config.crop_len());
        let params = (0..config.param_count())
            .map(|p| {
                let fan_in = if p < o.a {
                    k
                } else if p < o.m {
                    1
                } else {
                    h
                };
                init_uniform(rng, fan_in)
            })
            .collect();
        LrpModel { config, params }
    }

    pub fn validate(&self) -> Result<()> {
        if self.config.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be at least 1".into()));
        }
        if self.config.depth != 1 {
            return Err(Error::DepthUnsupported(self.config.depth));
        }
        if self.params.len() != self.config.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters, config needs {}",
                self.params.len(),
                self.config.param_count()
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) {
            return Err(Error::Validation("non-finite LRP parameter".into()));
        }
        Ok(())
    }

    /// Prediction for precomputed features.
    pub fn predict(&self, f: &LrpFeatures) -> Result<f64> {
        self.check(f)?;
        Ok(self.pass(f, None))
    }

    fn check(&self, f: &LrpFeatures) -> Result<()> {
        if f.config_key != (self.config.crop, self.config.layout) {
            return Err(Error::DimensionMismatch(
                "features were computed for a different crop size or layout".into(),
            ));
        }
        Ok(())
    }

    /// Forward pass; with `Some((dy, grad))` also accumulates `dy * dy/dθ`.
    fn pass(&self, f: &LrpFeatures, mut back: Option<(f64, &mut [f64])>) -> f64 {
        let o = self.config.offsets();
        let h = self.config.hidden;
        let k = self.config.crop_len();
        let p = &self.params;
        let mut pooled = vec![0.0; h];
        struct Cache {
            pre: Vec<f64>,
            z: Vec<f64>,
            u: Vec<f64>,
            s: Vec<f64>,
            t: Vec<f64>,
        }
        let mut caches = Vec::with_capacity(f.nodes.len());
        for node in &f.nodes {
            let pre: Vec<f64> = (0..h).map(|i| p[o.a + i] * node.degree + p[o.c + i]).collect();
            let z: Vec<f64> = (0..h)
                .map(|j| {
                    let row = &p[o.m + j * h..o.m + (j + 1) * h];
                    row.iter().zip(&pre).map(|(m, v)| m * v.max(0.0)).sum::<f64>() + p[o.e + j]
                })
                .collect();
            let mut t = vec![0.0; node.crops.len() * h];
            let mut u = vec![0.0; h];
            for (ci, (idx, w)) in node.crops.iter().enumerate() {
                for j in 0..h {
                    let row = &p[o.w2 + j * k..o.w2 + (j + 1) * k];
                    let act: f64 = idx.iter().map(|&x| row[x as usize]).sum();
                    let th = act.tanh();
                    t[ci * h + j] = th;
                    u[j] += w * th;
                }
            }
            let s: Vec<f64> = z.iter().zip(&u).map(|(z, u)| z * u).collect();
            for j in 0..h {
                pooled[j] += node.multiplicity * s[j].max(0.0);
            }
            if back.is_some() {
                caches.push(Cache { pre, z, u, s, t });
            }
        }
        let y = (0..h).map(|j| p[o.w1 + j] * pooled[j]).sum::<f64>() + p[o.b1];
        if let Some((dy, grad)) = back.as_mut() {
            let dy = *dy;
            grad[o.b1] += dy;
            for j in 0..h {
                grad[o.w1 + j] += dy * pooled[j];
            }
            for (node, c) in f.nodes.iter().zip(&caches) {
                let mut dpre = vec![0.0; h];
                for j in 0..h {
                    if c.s[j] <= 0.0 {
                        continue;
                    }
                    let ds = dy * p[o.w1 + j] * node.multiplicity;
                    let dz = ds * c.u[j];
                    let du = ds * c.z[j];
                    grad[o.e + j] += dz;
                    for i in 0..h {
                        if c.pre[i] > 0.0 {
                            grad[o.m + j * h + i] += dz * c.pre[i];
                            dpre[i] += dz * p[o.m + j * h + i];
                        }
                    }
                    for (ci, (idx, w)) in node.crops.iter().enumerate() {
                        let th = c.t[ci * h + j];
                        let dact = du * w * (1.0 - th * th);
                        for &x in idx {
                            grad[o.w2 + j * k + x as usize] += dact;
                        }
                    }
                }
                for i in 0..h {
                    if c.pre[i] > 0.0 {
                        grad[o.a + i] += dpre[i] * node.degree;
                        grad[o.c + i] += dpre[i];
                    }
                }
            }
        }
        y
    }

    /// Mean squared error over `batch`.
    pub fn mse(&self, batch: &[(&LrpFeatures, f64)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptySplit("batch"));
        }
        self.validate()?;
        let sq: Vec<f64> = batch
            .par_iter()
            .map(|(f, y)| self.predict(f).map(|p| (p - y) * (p - y)))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&sq) / batch.len() as f64)
    }

    /// Mean squared error over `batch` and its gradient. Graphs are processed
    /// in parallel chunks whose gradients are summed in a fixed order.
    pub fn loss_and_gradient(&self, batch: &[(&LrpFeatures, f64)]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptySplit("batch"));
        }
        self.validate()?;
        for (f, _) in batch {
            self.check(f)?;
        }
        let scale = 2.0 / batch.len() as f64;
        let parts: Vec<(Vec<f64>, Vec<f64>)> = batch
            .par_chunks(8)
            .map(|chunk| {
                let mut grad = vec![0.0; self.params.len()];
                let mut sq = Vec::with_capacity(chunk.len());
                for (f, target) in chunk {
                    let y = self.pass(f, None);
                    let r = y - target;
                    sq.push(r * r);
                    self.pass(f, Some((scale * r, &mut grad)));
                }
                (sq, grad)
            })
            .collect();
        let sq: Vec<f64> = parts.iter().flat_map(|(s, _)| s.iter().copied()).collect();
        let grad = (0..self.params.len())
            .map(|q| pairwise_sum(&parts.iter().map(|(_, g)| g[q]).collect::<Vec<_>>()))
            .collect();
        Ok((pairwise_sum(&sq) / batch.len() as f64, grad))
    }
}

#[derive(Clone, Debug, PartialEq)]
struct NodeFeatures {
    degree: f64,
    /// Distinct crops as sorted indices of their nonzero (all 1.0) entries,
    /// with their share of the root-fixing orderings.
    crops: Vec<(Vec<u32>, f64)>,
    multiplicity: f64,
}

/// Precomputed crops of every node of a graph. Nodes with equal degree and
/// equal crop multisets are merged, and the merged records are sorted, so the
/// features do not depend on node numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct LrpFeatures {
    nodes: Vec<NodeFeatures>,
    config_key: (usize, TensorLayout),
}

impl LrpFeatures {
    pub fn new(g: &AttributedGraph, config: &LrpConfig) -> Result<Self> {
        if config.depth != 1 {
            return Err(Error::DepthUnsupported(config.depth));
        }
        type Key = (usize, Vec<(Vec<u32>, u64)>);
        let mut merged: BTreeMap<Key, usize> = BTreeMap::new();
        for i in 0..g.n() {
            let e = extract_egonet(g, i, 1)?;
            let sum = lrp_feature_sum(&e, config.crop, config.layout)?;
            let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
            for c in &sum.crops {
                let idx = c
                    .data
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(x, _)| x as u32)
                    .collect();
                *counts.entry(idx).or_default() += 1;
            }
            *merged.entry((e.root_degree(), counts.into_iter().collect())).or_default() += 1;
        }
        let nodes = merged
            .into_iter()
            .map(|((degree, crops), mult)| {
                let total: u64 = crops.iter().map(|(_, c)| c).sum();
                NodeFeatures {
                    degree: degree as f64,
                    crops: crops
                        .into_iter()
                        .map(|(idx, c)| (idx, c as f64 / total as f64))
                        .collect(),
                    multiplicity: mult as f64,
                }
            })
            .collect();
        Ok(LrpFeatures {
            nodes,
            config_key: (config.crop, config.layout),
        })
    }

    pub fn batch(graphs: &[AttributedGraph], config: &LrpConfig) -> Result<Vec<Self>> {
        graphs.par_iter().map(|g| Self::new(g, config)).collect()
    }
}

pub fn lrp_forward(g: &AttributedGraph, model: &LrpModel) -> Result<f64> {
    model.validate()?;
    model.predict(&LrpFeatures::new(g, &model.config)?)
}

/// Mean squared error of `model` on `batch` and its gradient.
pub fn lrp_gradient(model: &LrpModel, batch: &[(&AttributedGraph, f64)]) -> Result<(f64, Vec<f64>)> {
    let feats: Vec<LrpFeatures> = batch
        .iter()
        .map(|(g, _)| LrpFeatures::new(g, &model.config))
        .collect::<Result<_>>()?;
    let pairs: Vec<(&LrpFeatures, f64)> = feats.iter().zip(batch).map(|(f, (_, y))| (f, *y)).collect();
    model.loss_and_gradient(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::erdos_renyi;
    use crate::graph::IsoMapping;
    use crate::rng::stream;

    fn small_config() -> LrpConfig {
        LrpConfig {
            hidden: 4,
            ..LrpConfig::default()
        }
    }

    #[test]
    fn zero_model_outputs_bias() {
        let mut m = LrpModel::zeros(small_config());
        let b1 = m.config.offsets().b1;
        m.params[b1] = 2.5;
        assert_eq!(lrp_forward(&AttributedGraph::complete(5), &m).unwrap(), 2.5);
    }

    #[test]
    fn zero_model_gradient_reaches_bias_only() {
        let m = LrpModel::zeros(small_config());
        let g = AttributedGraph::complete(4);
        let (loss, grad) = lrp_gradient(&m, &[(&g, 3.0)]).unwrap();
        assert_eq!(loss, 9.0);
        let b1 = m.config.offsets().b1;
        assert_eq!(grad[b1], -6.0);
        assert!(grad.iter().enumerate().all(|(q, v)| q == b1 || *v == 0.0));
    }

    #[test]
    fn relabeling_is_bitwise_invariant() {
        let mut rng = stream(4, "lrp-test", 0);
        let m = LrpModel::random(small_config(), &mut rng);
        let g = erdos_renyi(9, 0.4, &mut rng);
        let perm = IsoMapping::new(vec![8, 2, 5, 0, 7, 1, 3, 6, 4]).unwrap();
        assert_eq!(
            lrp_forward(&g, &m).unwrap().to_bits(),
            lrp_forward(&g.permuted(&perm), &m).unwrap().to_bits()
        );
    }

    #[test]
    fn duplicated_graph_doubles_the_numerator() {
        let mut rng = stream(5, "lrp-test", 0);
        let m = LrpModel::random(small_config(), &mut rng);
        let g1 = erdos_renyi(7, 0.5, &mut rng);
        let g2 = erdos_renyi(7, 0.5, &mut rng);
        let (l1, d1) = lrp_gradient(&m, &[(&g1, 1.0), (&g2, 2.0)]).unwrap();
        let (l2, d2) = lrp_gradient(&m, &[(&g1, 1.0), (&g1, 1.0), (&g2, 2.0)]).unwrap();
        let (l0, d0) = lrp_gradient(&m, &[(&g1, 1.0)]).unwrap();
        assert!(((3.0 * l2) - (2.0 * l1 + l0)).abs() < 1e-9);
        for q in 0..d1.len() {
            assert!((3.0 * d2[q] - (2.0 * d1[q] + d0[q])).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = stream(6, "lrp-test", 0);
        let m = LrpModel::random(small_config(), &mut rng);
        let graphs: Vec<_> = (0..3).map(|_| erdos_renyi(6, 0.5, &mut rng)).collect();
        let batch: Vec<_> = graphs.iter().zip([1.0, 4.0, 2.0]).collect::<Vec<_>>();
        let batch: Vec<(&AttributedGraph, f64)> = batch.into_iter().collect();
        let (_, grad) = lrp_gradient(&m, &batch).unwrap();
        let h = 1e-5;
        for q in 0..m.params.len() {
            let mut plus = m.clone();
            plus.params[q] += h;
            let mut minus = m.clone();
            minus.params[q] -= h;
            let fd = (lrp_gradient(&plus, &batch).unwrap().0 - lrp_gradient(&minus, &batch).unwrap().0)
                / (2.0 * h);
            let err = (fd - grad[q]).abs() / fd.abs().max(grad[q].abs()).max(1e-3);
            assert!(err < 1e-5, "param {q}: fd {fd} vs {}", grad[q]);
        }
    }

    #[test]
    fn wrong_parameter_count() {
        let mut m = LrpModel::zeros(small_config());
        m.params.pop();
        assert!(matches!(
            lrp_forward(&AttributedGraph::path(3), &m),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
