//! Graph models: a reference message passing network and the LRP-1-k model.

pub mod egonet;
pub mod lrp;
pub mod mpnn;
pub mod train;

pub use egonet::{extract_egonet, lrp_feature_sum, CropSum, Egonet, EgonetTensor, TensorLayout};
pub use lrp::{lrp_forward, lrp_gradient, LrpConfig, LrpFeatures, LrpModel};
pub use mpnn::{mpnn_forward, MpnnParams};
pub use train::{train_lrp, EpochMetrics, TrainConfig, TrainOutcome};

use rand::Rng;

/// Uniform draw from `(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub(crate) fn init_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize) -> f64 {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    rng.gen_range(-bound..bound)
}

/// Sum in a fixed pairwise order, so the result depends only on the sequence.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}
