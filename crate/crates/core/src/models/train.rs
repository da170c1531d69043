//! Minibatch Adam training of [`LrpModel`] with validation-based selection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::stream;

use super::egonet::TensorLayout;
use super::lrp::{LrpConfig, LrpFeatures, LrpModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            lr: 0.1,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    pub test_mse_over_variance: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the epoch with the lowest validation MSE.
    pub model: LrpModel,
    pub best: EpochMetrics,
    pub history: Vec<EpochMetrics>,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (q, p) in params.iter_mut().enumerate() {
            self.m[q] = self.beta1 * self.m[q] + (1.0 - self.beta1) * grad[q];
            self.v[q] = self.beta2 * self.v[q] + (1.0 - self.beta2) * grad[q] * grad[q];
            *p -= self.lr * (self.m[q] / c1) / ((self.v[q] / c2).sqrt() + self.eps);
        }
    }
}

fn mse(model: &LrpModel, feats: &[LrpFeatures], labels: &[f64]) -> Result<f64> {
    let pairs: Vec<(&LrpFeatures, f64)> = feats.iter().zip(labels.iter().copied()).collect();
    model.mse(&pairs)
}

/// Train on `train`, select on `val`, report on `test`. `variance` is the
/// label variance used to normalize the test MSE.
pub fn train_lrp(
    train: &LabeledDataset,
    val: &LabeledDataset,
    test: &LabeledDataset,
    variance: f64,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    for (name, ds) in [("train", train), ("val", val), ("test", test)] {
        if ds.is_empty() {
            return Err(Error::EmptySplit(name));
        }
    }
    if config.hidden == 0 || config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::InvalidArgument(
            "hidden, batch size and epochs must be at least 1".into(),
        ));
    }
    let lrp = LrpConfig {
        hidden: config.hidden,
        layout: TensorLayout::covering(train.graphs.iter().chain(&val.graphs).chain(&test.graphs)),
        ..LrpConfig::default()
    };
    let ftrain = LrpFeatures::batch(&train.graphs, &lrp)?;
    let fval = LrpFeatures::batch(&val.graphs, &lrp)?;
    let ftest = LrpFeatures::batch(&test.graphs, &lrp)?;
    let mut model = LrpModel::random(lrp, &mut stream(config.seed, "lrp-init", 0));
    let mut adam = Adam::new(model.params.len(), config.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(EpochMetrics, Vec<f64>)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut stream(config.seed, "lrp-batches", epoch as u64));
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&LrpFeatures, f64)> =
                chunk.iter().map(|&i| (&ftrain[i], train.labels[i])).collect();
            let (_, grad) = model.loss_and_gradient(&batch)?;
            adam.step(&mut model.params, &grad);
        }
        if !model.params.iter().all(|p| p.is_finite()) {
            return Err(Error::Internal(format!("training diverged in epoch {epoch}")));
        }
        let test_mse = mse(&model, &ftest, &test.labels)?;
        let metrics = EpochMetrics {
            epoch,
            train_mse: mse(&model, &ftrain, &train.labels)?,
            val_mse: mse(&model, &fval, &val.labels)?,
            test_mse,
            test_mse_over_variance: if variance > 0.0 { test_mse / variance } else { test_mse },
        };
        history.push(metrics);
        if best.as_ref().is_none_or(|(b, _)| metrics.val_mse < b.val_mse) {
            best = Some((metrics, model.params.clone()));
        }
    }
    let (best, params) = best.expect("at least one epoch");
    model.params = params;
    Ok(TrainOutcome {
        model,
        best,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_erdos_renyi, label_dataset, split, DatasetMeta, SplitSpec, Task};

    fn meta() -> DatasetMeta {
        DatasetMeta {
            generator: "er".into(),
            params: serde_json::Value::Null,
            seed: 0,
        }
    }

    #[test]
    fn constant_targets_are_learned() {
        let graphs = gen_erdos_renyi(40, 8, 0.3, 2).unwrap();
        let mut ds = label_dataset(graphs, Task::triangle(), meta()).unwrap();
        ds.labels.iter_mut().for_each(|y| *y = 3.0);
        let (tr, va, te) = split(&ds, &SplitSpec::paper(1)).unwrap();
        let cfg = TrainConfig {
            hidden: 4,
            epochs: 60,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = train_lrp(&tr, &va, &te, 1.0, &cfg).unwrap();
        assert!(out.best.test_mse < 1e-3, "{:?}", out.best);
        assert_eq!(out.history.len(), 60);
    }

    #[test]
    fn empty_split_is_an_error() {
        let graphs = gen_erdos_renyi(12, 6, 0.3, 2).unwrap();
        let ds = label_dataset(graphs, Task::triangle(), meta()).unwrap();
        let empty = ds.subset(&[]);
        assert!(matches!(
            train_lrp(&ds, &empty, &ds, 1.0, &TrainConfig::default()),
            Err(Error::EmptySplit("val"))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let graphs = gen_erdos_renyi(30, 7, 0.4, 3).unwrap();
        let ds = label_dataset(graphs, Task::triangle(), meta()).unwrap();
        let (tr, va, te) = split(&ds, &SplitSpec::paper(1)).unwrap();
        let cfg = TrainConfig {
            hidden: 4,
            epochs: 5,
            ..TrainConfig::default()
        };
        let a = train_lrp(&tr, &va, &te, ds.variance, &cfg).unwrap();
        let b = train_lrp(&tr, &va, &te, ds.variance, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }
}
