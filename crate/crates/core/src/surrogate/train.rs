use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use super::network::{Layer, ModelKind, MtlNetwork, TaskMask};
use super::norm::{InputScaler, TargetScaler};
use super::rbm::pretrain_dbn;
use super::stream;
use crate::dataset::{Dataset, INPUTS, TARGETS};
use crate::fmt::f64_17;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    /// Last-hidden units per task.
    pub window: usize,
    /// Offset between consecutive task windows.
    pub stride: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 76],
            window: 16,
            stride: 12,
        }
    }
}

impl Architecture {
    pub fn mask(&self, tasks: usize) -> TaskMask {
        TaskMask {
            tasks,
            window: self.window,
            stride: self.stride,
        }
    }

    pub fn validate(&self, tasks: usize) -> Result<()> {
        let last = *self
            .hidden
            .last()
            .ok_or_else(|| Error::Validation("need at least one hidden layer".into()))?;
        if self.hidden.contains(&0) {
            return Err(Error::Validation("hidden widths must be positive".into()));
        }
        self.mask(tasks).validate(last)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// CD-1 epochs per RBM layer.
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub finetune_lr: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Train, validation, test fractions.
    pub split: [f64; 3],
    /// Each mini-batch is cut into this many shards whose gradients are
    /// computed in parallel and summed in shard order. Results depend on the
    /// shard count but not on the thread count.
    pub shards: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            pretrain_epochs: 10,
            pretrain_lr: 0.05,
            finetune_lr: 0.01,
            momentum: 0.9,
            seed: 7,
            split: [0.8, 0.1, 0.1],
            shards: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::Validation("shards must be at least 1".into()));
        }
        if self.split.iter().any(|f| !(*f >= 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "split fractions {:?} must be non-negative and sum to 1",
                self.split
            )));
        }
        for (name, v) in [
            ("pretrain_lr", self.pretrain_lr),
            ("finetune_lr", self.finetune_lr),
            ("momentum", self.momentum),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Row indices of the three splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Seeded shuffle, then cut by the fractions.
    pub fn new(rows: usize, fractions: [f64; 3], seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..rows).collect();
        idx.shuffle(&mut stream(seed, 0));
        let n_train = (fractions[0] * rows as f64).round() as usize;
        let n_val = ((fractions[1] * rows as f64).round() as usize).min(rows - n_train.min(rows));
        let n_train = n_train.min(rows);
        let test = idx.split_off(n_train + n_val);
        let validation = idx.split_off(n_train);
        Self {
            train: idx,
            validation,
            test,
        }
    }
}

/// Inputs and targets as matrices, one row per dataset row.
pub fn dataset_matrices(ds: &Dataset, rows: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let x = Array2::from_shape_fn((rows.len(), INPUTS), |(i, j)| ds.rows[rows[i]].inputs[j]);
    let y = Array2::from_shape_fn((rows.len(), TARGETS), |(i, j)| ds.rows[rows[i]].targets[j]);
    (x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mape_avg: f64,
    pub mape: Vec<f64>,
    pub r2: Vec<Option<f64>>,
}

pub fn trace_header(tasks: usize) -> String {
    let mut cols = vec!["epoch".to_string(), "mape_avg".to_string()];
    cols.extend((1..=tasks).map(|t| format!("mape_task{t}")));
    cols.extend((1..=tasks).map(|t| format!("r2_task{t}")));
    cols.join(",")
}

pub fn write_trace_csv<W: Write>(trace: &[EpochRecord], tasks: usize, mut w: W) -> Result<()> {
    writeln!(w, "{}", trace_header(tasks))?;
    for rec in trace {
        let mut fields = vec![rec.epoch.to_string(), f64_17(rec.mape_avg)];
        fields.extend(rec.mape.iter().map(|&m| f64_17(m)));
        fields.extend(rec.r2.iter().map(|r| r.map_or("nan".to_string(), f64_17)));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Mini-batch SGD with momentum on the multitask MSE. Each epoch ends with
/// an evaluation on the validation rows.
pub fn fine_tune(
    mut net: MtlNetwork,
    train_x: ArrayView2<f64>,
    train_y: ArrayView2<f64>,
    val_x: ArrayView2<f64>,
    val_y: ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<(MtlNetwork, Vec<EpochRecord>)> {
    cfg.validate()?;
    if cfg.epochs > 0 && (train_x.nrows() == 0 || val_x.nrows() == 0) {
        return Err(Error::Validation(
            "training and validation splits must be non-empty".into(),
        ));
    }
    let x_std = net.input_scaler.transform(train_x);
    let y_norm = net.target_scaler.normalize_matrix(train_y);
    let mut velocity: Vec<Layer> = net
        .layers
        .iter()
        .map(|l| Layer::zeros(l.inputs(), l.outputs()))
        .collect();
    let mut rng = stream(cfg.seed, 3);
    let mut order: Vec<usize> = (0..x_std.nrows()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x_std.select(Axis(0), chunk);
            let yb = y_norm.select(Axis(0), chunk);
            let (loss, grads) = batch_gradient(&net, xb.view(), yb.view(), cfg.shards);
            if !loss.is_finite() {
                return Err(Error::Training {
                    stage: "fine-tuning".into(),
                    epoch,
                    batch: Some(b),
                });
            }
            for ((layer, vel), g) in net.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                vel.weights *= cfg.momentum;
                vel.weights.scaled_add(-cfg.finetune_lr, &g.weights);
                vel.bias *= cfg.momentum;
                vel.bias.scaled_add(-cfg.finetune_lr, &g.bias);
                layer.weights += &vel.weights;
                layer.bias += &vel.bias;
            }
        }
        if !net.is_finite() {
            return Err(Error::Training {
                stage: "fine-tuning".into(),
                epoch,
                batch: None,
            });
        }
        let e = evaluate(&net, val_x, val_y)?;
        trace.push(EpochRecord {
            epoch,
            mape_avg: e.mape_avg,
            mape: e.mape,
            r2: e.r2,
        });
    }
    Ok((net, trace))
}

fn batch_gradient(net: &MtlNetwork, x: ArrayView2<f64>, y: ArrayView2<f64>, shards: usize) -> (f64, Vec<Layer>) {
    let rows = x.nrows();
    let scale = 1.0 / rows as f64;
    if shards <= 1 || rows < 2 {
        return net.scaled_loss_and_gradient(x, y, scale);
    }
    let per = rows.div_ceil(shards);
    let parts: Vec<(f64, Vec<Layer>)> = (0..rows)
        .step_by(per)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let end = (start + per).min(rows);
            net.scaled_loss_and_gradient(
                x.slice(ndarray::s![start..end, ..]),
                y.slice(ndarray::s![start..end, ..]),
                scale,
            )
        })
        .collect();
    let mut iter = parts.into_iter();
    let (mut loss, mut grads) = iter.next().expect("at least one shard");
    for (l, g) in iter {
        loss += l;
        for (acc, part) in grads.iter_mut().zip(g) {
            acc.weights += &part.weights;
            acc.bias += &part.bias;
        }
    }
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub net: MtlNetwork,
    pub trace: Vec<EpochRecord>,
    pub split: Split,
}

struct Prepared {
    split: Split,
    train_x: Array2<f64>,
    train_y: Array2<f64>,
    val_x: Array2<f64>,
    val_y: Array2<f64>,
    input_scaler: InputScaler,
    target_scaler: TargetScaler,
}

fn prepare(ds: &Dataset, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Validation("dataset is empty".into()));
    }
    let split = Split::new(ds.len(), cfg.split, cfg.seed);
    if split.train.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    let (train_x, train_y) = dataset_matrices(ds, &split.train);
    let (val_x, val_y) = dataset_matrices(ds, &split.validation);
    let input_scaler = InputScaler::fit(train_x.view());
    let target_scaler = TargetScaler::fit(train_y.view());
    Ok(Prepared {
        split,
        train_x,
        train_y,
        val_x,
        val_y,
        input_scaler,
        target_scaler,
    })
}

/// Pretrained stack plus windowed output layer, before fine-tuning.
pub fn build_mtl(
    train_x: ArrayView2<f64>,
    input_scaler: InputScaler,
    target_scaler: TargetScaler,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<MtlNetwork> {
    arch.validate(TARGETS)?;
    let x_std = input_scaler.transform(train_x);
    let rbms = pretrain_dbn(x_std.view(), &arch.hidden, cfg)?;
    let mut layers: Vec<Layer> = rbms.iter().map(|r| r.to_layer()).collect();
    let last = *arch.hidden.last().unwrap();
    let mask = arch.mask(TARGETS);
    let mut rng = stream(cfg.seed, 4);
    // Each task's window is initialized like a small window → 1 layer.
    let mut head = Layer::zeros(last, TARGETS);
    for t in 0..TARGETS {
        let task = Layer::glorot(mask.window, 1, &mut rng);
        for (k, u) in mask.window_of(t).enumerate() {
            head.weights[(u, t)] = task.weights[(k, 0)];
        }
    }
    layers.push(head);
    MtlNetwork::new(ModelKind::Mtl, layers, Some(mask), input_scaler, target_scaler)
}

/// Fully connected network of the same widths, Glorot-initialized.
pub fn build_dnn(
    input_scaler: InputScaler,
    target_scaler: TargetScaler,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<MtlNetwork> {
    arch.validate(TARGETS)?;
    let mut rng = stream(cfg.seed, 5);
    let mut widths = vec![INPUTS];
    widths.extend(&arch.hidden);
    widths.push(TARGETS);
    let layers = widths.windows(2).map(|w| Layer::glorot(w[0], w[1], &mut rng)).collect();
    MtlNetwork::new(ModelKind::Dnn, layers, None, input_scaler, target_scaler)
}

pub fn train_mtl(ds: &Dataset, arch: &Architecture, cfg: &TrainConfig) -> Result<TrainedModel> {
    let p = prepare(ds, cfg)?;
    let net = build_mtl(p.train_x.view(), p.input_scaler, p.target_scaler, arch, cfg)?;
    let (net, trace) = fine_tune(
        net,
        p.train_x.view(),
        p.train_y.view(),
        p.val_x.view(),
        p.val_y.view(),
        cfg,
    )?;
    Ok(TrainedModel {
        net,
        trace,
        split: p.split,
    })
}

pub fn train_baseline_dnn(ds: &Dataset, arch: &Architecture, cfg: &TrainConfig) -> Result<TrainedModel> {
    let p = prepare(ds, cfg)?;
    let net = build_dnn(p.input_scaler, p.target_scaler, arch, cfg)?;
    let (net, trace) = fine_tune(
        net,
        p.train_x.view(),
        p.train_y.view(),
        p.val_x.view(),
        p.val_y.view(),
        cfg,
    )?;
    Ok(TrainedModel {
        net,
        trace,
        split: p.split,
    })
}

pub fn train_model(kind: ModelKind, ds: &Dataset, arch: &Architecture, cfg: &TrainConfig) -> Result<TrainedModel> {
    match kind {
        ModelKind::Mtl => train_mtl(ds, arch, cfg),
        ModelKind::Dnn => train_baseline_dnn(ds, arch, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetRow;
    use rand::Rng;

    fn synthetic(rows: usize) -> Dataset {
        let mut rng = stream(99, 0);
        let rows = (0..rows)
            .map(|_| {
                let x: [f64; INPUTS] = std::array::from_fn(|_| 1.0 + rng.random::<f64>());
                let t: [f64; TARGETS] =
                    std::array::from_fn(|k| 1.0 + x[k] * x[(k + 1) % INPUTS] + 0.5 * x[(k + 2) % INPUTS]);
                DatasetRow { inputs: x, targets: t }
            })
            .collect();
        Dataset { rows }
    }

    fn small_arch() -> Architecture {
        Architecture {
            hidden: vec![10, 20],
            window: 5,
            stride: 3,
        }
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            pretrain_epochs: 2,
            batch_size: 8,
            finetune_lr: 0.1,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn split_partitions_rows() {
        let s = Split::new(103, [0.8, 0.1, 0.1], 5);
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        assert_eq!((s.train.len(), s.validation.len()), (82, 10));
        assert_eq!(s, Split::new(103, [0.8, 0.1, 0.1], 5));
    }

    #[test]
    fn zero_epochs_returns_initialized_net_and_empty_trace() {
        let ds = synthetic(60);
        let m = train_mtl(&ds, &small_arch(), &cfg(0)).unwrap();
        assert!(m.trace.is_empty());
        let p = prepare(&ds, &cfg(0)).unwrap();
        let init = build_mtl(
            p.train_x.view(),
            p.input_scaler,
            p.target_scaler,
            &small_arch(),
            &cfg(0),
        )
        .unwrap();
        assert_eq!(m.net, init);
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let ds = synthetic(60);
        let c = TrainConfig {
            finetune_lr: 0.0,
            ..cfg(3)
        };
        let m = train_baseline_dnn(&ds, &small_arch(), &c).unwrap();
        let p = prepare(&ds, &c).unwrap();
        let init = build_dnn(p.input_scaler, p.target_scaler, &small_arch(), &c).unwrap();
        assert_eq!(m.net.layers, init.layers);
        assert_eq!(m.trace.len(), 3);
    }

    #[test]
    fn training_keeps_mask_and_lowers_error() {
        let ds = synthetic(400);
        let m = train_mtl(&ds, &small_arch(), &cfg(30)).unwrap();
        m.net.validate().unwrap();
        let first = m.trace[0].mape_avg;
        let last = m.trace.last().unwrap().mape_avg;
        assert!(last < first, "{last} !< {first}");
    }

    #[test]
    fn same_seed_same_model_different_seed_differs() {
        let ds = synthetic(80);
        let a = train_mtl(&ds, &small_arch(), &cfg(2)).unwrap();
        let b = train_mtl(&ds, &small_arch(), &cfg(2)).unwrap();
        assert_eq!(a.net, b.net);
        let c = train_mtl(&ds, &small_arch(), &TrainConfig { seed: 8, ..cfg(2) }).unwrap();
        assert_ne!(a.net, c.net);
    }

    #[test]
    fn sharded_gradient_matches_whole_batch() {
        let ds = synthetic(40);
        let p = prepare(&ds, &cfg(0)).unwrap();
        let net = build_dnn(p.input_scaler.clone(), p.target_scaler.clone(), &small_arch(), &cfg(0)).unwrap();
        let x = net.input_scaler.transform(p.train_x.view());
        let y = net.target_scaler.normalize_matrix(p.train_y.view());
        let (l1, g1) = batch_gradient(&net, x.view(), y.view(), 1);
        let (l4, g4) = batch_gradient(&net, x.view(), y.view(), 4);
        assert!((l1 - l4).abs() < 1e-12 * l1.abs().max(1.0));
        for (a, b) in g1.iter().zip(&g4) {
            for (u, v) in a.weights.iter().zip(b.weights.iter()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let ds = synthetic(30);
        let p = prepare(&ds, &cfg(0)).unwrap();
        let net = build_mtl(
            p.train_x.view(),
            p.input_scaler,
            p.target_scaler,
            &small_arch(),
            &cfg(0),
        )
        .unwrap();
        let x = net.input_scaler.transform(p.train_x.view());
        let y = net.target_scaler.normalize_matrix(p.train_y.view());
        let (_, grads) = net.loss_and_gradient(x.view(), y.view());
        let mask = net.mask_matrix().unwrap();
        let h = 1e-6;
        for (l, grad) in grads.iter().enumerate() {
            for idx in [(0, 0), (1, 2), (4, 1)] {
                if idx.0 >= net.layers[l].inputs() || idx.1 >= net.layers[l].outputs() {
                    continue;
                }
                let last = l + 1 == net.layers.len();
                if last && mask[idx] == 0.0 {
                    assert_eq!(grad.weights[idx], 0.0);
                    continue;
                }
                let mut plus = net.clone();
                plus.layers[l].weights[idx] += h;
                let mut minus = net.clone();
                minus.layers[l].weights[idx] -= h;
                let fd = (plus.loss(x.view(), y.view()) - minus.loss(x.view(), y.view())) / (2.0 * h);
                let g = grad.weights[idx];
                assert!(
                    (g - fd).abs() <= 1e-6 * fd.abs().max(1e-3),
                    "layer {l} {idx:?}: {g} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn trace_csv_has_header_and_nan_for_undefined_r2() {
        let rec = EpochRecord {
            epoch: 1,
            mape_avg: 0.5,
            mape: vec![0.5; 2],
            r2: vec![Some(0.9), None],
        };
        let mut buf = Vec::new();
        write_trace_csv(&[rec], 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,mape_avg,mape_task1,mape_task2,r2_task1,r2_task2"
        );
        assert!(lines.next().unwrap().ends_with(",nan"));
    }
}
