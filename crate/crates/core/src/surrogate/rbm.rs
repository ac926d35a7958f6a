//! Restricted Boltzmann machines and greedy layer-wise DBN pretraining.
//!
//! Energy (Bernoulli visible): `E(v,h) = −vᵀWh − bᵀv − cᵀh`. The Gaussian
//! variant assumes unit-variance visible units, so `p(v|h) = N(Wh + b, 1)`,
//! which suits standardized continuous inputs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::network::Layer;
use super::train::TrainConfig;
use super::{sigmoid, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibleKind {
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmLayer {
    /// visible × hidden
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub visible: VisibleKind,
}

struct Velocity {
    weights: Array2<f64>,
    visible_bias: Array1<f64>,
    hidden_bias: Array1<f64>,
}

impl RbmLayer {
    /// Small random weights N(0, 0.01²), zero biases.
    pub fn new(visible: usize, hidden: usize, kind: VisibleKind, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, 0.01).expect("valid std");
        Self {
            weights: Array2::from_shape_fn((visible, hidden), |_| normal.sample(rng)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
            visible: kind,
        }
    }

    pub fn hidden_probs(&self, v: ArrayView2<f64>) -> Array2<f64> {
        let mut z = v.dot(&self.weights);
        z += &self.hidden_bias;
        z.mapv_inplace(sigmoid);
        z
    }

    /// Mean of `p(v|h)`.
    pub fn visible_mean(&self, h: ArrayView2<f64>) -> Array2<f64> {
        let mut z = h.dot(&self.weights.t());
        z += &self.visible_bias;
        if self.visible == VisibleKind::Bernoulli {
            z.mapv_inplace(sigmoid);
        }
        z
    }

    /// Mean-field reconstruction error: cross-entropy per visible unit for
    /// Bernoulli units, squared error per unit for Gaussian ones.
    pub fn reconstruction_error(&self, data: ArrayView2<f64>) -> f64 {
        let recon = self.visible_mean(self.hidden_probs(data).view());
        let n = (data.nrows() * data.ncols()) as f64;
        match self.visible {
            VisibleKind::Gaussian => (&recon - &data).mapv(|d| d * d).sum() / n,
            VisibleKind::Bernoulli => {
                let eps = 1e-12;
                data.iter()
                    .zip(recon.iter())
                    .map(|(&v, &p)| {
                        let p = p.clamp(eps, 1.0 - eps);
                        -(v * p.ln() + (1.0 - v) * (1.0 - p).ln())
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }

    /// One CD-1 update on a mini-batch.
    fn cd1_update(&mut self, v0: ArrayView2<f64>, lr: f64, momentum: f64, vel: &mut Velocity, rng: &mut ChaCha8Rng) {
        let b = v0.nrows() as f64;
        let h0 = self.hidden_probs(v0);
        let h0_sample = h0.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        let v1 = self.visible_mean(h0_sample.view());
        let h1 = self.hidden_probs(v1.view());

        let pos = v0.t().dot(&h0);
        let neg = v1.t().dot(&h1);
        let gw = (pos - neg) / b;
        let gv = (&v0 - &v1).sum_axis(Axis(0)) / b;
        let gh = (&h0 - &h1).sum_axis(Axis(0)) / b;

        vel.weights = &vel.weights * momentum + gw * lr;
        vel.visible_bias = &vel.visible_bias * momentum + gv * lr;
        vel.hidden_bias = &vel.hidden_bias * momentum + gh * lr;
        self.weights += &vel.weights;
        self.visible_bias += &vel.visible_bias;
        self.hidden_bias += &vel.hidden_bias;
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.visible_bias.iter())
            .chain(self.hidden_bias.iter())
            .all(|v| v.is_finite())
    }

    /// CD-1 with momentum over shuffled mini-batches. `layer_index` only
    /// labels errors.
    #[allow(clippy::too_many_arguments)]
    pub fn train(
        &mut self,
        data: ArrayView2<f64>,
        epochs: usize,
        batch_size: usize,
        lr: f64,
        momentum: f64,
        rng: &mut ChaCha8Rng,
        layer_index: usize,
    ) -> Result<()> {
        let mut vel = Velocity {
            weights: Array2::zeros(self.weights.raw_dim()),
            visible_bias: Array1::zeros(self.visible_bias.len()),
            hidden_bias: Array1::zeros(self.hidden_bias.len()),
        };
        let mut order: Vec<usize> = (0..data.nrows()).collect();
        for epoch in 0..epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch_size.max(1)) {
                let batch = data.select(Axis(0), chunk);
                self.cd1_update(batch.view(), lr, momentum, &mut vel, rng);
            }
            if !self.is_finite() {
                return Err(Error::Training {
                    stage: format!("RBM pretraining of layer {layer_index}"),
                    epoch: epoch + 1,
                    batch: None,
                });
            }
        }
        Ok(())
    }

    /// The feedforward layer this RBM initializes.
    pub fn to_layer(&self) -> Layer {
        Layer {
            weights: self.weights.clone(),
            bias: self.hidden_bias.clone(),
        }
    }
}

/// Greedy layer-wise pretraining: the first RBM sees the standardized inputs
/// through Gaussian visible units, every later one is Bernoulli and trains on
/// the hidden probabilities of the layer below.
pub fn pretrain_dbn(inputs: ArrayView2<f64>, widths: &[usize], cfg: &TrainConfig) -> Result<Vec<RbmLayer>> {
    let mut init_rng = stream(cfg.seed, 1);
    let mut train_rng = stream(cfg.seed, 2);
    let mut layers = Vec::with_capacity(widths.len());
    let mut data = inputs.to_owned();
    for (j, &width) in widths.iter().enumerate() {
        let kind = if j == 0 {
            VisibleKind::Gaussian
        } else {
            VisibleKind::Bernoulli
        };
        let mut rbm = RbmLayer::new(data.ncols(), width, kind, &mut init_rng);
        rbm.train(
            data.view(),
            cfg.pretrain_epochs,
            cfg.batch_size,
            cfg.pretrain_lr,
            cfg.momentum,
            &mut train_rng,
            j,
        )?;
        data = rbm.hidden_probs(data.view());
        layers.push(rbm);
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            pretrain_epochs: epochs,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_seeded_init() {
        let x = Array2::from_shape_fn((20, 3), |(i, j)| ((i * 7 + j) % 5) as f64 - 2.0);
        let layers = pretrain_dbn(x.view(), &[4, 3], &cfg(0)).unwrap();
        let mut rng = stream(TrainConfig::default().seed, 1);
        let first = RbmLayer::new(3, 4, VisibleKind::Gaussian, &mut rng);
        assert_eq!(layers[0], first);
        assert_eq!(layers[1].visible, VisibleKind::Bernoulli);
        assert_eq!(layers[1].weights.dim(), (4, 3));
    }

    #[test]
    fn cd1_lowers_reconstruction_error_on_repeated_pattern() {
        let pattern = [1.0, 0.0, 1.0, 1.0];
        let data = Array2::from_shape_fn((16, 4), |(_, j)| pattern[j]);
        let mut rng = stream(11, 0);
        let mut rbm = RbmLayer::new(4, 3, VisibleKind::Bernoulli, &mut rng);
        let before = rbm.reconstruction_error(data.view());
        rbm.train(data.view(), 200, 4, 0.1, 0.5, &mut rng, 0).unwrap();
        let after = rbm.reconstruction_error(data.view());
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn gaussian_hidden_probs_in_open_unit_interval() {
        let data = Array2::from_shape_fn((50, 2), |(i, j)| ((i as f64) * 0.37 + j as f64).sin() * 1.5);
        let layers = pretrain_dbn(data.view(), &[5], &cfg(5)).unwrap();
        let h = layers[0].hidden_probs(data.view());
        assert!(h.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn exploding_weights_reported() {
        let data = Array2::from_elem((8, 2), 1e308);
        let mut rng = stream(0, 0);
        let mut rbm = RbmLayer::new(2, 2, VisibleKind::Gaussian, &mut rng);
        let err = rbm.train(data.view(), 3, 4, 10.0, 0.0, &mut rng, 2).unwrap_err();
        assert!(matches!(err, Error::Training { epoch: 1, .. }));
        assert!(err.to_string().contains("layer 2"));
    }
}
