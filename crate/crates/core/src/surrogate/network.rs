use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::norm::{InputScaler, TargetScaler};
use super::sigmoid;
use crate::{Error, Result};

/// Dense sigmoid layer, `out = σ(in · W + b)` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weights: Array2::from_shape_fn((inputs, outputs), |_| rng.random_range(-bound..bound)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        z.mapv_inplace(sigmoid);
        z
    }
}

/// Output connectivity: task `t` reads last-hidden units
/// `[t·stride, t·stride + window)`; adjacent windows share
/// `window − stride` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskMask {
    pub tasks: usize,
    pub window: usize,
    pub stride: usize,
}

impl TaskMask {
    pub fn validate(&self, last_width: usize) -> Result<()> {
        if self.tasks == 0 || self.stride == 0 {
            return Err(Error::Validation(
                "mask needs at least one task and a positive stride".into(),
            ));
        }
        if self.window <= self.stride {
            return Err(Error::Validation(format!(
                "window {} must exceed stride {} so adjacent tasks share units",
                self.window, self.stride
            )));
        }
        if self.span() > last_width {
            return Err(Error::Validation(format!(
                "{} tasks with window {} and stride {} need {} hidden units, last layer has {last_width}",
                self.tasks,
                self.window,
                self.stride,
                self.span()
            )));
        }
        Ok(())
    }

    /// Hidden units covered by all windows.
    pub fn span(&self) -> usize {
        (self.tasks - 1) * self.stride + self.window
    }

    pub fn overlap(&self) -> usize {
        self.window.saturating_sub(self.stride)
    }

    pub fn window_of(&self, task: usize) -> Range<usize> {
        let start = task * self.stride;
        start..start + self.window
    }

    /// 0/1 matrix shaped like the output weights.
    pub fn matrix(&self, last_width: usize) -> Array2<f64> {
        let mut m = Array2::zeros((last_width, self.tasks));
        for t in 0..self.tasks {
            for u in self.window_of(t) {
                m[(u, t)] = 1.0;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Pretrained stack with the windowed multitask output.
    Mtl,
    /// Fully connected output, no pretraining.
    Dnn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mtl => "mtl",
            ModelKind::Dnn => "dnn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtl" => Ok(ModelKind::Mtl),
            "dnn" => Ok(ModelKind::Dnn),
            other => Err(Error::Validation(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Feedforward surrogate. `layers` ends with the output layer; when `mask`
/// is set, output weights outside each task's window are zero and stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MtlNetwork {
    pub kind: ModelKind,
    pub layers: Vec<Layer>,
    pub mask: Option<TaskMask>,
    pub input_scaler: InputScaler,
    pub target_scaler: TargetScaler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Physical units, one per task.
    pub values: Vec<f64>,
    /// Some input lies outside the range seen in training.
    pub extrapolated: bool,
}

impl MtlNetwork {
    pub fn new(
        kind: ModelKind,
        layers: Vec<Layer>,
        mask: Option<TaskMask>,
        input_scaler: InputScaler,
        target_scaler: TargetScaler,
    ) -> Result<Self> {
        let net = Self {
            kind,
            layers,
            mask,
            input_scaler,
            target_scaler,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Validation("network has no layers".into()));
        }
        for w in self.layers.windows(2) {
            if w[0].outputs() != w[1].inputs() {
                return Err(Error::Validation("consecutive layer widths disagree".into()));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::Validation("bias length disagrees with layer width".into()));
            }
        }
        if self.input_scaler.mean.len() != self.inputs() || self.target_scaler.min.len() != self.outputs() {
            return Err(Error::Validation("scaler sizes disagree with the network".into()));
        }
        if let Some(mask) = &self.mask {
            let out = self.output_layer();
            if mask.tasks != out.outputs() {
                return Err(Error::Validation("mask task count disagrees with outputs".into()));
            }
            mask.validate(out.inputs())?;
            let m = mask.matrix(out.inputs());
            if out
                .weights
                .iter()
                .zip(m.iter())
                .any(|(&w, &keep)| keep == 0.0 && w != 0.0)
            {
                return Err(Error::Validation("output weight set outside its task window".into()));
            }
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.output_layer().outputs()
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("validated network has layers")
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::outputs)
            .collect()
    }

    pub fn mask_matrix(&self) -> Option<Array2<f64>> {
        self.mask.map(|m| m.matrix(self.output_layer().inputs()))
    }

    /// Activations of every layer for standardized inputs; element 0 is the
    /// input itself, the last is the normalized output.
    pub fn activations(&self, x_std: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x_std.to_owned());
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap().view());
            acts.push(next);
        }
        acts
    }

    /// Normalized outputs for standardized inputs.
    pub fn forward_normalized(&self, x_std: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x_std.to_owned();
        for layer in &self.layers {
            h = layer.forward(h.view());
        }
        h
    }

    /// Physical-unit predictions for raw inputs, one row per sample.
    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let out = self.forward_normalized(self.input_scaler.transform(x).view());
        self.target_scaler.denormalize_matrix(out.view())
    }

    pub fn predict(&self, inputs: &[f64]) -> Prediction {
        let x = Array2::from_shape_vec((1, inputs.len()), inputs.to_vec()).expect("single row has consistent shape");
        let y = self.predict_batch(x.view());
        Prediction {
            values: y.row(0).to_vec(),
            extrapolated: !self.input_scaler.in_range(inputs),
        }
    }

    /// `(1/B)·Σ_rows Σ_tasks (ŷ − y)²` on normalized targets.
    pub fn loss(&self, x_std: ArrayView2<f64>, y_norm: ArrayView2<f64>) -> f64 {
        let out = self.forward_normalized(x_std);
        (&out - &y_norm).mapv(|d| d * d).sum() / x_std.nrows() as f64
    }

    /// Loss and its gradient for every layer.
    pub fn loss_and_gradient(&self, x_std: ArrayView2<f64>, y_norm: ArrayView2<f64>) -> (f64, Vec<Layer>) {
        self.scaled_loss_and_gradient(x_std, y_norm, 1.0 / x_std.nrows() as f64)
    }

    /// `scale·Σ (ŷ − y)²` and its gradient; shards of one batch use the
    /// batch's `1/B` so their sums add up to the batch gradient.
    pub(crate) fn scaled_loss_and_gradient(
        &self,
        x_std: ArrayView2<f64>,
        y_norm: ArrayView2<f64>,
        scale: f64,
    ) -> (f64, Vec<Layer>) {
        let acts = self.activations(x_std);
        let out = acts.last().unwrap();
        let diff = out - &y_norm;
        let loss = scale * diff.mapv(|d| d * d).sum();

        let mut delta = &diff * (2.0 * scale) * &out.mapv(|a| a * (1.0 - a));
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[l];
            let mut gw = input.t().dot(&delta);
            if l + 1 == self.layers.len() {
                if let Some(m) = self.mask_matrix() {
                    gw *= &m;
                }
            }
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let back = delta.dot(&layer.weights.t());
                delta = back * &input.mapv(|a| a * (1.0 - a));
            }
            grads.push(Layer { weights: gw, bias: gb });
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}
