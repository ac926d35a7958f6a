use ndarray::{Array2, ArrayView2};

use super::network::MtlNetwork;
use crate::{Error, Result};

/// Error statistics on de-normalized (physical) values.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Mean absolute percentage error per task, as a fraction.
    pub mape: Vec<f64>,
    pub mape_avg: f64,
    /// `None` where the true values of a task are constant.
    pub r2: Vec<Option<f64>>,
    pub rows: usize,
    /// Rows left out of MAPE because some true target is zero.
    pub excluded_rows: usize,
}

impl Evaluation {
    pub fn r2(&self, task: usize) -> Result<f64> {
        self.r2[task].ok_or(Error::UndefinedR2 { task })
    }

    pub fn min_r2(&self) -> Result<f64> {
        (0..self.r2.len())
            .map(|t| self.r2(t))
            .try_fold(f64::INFINITY, |m, r| r.map(|r| m.min(r)))
    }
}

/// `1 − SS_res/SS_tot`; `None` when `truth` is constant.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Option<f64> {
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

pub fn evaluate_predictions(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<Evaluation> {
    if truth.nrows() == 0 {
        return Err(Error::Validation("cannot evaluate on an empty split".into()));
    }
    if pred.dim() != truth.dim() {
        return Err(Error::Validation("prediction and truth shapes differ".into()));
    }
    let tasks = truth.ncols();
    let usable: Vec<usize> = (0..truth.nrows())
        .filter(|&i| truth.row(i).iter().all(|&t| t != 0.0))
        .collect();
    let excluded_rows = truth.nrows() - usable.len();

    let mut mape = vec![f64::NAN; tasks];
    let mut r2 = vec![None; tasks];
    for t in 0..tasks {
        if !usable.is_empty() {
            let sum: f64 = usable
                .iter()
                .map(|&i| ((pred[(i, t)] - truth[(i, t)]) / truth[(i, t)]).abs())
                .sum();
            mape[t] = sum / usable.len() as f64;
        }
        let p = pred.column(t).to_vec();
        let y = truth.column(t).to_vec();
        r2[t] = r_squared(&p, &y);
    }
    let mape_avg = mape.iter().sum::<f64>() / tasks as f64;
    Ok(Evaluation {
        mape,
        mape_avg,
        r2,
        rows: truth.nrows(),
        excluded_rows,
    })
}

/// Predicts `inputs` (raw units) and scores against `targets`.
pub fn evaluate(net: &MtlNetwork, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<Evaluation> {
    let pred: Array2<f64> = net.predict_batch(inputs);
    evaluate_predictions(pred.view(), targets)
}
