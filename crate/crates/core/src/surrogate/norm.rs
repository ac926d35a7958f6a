use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Normalized targets live in this band, inside the sigmoid's range.
pub const TARGET_LOW: f64 = 0.1;
pub const TARGET_HIGH: f64 = 0.9;

/// Per-column standardization, plus the observed range for extrapolation
/// warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl InputScaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let cols = x.ncols();
        let mut s = Self {
            mean: vec![0.0; cols],
            std: vec![1.0; cols],
            min: vec![f64::INFINITY; cols],
            max: vec![f64::NEG_INFINITY; cols],
        };
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            s.mean[j] = mean;
            s.std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
            for &v in col {
                s.min[j] = s.min[j].min(v);
                s.max[j] = s.max[j].max(v);
            }
        }
        s
    }

    /// Identity scaling for `cols` inputs.
    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            std: vec![1.0; cols],
            min: vec![f64::NEG_INFINITY; cols],
            max: vec![f64::INFINITY; cols],
        }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        out
    }

    pub fn in_range(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(j, &v)| v >= self.min[j] && v <= self.max[j])
    }
}

/// Per-task min-max map onto `[TARGET_LOW, TARGET_HIGH]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl TargetScaler {
    pub fn fit(y: ArrayView2<f64>) -> Self {
        let cols = y.ncols();
        let mut s = Self {
            min: vec![f64::INFINITY; cols],
            max: vec![f64::NEG_INFINITY; cols],
        };
        for row in y.rows() {
            for (j, &v) in row.iter().enumerate() {
                s.min[j] = s.min[j].min(v);
                s.max[j] = s.max[j].max(v);
            }
        }
        s
    }

    fn span(&self, task: usize) -> f64 {
        self.max[task] - self.min[task]
    }

    pub fn normalize(&self, task: usize, y: f64) -> f64 {
        let span = self.span(task);
        if span > 0.0 {
            TARGET_LOW + (TARGET_HIGH - TARGET_LOW) * (y - self.min[task]) / span
        } else {
            0.5 * (TARGET_LOW + TARGET_HIGH)
        }
    }

    pub fn denormalize(&self, task: usize, y: f64) -> f64 {
        let span = self.span(task);
        if span > 0.0 {
            self.min[task] + (y - TARGET_LOW) / (TARGET_HIGH - TARGET_LOW) * span
        } else {
            self.min[task]
        }
    }

    pub fn normalize_matrix(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let mut out = y.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.normalize(j, *v);
            }
        }
        out
    }

    pub fn denormalize_matrix(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let mut out = y.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.denormalize(j, *v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn standardizes_columns() {
        let x = array![[1.0, 10.0], [3.0, 10.0]];
        let s = InputScaler::fit(x.view());
        assert_eq!(s.mean, vec![2.0, 10.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        let z = s.transform(x.view());
        assert_eq!(z, array![[-1.0, 0.0], [1.0, 0.0]]);
        assert!(s.in_range(&[2.0, 10.0]));
        assert!(!s.in_range(&[3.5, 10.0]));
    }

    #[test]
    fn target_band_edges() {
        let y = array![[2.0], [6.0]];
        let s = TargetScaler::fit(y.view());
        assert_eq!(s.normalize(0, 2.0), 0.1);
        assert!((s.normalize(0, 6.0) - 0.9).abs() < 1e-15);
        assert_eq!(s.denormalize(0, 0.5), 4.0);
    }

    #[test]
    fn constant_target_maps_to_midpoint() {
        let s = TargetScaler {
            min: vec![3.0],
            max: vec![3.0],
        };
        assert_eq!(s.normalize(0, 3.0), 0.5);
        assert_eq!(s.denormalize(0, 0.5), 3.0);
    }

    proptest! {
        #[test]
        fn normalization_round_trip(lo in -1e3..1e3f64, span in 1e-3..1e4f64, u in 0.0..=1.0f64) {
            let s = TargetScaler { min: vec![lo], max: vec![lo + span] };
            let y = lo + u * span;
            let back = s.denormalize(0, s.normalize(0, y));
            prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(span).max(1.0));
        }
    }
}
