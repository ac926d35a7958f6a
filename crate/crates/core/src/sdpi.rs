//! Suspension Dynamic Performance Index.
//!
//! Each quantity of a candidate vehicle is divided by the same quantity of a
//! baseline vehicle driven over the same road, and the ratios are combined
//! with fixed weights that sum to one. Lower is better; the baseline scores 1.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The five scalar quantities entering the index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    /// RMS sprung-mass vertical acceleration, m/s²
    pub a_rms: f64,
    /// RMS pitch acceleration, rad/s²
    pub theta_ddot_rms: f64,
    /// RMS pitch angle, rad
    pub theta_rms: f64,
    /// Sum over axles of the peak suspension travel, m
    pub sws_max_sum: f64,
    /// Sum over axles of the RMS dynamic tire load, N
    pub dtl_rms_sum: f64,
}

impl MetricVector {
    pub const NAMES: [&'static str; 5] = ["a_rms", "theta_ddot_rms", "theta_rms", "sws_max_sum", "dtl_rms_sum"];

    pub fn to_array(self) -> [f64; 5] {
        [
            self.a_rms,
            self.theta_ddot_rms,
            self.theta_rms,
            self.sws_max_sum,
            self.dtl_rms_sum,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            a_rms: a[0],
            theta_ddot_rms: a[1],
            theta_rms: a[2],
            sws_max_sum: a[3],
            dtl_rms_sum: a[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpiWeights {
    /// Weight of the ride/pitch group.
    pub body_group: f64,
    pub a_rms: f64,
    pub theta_ddot_rms: f64,
    pub theta_rms: f64,
    pub sws: f64,
    pub dtl: f64,
}

impl SdpiWeights {
    pub const STANDARD: SdpiWeights = SdpiWeights {
        body_group: 0.33,
        a_rms: 0.6,
        theta_ddot_rms: 0.2,
        theta_rms: 0.2,
        sws: 0.01,
        dtl: 0.66,
    };
}

/// Index of `candidate` relative to `baseline` with the standard weights.
pub fn sdpi(candidate: &MetricVector, baseline: &MetricVector) -> Result<f64> {
    sdpi_with_weights(candidate, baseline, &SdpiWeights::STANDARD)
}

pub fn sdpi_with_weights(candidate: &MetricVector, baseline: &MetricVector, w: &SdpiWeights) -> Result<f64> {
    for (name, value) in MetricVector::NAMES.iter().zip(baseline.to_array()) {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Normalization(format!(
                "baseline {name} = {value} must be strictly positive"
            )));
        }
    }
    let body = w.a_rms * (candidate.a_rms / baseline.a_rms)
        + w.theta_ddot_rms * (candidate.theta_ddot_rms / baseline.theta_ddot_rms)
        + w.theta_rms * (candidate.theta_rms / baseline.theta_rms);
    Ok(w.body_group * body
        + w.sws * (candidate.sws_max_sum / baseline.sws_max_sum)
        + w.dtl * (candidate.dtl_rms_sum / baseline.dtl_rms_sum))
}
