//! Parameter sensitivity of the six targets to the six inputs.
//!
//! The default is a one-at-a-time sweep: each input moves over a grid around
//! its baseline while the others stay put, and the raw score is the swept
//! range of a metric divided by its baseline value. Columns are then scaled
//! so their largest entry is 1. Sobol first-order indices are available as an
//! alternative.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{apply_inputs, make_row, vehicle_inputs, InputParam, INPUTS, TARGETS, TARGET_LABELS};
use crate::fmt::f64_17;
use crate::road::RoadProfile;
use crate::sdpi::MetricVector;
use crate::sim::SimConfig;
use crate::surrogate::MtlNetwork;
use crate::vehicle::VehicleParams;
use crate::{dataset, Error, Result};

/// Maps the six inputs to the six targets.
pub trait Evaluator: Sync {
    fn evaluate(&self, inputs: &[f64; INPUTS]) -> Result<[f64; TARGETS]>;
}

impl<F> Evaluator for F
where
    F: Fn(&[f64; INPUTS]) -> Result<[f64; TARGETS]> + Sync,
{
    fn evaluate(&self, inputs: &[f64; INPUTS]) -> Result<[f64; TARGETS]> {
        self(inputs)
    }
}

/// Full simulation; SDPI relative to the unmodified vehicle on the same road.
pub struct SimulatorEvaluator<'a> {
    pub baseline: VehicleParams,
    pub road: &'a RoadProfile,
    pub cfg: SimConfig,
    baseline_metrics: MetricVector,
}

impl<'a> SimulatorEvaluator<'a> {
    pub fn new(baseline: VehicleParams, road: &'a RoadProfile, cfg: SimConfig) -> Result<Self> {
        let baseline_metrics = dataset::evaluate_vehicle(&baseline, road, &cfg)?;
        Ok(Self {
            baseline,
            road,
            cfg,
            baseline_metrics,
        })
    }

    pub fn baseline_metrics(&self) -> &MetricVector {
        &self.baseline_metrics
    }
}

impl Evaluator for SimulatorEvaluator<'_> {
    fn evaluate(&self, inputs: &[f64; INPUTS]) -> Result<[f64; TARGETS]> {
        let v = apply_inputs(&self.baseline, inputs);
        let m = dataset::evaluate_vehicle(&v, self.road, &self.cfg)?;
        Ok(make_row(*inputs, &m, &self.baseline_metrics)?.targets)
    }
}

/// Trained surrogate.
pub struct SurrogateEvaluator<'a>(pub &'a MtlNetwork);

impl Evaluator for SurrogateEvaluator<'_> {
    fn evaluate(&self, inputs: &[f64; INPUTS]) -> Result<[f64; TARGETS]> {
        let p = self.0.predict(inputs);
        p.values
            .try_into()
            .map_err(|_| Error::Validation("surrogate must have six outputs".into()))
    }
}

/// Rows are inputs, columns are targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub raw: [[f64; TARGETS]; INPUTS],
    /// Each column divided by its maximum (all-zero columns stay zero).
    pub normalized: [[f64; TARGETS]; INPUTS],
}

impl SensitivityMatrix {
    pub fn from_raw(raw: [[f64; TARGETS]; INPUTS]) -> Self {
        let mut normalized = [[0.0; TARGETS]; INPUTS];
        for col in 0..TARGETS {
            let max = (0..INPUTS).map(|r| raw[r][col]).fold(0.0, f64::max);
            if max > 0.0 {
                for r in 0..INPUTS {
                    normalized[r][col] = raw[r][col] / max;
                }
            }
        }
        Self { raw, normalized }
    }

    /// Input with the largest score for `target`; `None` for an all-zero column.
    pub fn column_argmax(&self, target: usize) -> Option<InputParam> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..INPUTS {
            let v = self.normalized[r][target];
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((r, v));
            }
        }
        best.map(|(r, _)| InputParam::ALL[r])
    }

    /// Expected dominant inputs: m_s for body acceleration and I_y for pitch
    /// acceleration. Returns one message per mismatch.
    pub fn qualitative_discrepancies(&self) -> Vec<String> {
        let expected = [(0, InputParam::SprungMass), (1, InputParam::PitchInertia)];
        expected
            .iter()
            .filter_map(|&(col, want)| {
                let got = self.column_argmax(col);
                (got != Some(want)).then(|| {
                    format!(
                        "{} column is dominated by {} instead of {}",
                        TARGET_LABELS[col],
                        got.map_or("nothing", InputParam::label),
                        want.label()
                    )
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "parameter,{}", TARGET_LABELS.join(","))?;
        for (r, p) in InputParam::ALL.iter().enumerate() {
            let vals: Vec<String> = self.normalized[r].iter().map(|&v| f64_17(v)).collect();
            writeln!(w, "{},{}", p.label(), vals.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        lines
            .next()
            .ok_or_else(|| Error::Parse("empty sensitivity file".into()))??;
        let mut m = [[0.0; TARGETS]; INPUTS];
        for (row, line) in m.iter_mut().zip(lines) {
            let line = line?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != TARGETS + 1 {
                return Err(Error::Parse(format!("bad sensitivity row {line:?}")));
            }
            for (v, f) in row.iter_mut().zip(&fields[1..]) {
                *v = crate::fmt::parse_f64(f, "sensitivity")?;
            }
        }
        Ok(Self { raw: m, normalized: m })
    }
}

/// `points` evenly spaced values over `base·(1 ± range)`.
pub fn sweep_grid(base: f64, range: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![base];
    }
    let (lo, hi) = (base * (1.0 - range), base * (1.0 + range));
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

/// One-at-a-time sweep around `baseline`. Grid points run in parallel; the
/// reduction is in grid order.
pub fn compute_sensitivity(
    evaluator: &dyn Evaluator,
    baseline: &[f64; INPUTS],
    ranges: &[f64; INPUTS],
    grid_points: usize,
) -> Result<SensitivityMatrix> {
    if grid_points == 0 {
        return Err(Error::Validation("grid needs at least one point".into()));
    }
    let at_base = evaluator.evaluate(baseline).map_err(|e| Error::Sweep {
        parameter: "baseline".into(),
        value: f64::NAN,
        source: Box::new(e),
    })?;

    let jobs: Vec<(usize, f64)> = (0..INPUTS)
        .flat_map(|p| {
            sweep_grid(baseline[p], ranges[p], grid_points)
                .into_iter()
                .map(move |v| (p, v))
        })
        .collect();
    let results: Vec<Result<[f64; TARGETS]>> = jobs
        .par_iter()
        .map(|&(p, value)| {
            let mut x = *baseline;
            x[p] = value;
            evaluator.evaluate(&x).map_err(|e| Error::Sweep {
                parameter: InputParam::ALL[p].label().into(),
                value,
                source: Box::new(e),
            })
        })
        .collect();

    let mut lo = [[f64::INFINITY; TARGETS]; INPUTS];
    let mut hi = [[f64::NEG_INFINITY; TARGETS]; INPUTS];
    for (&(p, _), r) in jobs.iter().zip(results) {
        let y = r?;
        for t in 0..TARGETS {
            lo[p][t] = lo[p][t].min(y[t]);
            hi[p][t] = hi[p][t].max(y[t]);
        }
    }
    let mut raw = [[0.0; TARGETS]; INPUTS];
    for p in 0..INPUTS {
        for t in 0..TARGETS {
            let spread = hi[p][t] - lo[p][t];
            raw[p][t] = if spread == 0.0 {
                0.0
            } else if at_base[t] != 0.0 {
                spread / at_base[t].abs()
            } else {
                return Err(Error::Normalization(format!(
                    "{} is zero at the baseline",
                    TARGET_LABELS[t]
                )));
            };
        }
    }
    Ok(SensitivityMatrix::from_raw(raw))
}

/// Saltelli-style first-order Sobol indices with inputs uniform over
/// `base·(1 ± range)`; `samples` base rows, `samples·(INPUTS + 2)` evaluations.
pub fn sobol_first_order(
    evaluator: &dyn Evaluator,
    baseline: &[f64; INPUTS],
    ranges: &[f64; INPUTS],
    samples: usize,
    seed: u64,
) -> Result<SensitivityMatrix> {
    if samples < 2 {
        return Err(Error::Validation("Sobol estimation needs at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> [f64; INPUTS] {
        std::array::from_fn(|j| baseline[j] * (1.0 + ranges[j] * (2.0 * rng.random::<f64>() - 1.0)))
    };
    let a: Vec<[f64; INPUTS]> = (0..samples).map(|_| draw()).collect();
    let b: Vec<[f64; INPUTS]> = (0..samples).map(|_| draw()).collect();

    let eval_all = |xs: &[[f64; INPUTS]]| -> Result<Vec<[f64; TARGETS]>> {
        xs.par_iter().map(|x| evaluator.evaluate(x)).collect()
    };
    let fa = eval_all(&a)?;
    let fb = eval_all(&b)?;

    let mut raw = [[0.0; TARGETS]; INPUTS];
    for t in 0..TARGETS {
        let all: Vec<f64> = fa.iter().chain(&fb).map(|y| y[t]).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let var = all.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / all.len() as f64;
        if var == 0.0 {
            continue;
        }
        for i in 0..INPUTS {
            let ab: Vec<[f64; INPUTS]> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut x = *ra;
                    x[i] = rb[i];
                    x
                })
                .collect();
            let fab = eval_all(&ab)?;
            let s: f64 = (0..samples)
                .map(|k| (fb[k][t] - mean) * (fab[k][t] - fa[k][t]))
                .sum::<f64>()
                / samples as f64;
            raw[i][t] = (s / var).max(0.0);
        }
    }
    Ok(SensitivityMatrix::from_raw(raw))
}

/// OAT sweep with the full simulator around `vehicle`.
pub fn exact_sensitivity(
    vehicle: &VehicleParams,
    road: &RoadProfile,
    cfg: &SimConfig,
    ranges: &[f64; INPUTS],
    grid_points: usize,
) -> Result<SensitivityMatrix> {
    let eval = SimulatorEvaluator::new(vehicle.clone(), road, cfg.clone())?;
    compute_sensitivity(&eval, &vehicle_inputs(vehicle), ranges, grid_points)
}
