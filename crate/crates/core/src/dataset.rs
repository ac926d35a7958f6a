//! Parameter sampling and batch simulation into an input → metric dataset.

use std::io::{BufRead, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fmt::{f64_17, parse_f64};
use crate::road::RoadProfile;
use crate::sdpi::{sdpi, MetricVector};
use crate::sim::{response_metrics, simulate, SimConfig};
use crate::vehicle::VehicleParams;
use crate::{Error, Result};

pub const INPUTS: usize = 6;
pub const TARGETS: usize = 6;

/// The six varied vehicle parameters, in dataset column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputParam {
    SprungMass,
    PitchInertia,
    SpringCoeff,
    DampingCoeff,
    TireStiffness,
    Wheelbase,
}

impl InputParam {
    pub const ALL: [InputParam; INPUTS] = [
        InputParam::SprungMass,
        InputParam::PitchInertia,
        InputParam::SpringCoeff,
        InputParam::DampingCoeff,
        InputParam::TireStiffness,
        InputParam::Wheelbase,
    ];

    pub fn label(self) -> &'static str {
        ["m_s", "I_y", "k_s", "c_s", "k_t", "wb"][self as usize]
    }
}

/// The six learned targets, in dataset column order.
pub const TARGET_LABELS: [&str; TARGETS] = [
    "a_rms",
    "theta_ddot_rms",
    "theta_rms",
    "sws_max_sum",
    "dtl_rms_sum",
    "sdpi",
];

/// Representative input values of a vehicle. Per-axle coefficients report
/// their mean.
pub fn vehicle_inputs(v: &VehicleParams) -> [f64; INPUTS] {
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    [
        v.sprung_mass,
        v.pitch_inertia,
        mean(&v.spring_coeffs),
        mean(&v.damping_coeffs),
        mean(&v.tire_stiffnesses),
        v.wheelbase(),
    ]
}

/// Applies absolute input values to a copy of `base`. Axle coefficients are
/// scaled together and offsets are stretched about the CG; the axle count
/// and unsprung masses stay at baseline.
pub fn apply_inputs(base: &VehicleParams, inputs: &[f64; INPUTS]) -> VehicleParams {
    let current = vehicle_inputs(base);
    let mut v = base.with_wheelbase(inputs[5]);
    v.sprung_mass = inputs[0];
    v.pitch_inertia = inputs[1];
    let rescale = |xs: &mut Vec<f64>, target: f64, mean: f64| {
        if xs.iter().all(|&x| x == mean) {
            xs.iter_mut().for_each(|x| *x = target);
        } else {
            let s = target / mean;
            xs.iter_mut().for_each(|x| *x *= s);
        }
    };
    rescale(&mut v.spring_coeffs, inputs[2], current[2]);
    rescale(&mut v.damping_coeffs, inputs[3], current[3]);
    rescale(&mut v.tire_stiffnesses, inputs[4], current[4]);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    UniformRandom,
    LatinHypercube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSpec {
    /// Relative half-range per input (0.3 = ±30 %), in [`InputParam::ALL`] order.
    pub ranges: [f64; INPUTS],
    pub sample_count: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            ranges: [0.3; INPUTS],
            sample_count: 20000,
            scheme: SamplingScheme::LatinHypercube,
            seed: 2024,
        }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::Validation("sample_count must be at least 1".into()));
        }
        for (p, r) in InputParam::ALL.iter().zip(self.ranges) {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Validation(format!(
                    "range for {} is {r}; must lie in [0, 1) to keep the parameter positive",
                    p.label()
                )));
            }
        }
        Ok(())
    }
}

/// Unit-cube samples, one row per vehicle.
fn unit_samples(spec: &SamplingSpec) -> Vec<[f64; INPUTS]> {
    let n = spec.sample_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.scheme {
        SamplingScheme::UniformRandom => (0..n).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect(),
        SamplingScheme::LatinHypercube => {
            let mut out = vec![[0.0; INPUTS]; n];
            for dim in 0..INPUTS {
                let mut strata: Vec<usize> = (0..n).collect();
                strata.shuffle(&mut rng);
                for (row, s) in out.iter_mut().zip(strata) {
                    row[dim] = (s as f64 + rng.random::<f64>()) / n as f64;
                }
            }
            out
        }
    }
}

pub fn sample_inputs(spec: &SamplingSpec, baseline: &VehicleParams) -> Result<Vec<[f64; INPUTS]>> {
    spec.validate()?;
    baseline.validate()?;
    let base = vehicle_inputs(baseline);
    Ok(unit_samples(spec)
        .into_iter()
        .map(|u| std::array::from_fn(|j| base[j] * (1.0 + spec.ranges[j] * (2.0 * u[j] - 1.0))))
        .collect())
}

pub fn sample_parameters(spec: &SamplingSpec, baseline: &VehicleParams) -> Result<Vec<VehicleParams>> {
    let samples = sample_inputs(spec, baseline)?;
    samples
        .iter()
        .map(|x| {
            let v = apply_inputs(baseline, x);
            v.validate()?;
            Ok(v)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRow {
    pub inputs: [f64; INPUTS],
    /// a_rms, θ̈_rms, θ_rms, ΣSWS_max, ΣDTL_rms, SDPI
    pub targets: [f64; TARGETS],
}

impl DatasetRow {
    pub fn metrics(&self) -> MetricVector {
        MetricVector::from_array([
            self.targets[0],
            self.targets[1],
            self.targets[2],
            self.targets[3],
            self.targets[4],
        ])
    }
}

/// Metrics of one vehicle on the shared road and config.
pub fn evaluate_vehicle(v: &VehicleParams, road: &RoadProfile, cfg: &SimConfig) -> Result<MetricVector> {
    let resp = simulate(v, road, cfg)?;
    Ok(response_metrics(&resp, cfg)?.vector())
}

pub fn make_row(inputs: [f64; INPUTS], metrics: &MetricVector, baseline: &MetricVector) -> Result<DatasetRow> {
    let s = sdpi(metrics, baseline)?;
    let m = metrics.to_array();
    Ok(DatasetRow {
        inputs,
        targets: [m[0], m[1], m[2], m[3], m[4], s],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub requested: usize,
    pub rows: usize,
    pub diverged: Vec<usize>,
    pub wall_seconds: f64,
    pub workers: usize,
    pub baseline: MetricVector,
}

impl DatasetReport {
    /// More than 1 % of samples diverged.
    pub fn divergence_warning(&self) -> bool {
        self.diverged.len() * 100 > self.requested
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("samples requested: {}\n", self.requested));
        s.push_str(&format!("rows written: {}\n", self.rows));
        s.push_str(&format!("diverged: {}\n", self.diverged.len()));
        if !self.diverged.is_empty() {
            let idx: Vec<String> = self.diverged.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("diverged sample indices: {}\n", idx.join(" ")));
        }
        if self.divergence_warning() {
            s.push_str("WARNING: more than 1% of samples diverged\n");
        }
        s.push_str(&format!("workers: {}\n", self.workers));
        s.push_str(&format!("wall time: {:.3} s\n", self.wall_seconds));
        let b = self.baseline.to_array();
        for (name, v) in MetricVector::NAMES.iter().zip(b) {
            s.push_str(&format!("baseline {name}: {}\n", f64_17(v)));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

/// Simulates every sampled vehicle on `road` and scores it against the
/// unmodified `baseline`. Samples run on up to `workers` threads; row order
/// follows sample index regardless of scheduling.
pub fn generate_dataset(
    spec: &SamplingSpec,
    baseline: &VehicleParams,
    road: &RoadProfile,
    cfg: &SimConfig,
    workers: usize,
) -> Result<(Dataset, DatasetReport)> {
    let started = Instant::now();
    let samples = sample_inputs(spec, baseline)?;
    let base_metrics = evaluate_vehicle(baseline, road, cfg)?;
    // Rejects a degenerate (e.g. flat-road) baseline before the batch runs.
    sdpi(&base_metrics, &base_metrics)?;

    let run = |x: &[f64; INPUTS]| -> Result<Option<DatasetRow>> {
        let v = apply_inputs(baseline, x);
        v.validate()?;
        match evaluate_vehicle(&v, road, cfg) {
            Ok(m) => make_row(*x, &m, &base_metrics).map(Some),
            Err(Error::Divergence { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Option<DatasetRow>>> = pool.install(|| samples.par_iter().map(run).collect());

    let mut rows = Vec::with_capacity(samples.len());
    let mut diverged = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(row) => rows.push(row),
            None => diverged.push(i),
        }
    }
    let report = DatasetReport {
        requested: samples.len(),
        rows: rows.len(),
        diverged,
        wall_seconds: started.elapsed().as_secs_f64(),
        workers,
        baseline: base_metrics,
    };
    Ok((Dataset { rows }, report))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header() -> String {
        let mut cols: Vec<&str> = InputParam::ALL.iter().map(|p| p.label()).collect();
        cols.extend(TARGET_LABELS);
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::header())?;
        for row in &self.rows {
            let fields: Vec<String> = row.inputs.iter().chain(&row.targets).map(|&x| f64_17(x)).collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        if header.trim() != Self::header() {
            return Err(Error::Parse(format!(
                "dataset header {header:?} does not match {:?}",
                Self::header()
            )));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != INPUTS + TARGETS {
                return Err(Error::Parse(format!(
                    "dataset row {} has {} fields",
                    lineno + 2,
                    fields.len()
                )));
            }
            let mut vals = [0.0; INPUTS + TARGETS];
            for (v, f) in vals.iter_mut().zip(&fields) {
                *v = parse_f64(f, "dataset value")?;
            }
            rows.push(DatasetRow {
                inputs: std::array::from_fn(|j| vals[j]),
                targets: std::array::from_fn(|j| vals[INPUTS + j]),
            });
        }
        Ok(Self { rows })
    }

    /// Checks that every row's SDPI matches the index recomputed from its
    /// other targets, to `rel_tol`.
    pub fn check_sdpi_consistency(&self, baseline: &MetricVector, rel_tol: f64) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let s = sdpi(&row.metrics(), baseline)?;
            if (s - row.targets[5]).abs() > rel_tol * s.abs() {
                return Err(Error::Validation(format!(
                    "row {i}: stored SDPI {} differs from recomputed {s}",
                    row.targets[5]
                )));
            }
            if row.targets.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(Error::Validation(format!("row {i}: invalid target")));
            }
        }
        Ok(())
    }
}
