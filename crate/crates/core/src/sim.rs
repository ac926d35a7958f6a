//! Time-domain simulation of the half-car over a road profile.
//!
//! The second-order system is integrated in first-order form with fixed-step
//! classical RK4. Axle `i` sees the road at `v·t − (l₁ − l_i)`, so rear axles
//! replay the front axle's input with a delay; positions behind the start of
//! the profile read as flat.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fmt::f64_17;
use crate::road::RoadProfile;
use crate::sdpi::MetricVector;
use crate::vehicle::{assemble_matrices, VehicleParams};
use crate::{Error, Result};

/// Any state component beyond this magnitude counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// m/s
    pub speed: f64,
    /// s
    pub duration: f64,
    /// s
    pub time_step: f64,
    /// s, excluded from metrics
    pub warmup: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            speed: 10.0,
            duration: 20.0,
            time_step: 1e-3,
            warmup: 2.0,
            gravity: 9.81,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step > 0.0) {
            return Err(Error::Config("time_step must be positive".into()));
        }
        if !(self.speed > 0.0) {
            return Err(Error::Config("speed must be positive".into()));
        }
        if !(self.warmup >= 0.0 && self.duration > self.warmup) {
            return Err(Error::Config("need duration > warmup >= 0".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.time_step).round() as usize
    }

    /// Index of the last warmup sample; metrics use samples after it.
    pub fn warmup_steps(&self) -> usize {
        (self.warmup / self.time_step).round() as usize
    }

    /// Road length covered by the front axle.
    pub fn road_length_needed(&self) -> f64 {
        self.speed * self.time_step * self.steps() as f64
    }
}

/// All response channels on a shared time grid. Per-axle channels are
/// indexed `[axle][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResponse {
    pub time: Vec<f64>,
    pub sprung_displacement: Vec<f64>,
    pub pitch: Vec<f64>,
    pub unsprung_displacement: Vec<Vec<f64>>,
    pub sprung_acceleration: Vec<f64>,
    pub pitch_acceleration: Vec<f64>,
    pub sprung_velocity: Vec<f64>,
    pub pitch_rate: Vec<f64>,
    pub unsprung_velocity: Vec<Vec<f64>>,
    /// `d_i = z_s − l_i·θ − z_us(i)`
    pub deflection: Vec<Vec<f64>>,
    /// `k_t·(z_r − z_us)`, positive when the tire is compressed further
    /// than at static equilibrium.
    pub tire_load: Vec<Vec<f64>>,
    pub road_input: Vec<Vec<f64>>,
}

impl SimResponse {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn axle_count(&self) -> usize {
        self.deflection.len()
    }

    /// Generalized displacement vector `[z_s, θ, z_us…]` at sample `k`.
    pub fn displacement(&self, k: usize) -> Vec<f64> {
        let mut z = vec![self.sprung_displacement[k], self.pitch[k]];
        z.extend(self.unsprung_displacement.iter().map(|c| c[k]));
        z
    }

    pub fn velocity(&self, k: usize) -> Vec<f64> {
        let mut v = vec![self.sprung_velocity[k], self.pitch_rate[k]];
        v.extend(self.unsprung_velocity.iter().map(|c| c[k]));
        v
    }

    /// Channel names with units, in CSV column order.
    pub fn channel_names(&self) -> Vec<String> {
        let n = self.axle_count();
        let mut names: Vec<String> = [
            "time[s]",
            "z_s[m]",
            "theta[rad]",
            "z_s_ddot[m/s^2]",
            "theta_ddot[rad/s^2]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for (prefix, unit) in [("z_us", "m"), ("sws", "m"), ("dtl", "N"), ("z_r", "m")] {
            names.extend((1..=n).map(|i| format!("{prefix}{i}[{unit}]")));
        }
        names
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.channel_names().join(","))?;
        let mut row = Vec::new();
        for k in 0..self.len() {
            row.clear();
            row.extend([
                self.time[k],
                self.sprung_displacement[k],
                self.pitch[k],
                self.sprung_acceleration[k],
                self.pitch_acceleration[k],
            ]);
            for group in [
                &self.unsprung_displacement,
                &self.deflection,
                &self.tire_load,
                &self.road_input,
            ] {
                row.extend(group.iter().map(|c| c[k]));
            }
            let line: Vec<String> = row.iter().map(|&x| f64_17(x)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Precomputed `M⁻¹C`, `M⁻¹K` and tire input gains for the integrator.
struct Dynamics {
    dof: usize,
    minv_c: Vec<f64>,
    minv_k: Vec<f64>,
    tire_gain: Vec<f64>,
}

impl Dynamics {
    fn new(params: &VehicleParams) -> Result<Self> {
        let sys = assemble_matrices(params)?;
        let dof = params.dof();
        let mut minv_c = vec![0.0; dof * dof];
        let mut minv_k = vec![0.0; dof * dof];
        for r in 0..dof {
            let inv = 1.0 / sys.mass[(r, r)];
            for c in 0..dof {
                minv_c[r * dof + c] = sys.damping[(r, c)] * inv;
                minv_k[r * dof + c] = sys.stiffness[(r, c)] * inv;
            }
        }
        let tire_gain = (0..params.axle_count)
            .map(|i| params.tire_stiffnesses[i] / params.unsprung_masses[i])
            .collect();
        Ok(Self {
            dof,
            minv_c,
            minv_k,
            tire_gain,
        })
    }

    /// `z̈ = M⁻¹(F − Cż − Kz)`
    fn acceleration(&self, z: &[f64], v: &[f64], road: &[f64], out: &mut [f64]) {
        let d = self.dof;
        for r in 0..d {
            let row_c = &self.minv_c[r * d..(r + 1) * d];
            let row_k = &self.minv_k[r * d..(r + 1) * d];
            let mut acc = 0.0;
            for c in 0..d {
                acc -= row_c[c] * v[c] + row_k[c] * z[c];
            }
            if r >= 2 {
                acc += self.tire_gain[r - 2] * road[r - 2];
            }
            out[r] = acc;
        }
    }
}

/// Road elevation under each axle, addressed in (fractional) step units so
/// that whole-step axle delays reproduce the front input bit for bit.
struct RoadInput<'a> {
    profile: &'a RoadProfile,
    metres_per_step: f64,
    lag_steps: Vec<f64>,
}

impl<'a> RoadInput<'a> {
    fn new(profile: &'a RoadProfile, params: &VehicleParams, cfg: &SimConfig) -> Self {
        let metres_per_step = cfg.speed * cfg.time_step;
        let lag_steps = params
            .axle_offsets
            .iter()
            .map(|l| {
                let lag = (params.axle_offsets[0] - l) / metres_per_step;
                if (lag - lag.round()).abs() < 1e-9 {
                    lag.round()
                } else {
                    lag
                }
            })
            .collect();
        Self {
            profile,
            metres_per_step,
            lag_steps,
        }
    }

    fn heights(&self, step: f64, out: &mut [f64]) -> Result<()> {
        for (h, lag) in out.iter_mut().zip(&self.lag_steps) {
            let x = self.metres_per_step * (step - lag);
            *h = if x < 0.0 { 0.0 } else { self.profile.height_at(x)? };
        }
        Ok(())
    }
}

/// Runs the traversal from rest at static equilibrium.
pub fn simulate(params: &VehicleParams, profile: &RoadProfile, cfg: &SimConfig) -> Result<SimResponse> {
    cfg.validate()?;
    let dyn_ = Dynamics::new(params)?;
    let needed = cfg.road_length_needed();
    if profile.length < needed {
        return Err(Error::Config(format!(
            "road profile of {} m is shorter than the {} m traversal",
            profile.length, needed
        )));
    }

    let n = params.axle_count;
    let d = dyn_.dof;
    let steps = cfg.steps();
    let dt = cfg.time_step;
    let road = RoadInput::new(profile, params, cfg);

    let samples = steps + 1;
    let per_axle = || vec![Vec::with_capacity(samples); n];
    let mut resp = SimResponse {
        time: Vec::with_capacity(samples),
        sprung_displacement: Vec::with_capacity(samples),
        pitch: Vec::with_capacity(samples),
        unsprung_displacement: per_axle(),
        sprung_acceleration: Vec::with_capacity(samples),
        pitch_acceleration: Vec::with_capacity(samples),
        sprung_velocity: Vec::with_capacity(samples),
        pitch_rate: Vec::with_capacity(samples),
        unsprung_velocity: per_axle(),
        deflection: per_axle(),
        tire_load: per_axle(),
        road_input: per_axle(),
    };

    let mut z = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut acc = vec![0.0; d];
    let mut zr = vec![0.0; n];
    let mut zr_mid = vec![0.0; n];
    let mut zr_end = vec![0.0; n];

    let (mut k1z, mut k1v) = (vec![0.0; d], vec![0.0; d]);
    let (mut k2z, mut k2v) = (vec![0.0; d], vec![0.0; d]);
    let (mut k3z, mut k3v) = (vec![0.0; d], vec![0.0; d]);
    let (mut k4z, mut k4v) = (vec![0.0; d], vec![0.0; d]);
    let (mut zt, mut vt) = (vec![0.0; d], vec![0.0; d]);

    road.heights(0.0, &mut zr)?;
    for k in 0..=steps {
        let t = k as f64 * dt;
        dyn_.acceleration(&z, &v, &zr, &mut acc);
        record(&mut resp, params, t, &z, &v, &acc, &zr);
        if k == steps {
            break;
        }

        road.heights(k as f64 + 0.5, &mut zr_mid)?;
        road.heights((k + 1) as f64, &mut zr_end)?;

        k1z.copy_from_slice(&v);
        k1v.copy_from_slice(&acc);

        for j in 0..d {
            zt[j] = z[j] + 0.5 * dt * k1z[j];
            vt[j] = v[j] + 0.5 * dt * k1v[j];
        }
        k2z.copy_from_slice(&vt);
        dyn_.acceleration(&zt, &vt, &zr_mid, &mut k2v);

        for j in 0..d {
            zt[j] = z[j] + 0.5 * dt * k2z[j];
            vt[j] = v[j] + 0.5 * dt * k2v[j];
        }
        k3z.copy_from_slice(&vt);
        dyn_.acceleration(&zt, &vt, &zr_mid, &mut k3v);

        for j in 0..d {
            zt[j] = z[j] + dt * k3z[j];
            vt[j] = v[j] + dt * k3v[j];
        }
        k4z.copy_from_slice(&vt);
        dyn_.acceleration(&zt, &vt, &zr_end, &mut k4v);

        for j in 0..d {
            z[j] += dt / 6.0 * (k1z[j] + 2.0 * k2z[j] + 2.0 * k3z[j] + k4z[j]);
            v[j] += dt / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
        }
        if z.iter().chain(&v).any(|x| !(x.abs() <= DIVERGENCE_LIMIT)) {
            return Err(Error::Divergence {
                step: k + 1,
                time: (k + 1) as f64 * dt,
            });
        }
        zr.copy_from_slice(&zr_end);
    }
    Ok(resp)
}

fn record(resp: &mut SimResponse, params: &VehicleParams, t: f64, z: &[f64], v: &[f64], acc: &[f64], zr: &[f64]) {
    resp.time.push(t);
    resp.sprung_displacement.push(z[0]);
    resp.pitch.push(z[1]);
    resp.sprung_velocity.push(v[0]);
    resp.pitch_rate.push(v[1]);
    resp.sprung_acceleration.push(acc[0]);
    resp.pitch_acceleration.push(acc[1]);
    for i in 0..params.axle_count {
        let zus = z[2 + i];
        resp.unsprung_displacement[i].push(zus);
        resp.unsprung_velocity[i].push(v[2 + i]);
        resp.deflection[i].push(z[0] - params.axle_offsets[i] * z[1] - zus);
        resp.tire_load[i].push(params.tire_stiffnesses[i] * (zr[i] - zus));
        resp.road_input[i].push(zr[i]);
    }
}

/// Scalar performance quantities over the post-warmup window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMetrics {
    pub a_rms: f64,
    pub theta_ddot_rms: f64,
    pub theta_rms: f64,
    pub sws_max: Vec<f64>,
    pub dtl_rms: Vec<f64>,
}

impl ResponseMetrics {
    pub fn sws_max_sum(&self) -> f64 {
        self.sws_max.iter().sum()
    }

    pub fn dtl_rms_sum(&self) -> f64 {
        self.dtl_rms.iter().sum()
    }

    pub fn vector(&self) -> MetricVector {
        MetricVector {
            a_rms: self.a_rms,
            theta_ddot_rms: self.theta_ddot_rms,
            theta_rms: self.theta_rms,
            sws_max_sum: self.sws_max_sum(),
            dtl_rms_sum: self.dtl_rms_sum(),
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn response_metrics(resp: &SimResponse, cfg: &SimConfig) -> Result<ResponseMetrics> {
    let start = cfg.warmup_steps() + 1;
    if start >= resp.len() {
        return Err(Error::Config(format!("no samples after the {} s warmup", cfg.warmup)));
    }
    fn window(c: &[f64], start: usize) -> &[f64] {
        &c[start..]
    }
    Ok(ResponseMetrics {
        a_rms: rms(window(&resp.sprung_acceleration, start)),
        theta_ddot_rms: rms(window(&resp.pitch_acceleration, start)),
        theta_rms: rms(window(&resp.pitch, start)),
        sws_max: resp.deflection.iter().map(|c| max_abs(window(c, start))).collect(),
        dtl_rms: resp.tire_load.iter().map(|c| rms(window(c, start))).collect(),
    })
}
