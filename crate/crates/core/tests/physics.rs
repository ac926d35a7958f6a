//! Independent physical oracles for the simulator.

use axlesim::vehicle::assemble_matrices;
use axlesim::{simulate, RoadProfile, SimConfig, SimResponse, VehicleParams};
use nalgebra::DVector;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn step_road(height: f64, length: f64) -> RoadProfile {
    RoadProfile::constant(height, length, 0.05)
}

/// Peak frequency of `x` (mean removed), refined by zero padding.
fn dominant_frequency(x: &[f64], dt: f64) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let n = (x.len() * 8).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (k, _) = buf[1..n / 2]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    (k + 1) as f64 / (n as f64 * dt)
}

#[test]
fn undamped_bounce_frequency_matches_series_springs() {
    // Single centred axle, no damping, stiff tyre and light wheel: the body
    // bounces at sqrt(k_eff / m_s) with k_eff the springs in series.
    let (m_s, k_s, k_t) = (1000.0, 40000.0, 4.0e7);
    let v = VehicleParams::uniform(1, m_s, 500.0, 1.0, k_s, 0.0, k_t, 0.0);
    let cfg = SimConfig {
        speed: 10.0,
        duration: 60.0,
        time_step: 1e-4,
        warmup: 0.0,
        ..SimConfig::default()
    };
    let resp = simulate(&v, &step_road(0.01, 620.0), &cfg).unwrap();
    let k_eff = k_s * k_t / (k_s + k_t);
    let expected = (k_eff / (m_s + 1.0)).sqrt() / (2.0 * std::f64::consts::PI);
    let f = dominant_frequency(&resp.sprung_displacement, cfg.time_step);
    assert!((f - expected).abs() / expected < 0.01, "{f} vs {expected}");
}

fn energy(
    resp: &SimResponse,
    m: &nalgebra::DMatrix<f64>,
    k: &nalgebra::DMatrix<f64>,
    eq: &DVector<f64>,
    i: usize,
) -> f64 {
    let z = DVector::from_vec(resp.displacement(i)) - eq;
    let v = DVector::from_vec(resp.velocity(i));
    0.5 * v.dot(&(m * &v)) + 0.5 * z.dot(&(k * &z))
}

#[test]
fn damped_energy_never_increases_after_step() {
    let v = VehicleParams::reference();
    let mats = assemble_matrices(&v).unwrap();
    let h = 0.02;
    let cfg = SimConfig {
        duration: 6.0,
        warmup: 0.0,
        ..SimConfig::default()
    };
    let resp = simulate(&v, &step_road(h, 80.0), &cfg).unwrap();
    // Rigid lift by h is the new equilibrium.
    let mut eq = DVector::from_element(v.dof(), h);
    eq[1] = 0.0;
    // Every axle is on the raised section once the rear one has crossed.
    let start = ((v.wheelbase() / cfg.speed) / cfg.time_step).ceil() as usize + 1;
    let e: Vec<f64> = (start..resp.len())
        .map(|i| energy(&resp, &mats.mass, &mats.stiffness, &eq, i))
        .collect();
    assert!(e[0] > 0.0);
    for w in e.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} > {}", w[1], w[0]);
    }
    // The slowest (pitch) mode decays at about 0.1 /s.
    assert!(e.last().unwrap() < &(e[0] * 0.5));
}

#[test]
fn static_road_offset_is_a_rigid_lift() {
    let v = VehicleParams::reference();
    let cfg = SimConfig {
        duration: 80.0,
        warmup: 0.0,
        ..SimConfig::default()
    };
    let resp = simulate(&v, &step_road(0.05, 810.0), &cfg).unwrap();
    let last = resp.len() - 1;
    assert!((resp.sprung_displacement[last] - 0.05).abs() < 1e-6);
    assert!(resp.pitch[last].abs() < 1e-5);
    for i in 0..v.axle_count {
        // Static axle load is about 54 kN.
        assert!(resp.tire_load[i][last].abs() < 5.0);
    }
}
