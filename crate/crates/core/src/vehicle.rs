//! Vehicle parameterization and the linear equations of motion
//! `M z̈ + C ż + K z = F` of an n-axle half-car.
//!
//! State ordering is `[z_s, θ, z_us(1), …, z_us(n)]`. Axle offsets are
//! measured from the sprung-mass centre of gravity, positive forward, and the
//! suspension deflection at axle `i` is `d_i = z_s − l_i·θ − z_us(i)`.
//! Coordinates are taken from static equilibrium, so gravity does not appear
//! in the force vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reference values of the four-axle vehicle.
pub mod reference {
    pub const SPRUNG_MASS: f64 = 20337.8;
    pub const UNSPRUNG_MASS: f64 = 458.4;
    pub const PITCH_INERTIA: f64 = 562239.6;
    pub const SPRING_COEFF: f64 = 128710.0;
    pub const DAMPING_COEFF: f64 = 11522.5;
    pub const TIRE_STIFFNESS: f64 = 840857.0;
    /// First-to-last axle distance.
    pub const WHEELBASE: f64 = 4.85;
    pub const AXLES: usize = 4;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub axle_count: usize,
    /// kg
    pub sprung_mass: f64,
    /// kg·m²
    pub pitch_inertia: f64,
    /// kg, one per axle
    pub unsprung_masses: Vec<f64>,
    /// N/m
    pub spring_coeffs: Vec<f64>,
    /// N·s/m
    pub damping_coeffs: Vec<f64>,
    /// N/m
    pub tire_stiffnesses: Vec<f64>,
    /// m from the CG, positive forward, strictly decreasing front to rear.
    pub axle_offsets: Vec<f64>,
}

impl VehicleParams {
    /// Vehicle with identical axles spread evenly over `wheelbase`, CG at the
    /// geometric centre.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        axle_count: usize,
        sprung_mass: f64,
        pitch_inertia: f64,
        unsprung_mass: f64,
        spring_coeff: f64,
        damping_coeff: f64,
        tire_stiffness: f64,
        wheelbase: f64,
    ) -> Self {
        Self {
            axle_count,
            sprung_mass,
            pitch_inertia,
            unsprung_masses: vec![unsprung_mass; axle_count],
            spring_coeffs: vec![spring_coeff; axle_count],
            damping_coeffs: vec![damping_coeff; axle_count],
            tire_stiffnesses: vec![tire_stiffness; axle_count],
            axle_offsets: equidistant_offsets(axle_count, wheelbase),
        }
    }

    /// The four-axle reference vehicle.
    pub fn reference() -> Self {
        Self::uniform(
            reference::AXLES,
            reference::SPRUNG_MASS,
            reference::PITCH_INERTIA,
            reference::UNSPRUNG_MASS,
            reference::SPRING_COEFF,
            reference::DAMPING_COEFF,
            reference::TIRE_STIFFNESS,
            reference::WHEELBASE,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.axle_count;
        if n == 0 {
            return Err(Error::Validation("axle_count must be at least 1".into()));
        }
        let lists = [
            ("unsprung_masses", &self.unsprung_masses),
            ("spring_coeffs", &self.spring_coeffs),
            ("damping_coeffs", &self.damping_coeffs),
            ("tire_stiffnesses", &self.tire_stiffnesses),
            ("axle_offsets", &self.axle_offsets),
        ];
        for (name, list) in lists {
            if list.len() != n {
                return Err(Error::Validation(format!(
                    "{name} has {} entries, expected {n}",
                    list.len()
                )));
            }
            if let Some(x) = list.iter().find(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("{name} contains non-finite value {x}")));
            }
        }
        positive("sprung_mass", self.sprung_mass)?;
        positive("pitch_inertia", self.pitch_inertia)?;
        for i in 0..n {
            positive(&format!("unsprung_masses[{i}]"), self.unsprung_masses[i])?;
            positive(&format!("spring_coeffs[{i}]"), self.spring_coeffs[i])?;
            positive(&format!("tire_stiffnesses[{i}]"), self.tire_stiffnesses[i])?;
            if self.damping_coeffs[i] < 0.0 {
                return Err(Error::Validation(format!(
                    "damping_coeffs[{i}] = {} is negative",
                    self.damping_coeffs[i]
                )));
            }
        }
        if self.axle_offsets.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Validation(
                "axle_offsets must be strictly decreasing from front to rear".into(),
            ));
        }
        Ok(())
    }

    /// Number of degrees of freedom, n + 2.
    pub fn dof(&self) -> usize {
        self.axle_count + 2
    }

    /// Distance from the first to the last axle.
    pub fn wheelbase(&self) -> f64 {
        self.axle_offsets[0] - self.axle_offsets[self.axle_count - 1]
    }

    /// Copy with every axle offset scaled about the CG so the first-to-last
    /// distance becomes `wheelbase`.
    pub fn with_wheelbase(&self, wheelbase: f64) -> Self {
        let mut out = self.clone();
        let current = self.wheelbase();
        if current > 0.0 {
            let scale = wheelbase / current;
            out.axle_offsets.iter_mut().for_each(|l| *l *= scale);
        }
        out
    }

    /// Total weight-bearing mass, sprung plus all unsprung.
    pub fn total_mass(&self) -> f64 {
        self.sprung_mass + self.unsprung_masses.iter().sum::<f64>()
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {x} must be strictly positive")))
    }
}

/// Offsets of `n` equally spaced axles spanning `wheelbase`, centred on the CG.
pub fn equidistant_offsets(n: usize, wheelbase: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0; n];
    }
    let spacing = wheelbase / (n - 1) as f64;
    let half = wheelbase / 2.0;
    (0..n).map(|i| half - spacing * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
}

/// Builds M, C and K for the state `[z_s, θ, z_us(1..n)]`.
pub fn assemble_matrices(params: &VehicleParams) -> Result<SystemMatrices> {
    params.validate()?;
    let n = params.axle_count;
    let dof = n + 2;

    let mut mass = DMatrix::zeros(dof, dof);
    mass[(0, 0)] = params.sprung_mass;
    mass[(1, 1)] = params.pitch_inertia;
    for i in 0..n {
        mass[(2 + i, 2 + i)] = params.unsprung_masses[i];
    }

    let damping = coupling_matrix(&params.damping_coeffs, &params.axle_offsets, None);
    let stiffness = coupling_matrix(
        &params.spring_coeffs,
        &params.axle_offsets,
        Some(&params.tire_stiffnesses),
    );

    Ok(SystemMatrices {
        mass,
        damping,
        stiffness,
    })
}

// C and K share one pattern; K adds the tire springs on the unsprung diagonal.
fn coupling_matrix(coeff: &[f64], offsets: &[f64], tire: Option<&[f64]>) -> DMatrix<f64> {
    let n = coeff.len();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    for i in 0..n {
        let (c, l) = (coeff[i], offsets[i]);
        m[(0, 0)] += c;
        m[(0, 1)] -= l * c;
        m[(1, 1)] += l * l * c;
        m[(0, 2 + i)] = -c;
        m[(2 + i, 0)] = -c;
        m[(1, 2 + i)] = l * c;
        m[(2 + i, 1)] = l * c;
        m[(2 + i, 2 + i)] = c + tire.map_or(0.0, |t| t[i]);
    }
    m[(1, 0)] = m[(0, 1)];
    m
}

/// External force vector for the given road elevations under each axle.
pub fn force_vector(params: &VehicleParams, road_heights: &[f64]) -> Result<DVector<f64>> {
    if road_heights.len() != params.axle_count {
        return Err(Error::Validation(format!(
            "got {} road heights for {} axles",
            road_heights.len(),
            params.axle_count
        )));
    }
    let mut f = DVector::zeros(params.dof());
    for (i, (&z, &kt)) in road_heights.iter().zip(&params.tire_stiffnesses).enumerate() {
        f[2 + i] = z * kt;
    }
    Ok(f)
}

/// Static tire normal loads (N, compression positive) from the elastic force
/// and moment balance under gravity.
///
/// With more than two axles the balance is statically indeterminate, so the
/// loads come from solving `K z = −g·m` and reading off the tire deflections.
pub fn static_axle_loads(params: &VehicleParams, gravity: f64) -> Result<Vec<f64>> {
    params.validate()?;
    if params.axle_count < 2 {
        return Err(Error::Geometry(
            "all axles at one longitudinal point; pitch balance is singular".into(),
        ));
    }
    let sys = assemble_matrices(params)?;
    let mut weight = DVector::zeros(params.dof());
    weight[0] = -gravity * params.sprung_mass;
    for i in 0..params.axle_count {
        weight[2 + i] = -gravity * params.unsprung_masses[i];
    }
    let chol = sys
        .stiffness
        .cholesky()
        .ok_or_else(|| Error::Geometry("stiffness matrix is not positive definite".into()))?;
    let z = chol.solve(&weight);
    Ok((0..params.axle_count)
        .map(|i| -params.tire_stiffnesses[i] * z[2 + i])
        .collect())
}
