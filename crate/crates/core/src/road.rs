//! Random road profiles from an ISO 8608 displacement PSD.
//!
//! A profile is a superposition of cosines,
//! `h(x) = Σ_j sqrt(2·G_d(n_j)·Δn_j) · cos(2π n_j x + φ_j)`,
//! over log-spaced spatial frequencies `n_j` with `G_d(n) = G_d(n₀)·(n/n₀)^−2`
//! and phases drawn uniformly from a seeded generator.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fmt::{f64_17, parse_f64};
use crate::{Error, Result};

/// Reference spatial frequency n₀, cycles/m.
pub const REFERENCE_FREQUENCY: f64 = 0.1;

/// ISO 8608 roughness class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IsoClass {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl IsoClass {
    pub const ALL: [IsoClass; 8] = [
        IsoClass::A,
        IsoClass::B,
        IsoClass::C,
        IsoClass::D,
        IsoClass::E,
        IsoClass::F,
        IsoClass::G,
        IsoClass::H,
    ];

    /// Geometric-mean `G_d(n₀)` in m³: 16×10⁻⁶ for class A, ×4 per class.
    pub fn reference_psd(self) -> f64 {
        16e-6 * 4f64.powi(self as i32)
    }
}

impl fmt::Display for IsoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'A' + *self as u8) as char;
        write!(f, "{c}")
    }
}

impl FromStr for IsoClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
            (Some(c @ 'A'..='H'), None) => Ok(Self::ALL[(c as u8 - b'A') as usize]),
            _ => Err(Error::RoadSpec(format!("unknown ISO 8608 class {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadSpec {
    pub iso_class: IsoClass,
    /// m
    pub length: f64,
    /// m
    pub spatial_step: f64,
    pub seed: u64,
    /// cycles/m
    pub n_min: f64,
    /// cycles/m
    pub n_max: f64,
    pub components: usize,
    /// Overrides the class value of `G_d(n₀)` (m³).
    pub reference_psd: Option<f64>,
}

impl Default for RoadSpec {
    fn default() -> Self {
        Self {
            iso_class: IsoClass::C,
            length: 250.0,
            spatial_step: 0.05,
            seed: 42,
            n_min: 0.011,
            n_max: 2.83,
            components: 256,
            reference_psd: None,
        }
    }
}

impl RoadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_step > 0.0) {
            return Err(Error::RoadSpec("spatial_step must be positive".into()));
        }
        if !(self.length >= 0.0) {
            return Err(Error::RoadSpec("length must be non-negative".into()));
        }
        if !(self.n_min > 0.0) {
            return Err(Error::RoadSpec("n_min must be positive".into()));
        }
        if !(self.n_max >= self.n_min) {
            return Err(Error::RoadSpec("n_max must not be below n_min".into()));
        }
        if self.spatial_step > 1.0 / (2.0 * self.n_max) {
            return Err(Error::RoadSpec(format!(
                "spatial_step {} m exceeds the Nyquist limit 1/(2·{}) m",
                self.spatial_step, self.n_max
            )));
        }
        if self.components == 0 {
            return Err(Error::RoadSpec("need at least one frequency component".into()));
        }
        if let Some(g) = self.reference_psd {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::RoadSpec("reference_psd must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn psd_at_reference(&self) -> f64 {
        self.reference_psd.unwrap_or_else(|| self.iso_class.reference_psd())
    }

    /// Displacement PSD `G_d(n)` in m³.
    pub fn psd(&self, n: f64) -> f64 {
        let ratio = n / REFERENCE_FREQUENCY;
        self.psd_at_reference() / (ratio * ratio)
    }

    /// `(n_j, Δn_j)` for each cosine: geometric centres of log-spaced bands.
    pub fn frequency_bands(&self) -> Vec<(f64, f64)> {
        let n = self.components;
        let ratio = self.n_max / self.n_min;
        let edge = |k: usize| self.n_min * ratio.powf(k as f64 / n as f64);
        (0..n)
            .map(|j| {
                let (lo, hi) = (edge(j), edge(j + 1));
                ((lo * hi).sqrt(), hi - lo)
            })
            .collect()
    }

    pub fn sample_count(&self) -> usize {
        // Small slack so lengths that are exact multiples survive the division.
        (self.length / self.spatial_step + 1e-9).floor() as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadProfile {
    pub elevations: Vec<f64>,
    pub spatial_step: f64,
    pub length: f64,
    pub iso_class: IsoClass,
    pub seed: u64,
}

pub fn generate_profile(spec: &RoadSpec) -> Result<RoadProfile> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let waves: Vec<(f64, f64, f64)> = spec
        .frequency_bands()
        .into_iter()
        .map(|(n, dn)| {
            let phase = rng.random::<f64>() * TAU;
            ((2.0 * spec.psd(n) * dn).sqrt(), 2.0 * PI * n, phase)
        })
        .collect();

    let elevations = (0..spec.sample_count())
        .map(|k| {
            let x = k as f64 * spec.spatial_step;
            waves
                .iter()
                .map(|&(amp, omega, phase)| amp * (omega * x + phase).cos())
                .sum()
        })
        .collect();

    Ok(RoadProfile {
        elevations,
        spatial_step: spec.spatial_step,
        length: spec.length,
        iso_class: spec.iso_class,
        seed: spec.seed,
    })
}

impl RoadProfile {
    /// Profile of `length` m with every elevation equal to `height`.
    pub fn constant(height: f64, length: f64, spatial_step: f64) -> Self {
        let n = (length / spatial_step + 1e-9).floor() as usize + 1;
        Self {
            elevations: vec![height; n],
            spatial_step,
            length,
            iso_class: IsoClass::A,
            seed: 0,
        }
    }

    /// Builds a profile by sampling `f` on the grid.
    pub fn from_fn(length: f64, spatial_step: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut p = Self::constant(0.0, length, spatial_step);
        for (k, h) in p.elevations.iter_mut().enumerate() {
            *h = f(k as f64 * spatial_step);
        }
        p
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.elevations.iter_mut().for_each(|h| *h *= factor);
        p
    }

    /// Elevation by linear interpolation. Positions between the last sample
    /// and `length` take the last sample's value.
    pub fn height_at(&self, position: f64) -> Result<f64> {
        if !(position >= 0.0 && position <= self.length) {
            return Err(Error::OutOfRange {
                position,
                length: self.length,
            });
        }
        let last = self.elevations.len() - 1;
        let u = position / self.spatial_step;
        let nearest = u.round();
        if (u - nearest).abs() < 1e-9 {
            return Ok(self.elevations[(nearest as usize).min(last)]);
        }
        let i = u.floor() as usize;
        if i >= last {
            return Ok(self.elevations[last]);
        }
        let frac = u - i as f64;
        let (h0, h1) = (self.elevations[i], self.elevations[i + 1]);
        Ok(h0 + frac * (h1 - h0))
    }

    pub fn mean(&self) -> f64 {
        self.elevations.iter().sum::<f64>() / self.elevations.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.elevations.iter().map(|h| h * h).sum::<f64>() / self.elevations.len() as f64).sqrt()
    }

    /// Two-column CSV with a `#` metadata line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# iso_class={} seed={} spatial_step={} length={}",
            self.iso_class,
            self.seed,
            f64_17(self.spatial_step),
            f64_17(self.length)
        )?;
        writeln!(w, "position_m,height_m")?;
        for (k, h) in self.elevations.iter().enumerate() {
            writeln!(w, "{},{}", f64_17(k as f64 * self.spatial_step), f64_17(*h))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let meta = lines.next().ok_or_else(|| Error::Parse("empty road file".into()))??;
        let meta = meta
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("road file must start with a '#' metadata line".into()))?;
        let (mut class, mut seed, mut step, mut length) = (None, None, None, None);
        for kv in meta.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry {kv:?}")))?;
            match k {
                "iso_class" => class = Some(v.parse::<IsoClass>()?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::Parse(format!("bad seed {v:?}")))?),
                "spatial_step" => step = Some(parse_f64(v, "spatial_step")?),
                "length" => length = Some(parse_f64(v, "length")?),
                _ => {}
            }
        }
        let step = step.ok_or_else(|| Error::Parse("missing spatial_step".into()))?;
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing column header".into()))??;
        if header.trim() != "position_m,height_m" {
            return Err(Error::Parse(format!("unexpected column header {header:?}")));
        }
        let mut elevations = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (_, h) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad road row {line:?}")))?;
            elevations.push(parse_f64(h, "height_m")?);
        }
        if elevations.is_empty() {
            return Err(Error::Parse("road file has no samples".into()));
        }
        let length = length.unwrap_or((elevations.len() - 1) as f64 * step);
        Ok(Self {
            elevations,
            spatial_step: step,
            length,
            iso_class: class.unwrap_or(IsoClass::C),
            seed: seed.unwrap_or(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn short_spec(seed: u64) -> RoadSpec {
        RoadSpec {
            length: 100.0,
            seed,
            ..RoadSpec::default()
        }
    }

    #[test]
    fn iso_table() {
        assert_eq!(IsoClass::A.reference_psd(), 16e-6);
        assert_relative_eq!(IsoClass::C.reference_psd(), 256e-6);
        assert_relative_eq!(IsoClass::H.reference_psd(), 262144e-6);
        assert_eq!("c".parse::<IsoClass>().unwrap(), IsoClass::C);
        assert!("Z".parse::<IsoClass>().is_err());
    }

    #[test]
    fn sample_count_matches_length() {
        let spec = RoadSpec {
            length: 2000.0,
            ..RoadSpec::default()
        };
        let p = generate_profile(&RoadSpec {
            length: 10.0,
            ..spec.clone()
        })
        .unwrap();
        assert_eq!(p.elevations.len(), 201);
        assert_eq!(spec.sample_count(), 40001);
    }

    #[test]
    fn collapsed_band_gives_flat_profile() {
        let spec = RoadSpec {
            n_min: 0.5,
            n_max: 0.5,
            ..short_spec(1)
        };
        let p = generate_profile(&spec).unwrap();
        assert!(p.elevations.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn same_seed_same_profile() {
        let a = generate_profile(&short_spec(7)).unwrap();
        let b = generate_profile(&short_spec(7)).unwrap();
        assert_eq!(a, b);
        let c = generate_profile(&short_spec(8)).unwrap();
        assert_ne!(a.elevations, c.elevations);
    }

    #[test]
    fn nyquist_violation_rejected() {
        let spec = RoadSpec {
            spatial_step: 0.5,
            ..RoadSpec::default()
        };
        assert!(matches!(generate_profile(&spec), Err(Error::RoadSpec(_))));
    }

    #[test]
    fn doubling_reference_psd_scales_by_sqrt2() {
        let base = short_spec(3);
        let g = base.psd_at_reference();
        let doubled = RoadSpec {
            reference_psd: Some(2.0 * g),
            ..base.clone()
        };
        let a = generate_profile(&base).unwrap();
        let b = generate_profile(&doubled).unwrap();
        for (x, y) in a.elevations.iter().zip(&b.elevations) {
            assert_relative_eq!(x * 2f64.sqrt(), *y, max_relative = 1e-9, epsilon = 1e-15);
        }
    }

    #[test]
    fn rms_grows_with_class() {
        let a = generate_profile(&short_spec(5)).unwrap();
        let spec_b = RoadSpec {
            iso_class: IsoClass::B,
            ..short_spec(5)
        };
        let spec_a = RoadSpec {
            iso_class: IsoClass::A,
            ..short_spec(5)
        };
        let (ra, rb) = (
            generate_profile(&spec_a).unwrap().rms(),
            generate_profile(&spec_b).unwrap().rms(),
        );
        assert!(rb > ra);
        assert!(a.rms() > rb);
    }

    #[test]
    fn long_profile_is_near_zero_mean() {
        let spec = RoadSpec {
            length: 5000.0,
            ..RoadSpec::default()
        };
        let p = generate_profile(&spec).unwrap();
        let n = p.elevations.len() as f64;
        // Samples are correlated, so 3σ/√N is applied with the effective
        // sample count of one long-wavelength period per 1/n_min metres.
        let n_eff = (spec.length * spec.n_min).max(1.0);
        assert!(n_eff < n);
        assert!(p.mean().abs() < 3.0 * p.rms() / n_eff.sqrt());
    }

    #[test]
    fn height_lookup() {
        let p = RoadProfile {
            elevations: vec![0.0, 0.02, -0.01],
            spatial_step: 0.5,
            length: 1.0,
            iso_class: IsoClass::C,
            seed: 0,
        };
        assert_eq!(p.height_at(0.5).unwrap(), 0.02);
        assert_eq!(p.height_at(0.25).unwrap(), 0.01);
        assert_eq!(p.height_at(1.0).unwrap(), -0.01);
        assert!(matches!(p.height_at(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(p.height_at(-0.1), Err(Error::OutOfRange { .. })));

        let flat = RoadProfile::constant(0.3, 10.0, 0.05);
        for x in [0.0, 0.013, 3.3333, 9.99, 10.0] {
            assert_eq!(flat.height_at(x).unwrap(), 0.3);
        }
        // 0.15 / 0.05 is not exactly 3 in floating point.
        let ramp = RoadProfile::from_fn(1.0, 0.05, |x| x);
        assert_eq!(ramp.height_at(0.15).unwrap(), ramp.elevations[3]);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(seed in any::<u64>(), len in 1.0..30.0f64) {
            let spec = RoadSpec { length: len, seed, ..RoadSpec::default() };
            let p = generate_profile(&spec).unwrap();
            let mut buf = Vec::new();
            p.write_csv(&mut buf).unwrap();
            let q = RoadProfile::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
