//! TOML run configuration with `[vehicle]`, `[road]`, `[sim]`, `[sampling]`
//! and `[train]` sections. Vehicle keys follow the usual symbols (`m_s`,
//! `I_y`, `m_us`, `k_s`, `c_s`, `k_t`, `wb`, `n_axles`); a scalar applies to
//! every axle and a list sets each axle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{SamplingScheme, SamplingSpec, INPUTS};
use crate::road::{RoadProfile, RoadSpec};
use crate::sim::SimConfig;
use crate::surrogate::{Architecture, TrainConfig};
use crate::vehicle::{equidistant_offsets, VehicleParams};
use crate::{Error, Result};

/// Extra road beyond the front axle's traversal.
pub const ROAD_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrList::Scalar(x) => Ok(vec![*x; n]),
            ScalarOrList::List(v) if v.len() == n => Ok(v.clone()),
            ScalarOrList::List(v) => Err(Error::Validation(format!(
                "key `{key}` lists {} values, expected {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub n_axles: usize,
    pub m_s: f64,
    #[serde(rename = "I_y")]
    pub i_y: f64,
    pub m_us: ScalarOrList,
    pub k_s: ScalarOrList,
    pub c_s: ScalarOrList,
    pub k_t: ScalarOrList,
    /// First-to-last axle distance; axles equidistant about the CG.
    pub wb: f64,
    /// Explicit offsets from the CG, overriding `wb`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axle_offsets: Option<Vec<f64>>,
}

impl VehicleSection {
    pub fn from_params(v: &VehicleParams) -> Self {
        Self {
            n_axles: v.axle_count,
            m_s: v.sprung_mass,
            i_y: v.pitch_inertia,
            m_us: ScalarOrList::List(v.unsprung_masses.clone()),
            k_s: ScalarOrList::List(v.spring_coeffs.clone()),
            c_s: ScalarOrList::List(v.damping_coeffs.clone()),
            k_t: ScalarOrList::List(v.tire_stiffnesses.clone()),
            wb: v.wheelbase(),
            axle_offsets: Some(v.axle_offsets.clone()),
        }
    }

    pub fn to_params(&self) -> Result<VehicleParams> {
        let n = self.n_axles;
        let axle_offsets = match &self.axle_offsets {
            Some(l) if l.len() == n => l.clone(),
            Some(l) => {
                return Err(Error::Validation(format!(
                    "key `axle_offsets` lists {} values, expected {n}",
                    l.len()
                )))
            }
            None => equidistant_offsets(n, self.wb),
        };
        let v = VehicleParams {
            axle_count: n,
            sprung_mass: self.m_s,
            pitch_inertia: self.i_y,
            unsprung_masses: self.m_us.expand(n, "m_us")?,
            spring_coeffs: self.k_s.expand(n, "k_s")?,
            damping_coeffs: self.c_s.expand(n, "c_s")?,
            tire_stiffnesses: self.k_t.expand(n, "k_t")?,
            axle_offsets,
        };
        v.validate()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadSection {
    #[serde(flatten)]
    pub spec: RoadSpec,
    /// Replace the random profile with a flat one.
    pub flat: bool,
    /// Profile CSV to load instead of generating one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// When unset the length follows the simulation traversal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auto_length: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSection {
    pub ranges: ScalarOrList,
    pub sample_count: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingSpec::default();
        Self {
            ranges: ScalarOrList::Scalar(0.3),
            sample_count: d.sample_count,
            scheme: d.scheme,
            seed: d.seed,
        }
    }
}

impl SamplingSection {
    pub fn to_spec(&self) -> Result<SamplingSpec> {
        let r = self.ranges.expand(INPUTS, "ranges")?;
        let spec = SamplingSpec {
            ranges: std::array::from_fn(|j| r[j]),
            sample_count: self.sample_count,
            scheme: self.scheme,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    #[serde(flatten)]
    pub config: TrainConfig,
    #[serde(flatten)]
    pub arch: Architecture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileConfig {
    #[serde(default = "reference_section")]
    pub vehicle: VehicleSection,
    #[serde(default)]
    pub road: RoadSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub train: TrainSection,
}

fn reference_section() -> VehicleSection {
    VehicleSection::from_params(&VehicleParams::reference())
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            vehicle: reference_section(),
            road: RoadSection::default(),
            sim: SimConfig::default(),
            sampling: SamplingSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.vehicle.to_params()?;
        cfg.sim.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn vehicle(&self) -> Result<VehicleParams> {
        self.vehicle.to_params()
    }

    /// Road spec with the length stretched to cover the traversal unless
    /// `auto_length = false`.
    pub fn road_spec(&self) -> RoadSpec {
        let mut spec = self.road.spec.clone();
        if self.road.auto_length.unwrap_or(true) {
            spec.length = spec.length.max(self.sim.road_length_needed() + ROAD_MARGIN);
        }
        spec
    }

    pub fn road_profile(&self) -> Result<RoadProfile> {
        let spec = self.road_spec();
        if self.road.flat {
            return Ok(RoadProfile::constant(0.0, spec.length, spec.spatial_step));
        }
        if let Some(file) = &self.road.file {
            let f = std::fs::File::open(file)?;
            return RoadProfile::read_csv(std::io::BufReader::new(f));
        }
        crate::road::generate_profile(&spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
[vehicle]
n_axles = 4
m_s = 20337.8
I_y = 562239.6
m_us = 458.4
k_s = 128710.0
c_s = 11522.5
k_t = 840857.0
wb = 4.85
"#;

    #[test]
    fn reference_file_matches_builtin() {
        let cfg = FileConfig::parse(REFERENCE).unwrap();
        assert_eq!(cfg.vehicle().unwrap(), VehicleParams::reference());
        assert_eq!(cfg.sim, SimConfig::default());
    }

    #[test]
    fn empty_file_defaults_to_reference() {
        let cfg = FileConfig::parse("").unwrap();
        assert_eq!(cfg.vehicle().unwrap(), VehicleParams::reference());
        assert_eq!(cfg.sampling.to_spec().unwrap(), SamplingSpec::default());
    }

    #[test]
    fn lists_override_per_axle() {
        let text = REFERENCE.replace("k_s = 128710.0", "k_s = [1.0, 2.0, 3.0, 4.0]");
        let v = FileConfig::parse(&text).unwrap().vehicle().unwrap();
        assert_eq!(v.spring_coeffs, vec![1.0, 2.0, 3.0, 4.0]);
        let bad = REFERENCE.replace("k_s = 128710.0", "k_s = [1.0, 2.0]");
        let err = FileConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("k_s"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_key_is_named() {
        let text = REFERENCE.replace("m_s = 20337.8\n", "");
        let err = FileConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("m_s"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sections_override_defaults() {
        let text = format!(
            "{REFERENCE}\n[sim]\nspeed = 15.0\n[road]\niso_class = \"D\"\nseed = 3\n[sampling]\nranges = 0.1\nsample_count = 10\nscheme = \"uniform-random\"\n[train]\nepochs = 3\nhidden = [8, 8, 20]\nwindow = 5\nstride = 3\n"
        );
        let cfg = FileConfig::parse(&text).unwrap();
        assert_eq!(cfg.sim.speed, 15.0);
        assert_eq!(cfg.road.spec.iso_class, crate::IsoClass::D);
        assert_eq!(cfg.road_spec().length, 15.0 * 20.0 + ROAD_MARGIN);
        let s = cfg.sampling.to_spec().unwrap();
        assert_eq!(s.ranges, [0.1; INPUTS]);
        assert_eq!(s.scheme, SamplingScheme::UniformRandom);
        assert_eq!(cfg.train.config.epochs, 3);
        assert_eq!(cfg.train.arch.hidden, vec![8, 8, 20]);
        assert_eq!(cfg.train.config.batch_size, 32);
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = FileConfig::default();
        let back = FileConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
