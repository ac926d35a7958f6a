//! Multi-axle half-car suspension dynamics toolkit.
//!
//! The crate covers the whole chain from a physical vehicle description to a
//! trained surrogate model:
//!
//! - [`vehicle`]: n-axle half-car parameters and the mass/damping/stiffness
//!   matrices of the equations of motion.
//! - [`road`]: ISO 8608 random road profiles built from a displacement PSD.
//! - [`sim`]: fixed-step RK4 integration over a road traversal and response
//!   metrics (RMS accelerations, pitch, suspension travel, dynamic tire load).
//! - [`sdpi`]: the Suspension Dynamic Performance Index.
//! - [`dataset`]: parameter sampling and batch simulation into a training set.
//! - [`surrogate`]: RBM-pretrained multitask network (MTL-DBN-DNN), a fully
//!   connected DNN baseline, and MAPE / R² evaluation.
//! - [`sensitivity`]: one-at-a-time and Sobol parameter sensitivity.
//! - [`cli`], [`config`], [`manifest`], [`plot`]: the command-line front end
//!   and its file formats.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod road;
pub mod sdpi;
pub mod sensitivity;
pub mod sim;
pub mod surrogate;
pub mod vehicle;

mod fmt;

pub use error::{Error, Result};
pub use road::{IsoClass, RoadProfile, RoadSpec};
pub use sdpi::{sdpi, MetricVector};
pub use sim::{response_metrics, simulate, ResponseMetrics, SimConfig, SimResponse};
pub use vehicle::{SystemMatrices, VehicleParams};
