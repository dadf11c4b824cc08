#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Capacitance-matrix models of graded arrays of subwavelength resonators.
//!
//! The crate covers the full pipeline from geometry to signal processing:
//!
//! * [`geometry`]: spherical resonator arrays and their perturbations,
//! * [`bem`]: boundary-element capacitance matrices from the static single
//!   layer potential,
//! * [`capacitance`]: generalized capacitance matrices (boundary-element or
//!   dilute closed form),
//! * [`spectral`]: resonant frequencies and modes,
//! * [`robustness`]: eigenvalue perturbation bounds, interlacing under
//!   resonator removal and Monte Carlo sweeps,
//! * [`filterbank`]: the damped-sinusoid filter bank induced by the
//!   resonances,
//! * [`io`]: configuration files and CSV/JSON outputs.

pub mod bem;
pub mod capacitance;
pub mod error;
pub mod filterbank;
pub mod geometry;
pub mod io;
pub mod robustness;
pub mod spectral;

pub use error::{Error, Result};

/// Crate version, recorded in output manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
