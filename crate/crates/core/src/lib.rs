//! Design and characterization toolkit for open-access Fabry-Pérot
//! microcavities.
//!
//! The crate is organised along the measurement chain of a microcavity:
//!
//! - [`optics`]: paraxial Gaussian-mode geometry of plano-concave and
//!   concave-concave resonators, and the inversion of transverse-mode
//!   splittings to an effective cavity length.
//! - [`loss`]: round-trip loss budgets, finesse, quality factor, optical
//!   enhancement, Purcell factor and the finesse-vs-length model.
//! - [`spectra`]: laser-scan synthesis, resonance detection, sideband
//!   calibration, Lorentzian linewidth fits and mode-ladder identification.
//! - [`profile`]: mirror height-map synthesis and the paraboloid-plus-quartic
//!   fit that extracts the radius of curvature.
//!
//! Lengths are in µm, optical frequencies in THz, linewidths in MHz and
//! losses in ppm unless a name says otherwise.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod lm;
pub mod loss;
pub mod optics;
pub mod profile;
pub mod reference;
pub mod roots;
pub mod spectra;

pub use error::{Error, Result};
pub use exec::Execution;
pub use optics::{CavityGeometry, GaussianMode, MirrorSpec, ModeIndex, Surface, Topology, Wavelength};

/// Vacuum speed of light in m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Speed of light expressed in µm·THz, so that `C_UM_THZ / length_um` is a
/// frequency in THz.
pub const C_UM_THZ: f64 = SPEED_OF_LIGHT * 1e-6;
