//! Laser-scan analysis: synthetic scans, resonance detection, sideband axis
//! calibration, Lorentzian linewidth fits and mode-ladder identification.
//!
//! The canonical signal is the reflected power normalized to the
//! off-resonance level, so resonances appear as dips of depth `contrast`.

mod fit;
mod io;
mod ladder;
mod peaks;
mod synth;

use serde::{Deserialize, Serialize};

pub use fit::{
    calibrate_with_sidebands, fit_lorentzian, fit_with_sidebands, measure_linewidth, monte_carlo_linewidths,
    LinewidthMeasurement, LinewidthReport, LorentzianFit, SidebandCalibration, SidebandFit,
};
pub use io::{read_spectrum_csv, write_spectrum_csv};
pub use ladder::{
    analyze_mode_spectrum, identify_mode_ladder, FsrCheck, LadderAssignment, ModeLadder, ModeSpectrumAnalysis,
};
pub use peaks::{auto_contrast_threshold, detect_peaks, estimate_noise_sigma};
pub use synth::{
    ladder_resonances, resonance_wavelength_nm, synthesize_scan, AxisSpec, Resonance, ScanConfig, Sidebands,
};

use crate::error::{domain, Result};
use crate::optics::ModeIndex;
use crate::C_UM_THZ;

/// Minimum number of samples in a spectrum.
pub const MIN_POINTS: usize = 16;

/// Unit of a spectrum's x axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    #[serde(rename = "wavelength_nm")]
    WavelengthNm,
    #[serde(rename = "frequency_ghz")]
    FrequencyGhz,
    /// Uncalibrated scan coordinate (sample index, piezo or tuning voltage).
    #[serde(rename = "sample_index")]
    SampleIndex,
}

impl std::str::FromStr for AxisKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nm" | "wavelength_nm" | "wavelength" => Ok(AxisKind::WavelengthNm),
            "ghz" | "frequency_ghz" | "frequency" => Ok(AxisKind::FrequencyGhz),
            "raw" | "index" | "sample_index" => Ok(AxisKind::SampleIndex),
            other => Err(domain(format!("unknown x unit '{other}', expected nm, ghz or raw"))),
        }
    }
}

/// A 1D scan with strictly increasing x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    axis: AxisKind,
    x: Vec<f64>,
    signal: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum; x must be strictly monotonic (a decreasing axis is
    /// reversed so that x is stored ascending).
    pub fn new(axis: AxisKind, mut x: Vec<f64>, mut signal: Vec<f64>) -> Result<Self> {
        if x.len() != signal.len() {
            return Err(domain(format!("{} x values but {} signal values", x.len(), signal.len())));
        }
        if x.len() < MIN_POINTS {
            return Err(crate::Error::InsufficientData(format!(
                "spectrum needs at least {MIN_POINTS} points, got {}",
                x.len()
            )));
        }
        if x.iter().chain(&signal).any(|v| !v.is_finite()) {
            return Err(domain("spectrum contains non-finite values"));
        }
        let increasing = x.windows(2).all(|w| w[1] > w[0]);
        let decreasing = x.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(domain("spectrum x axis must be strictly monotonic"));
        }
        if decreasing {
            x.reverse();
            signal.reverse();
        }
        Ok(Self { axis, x, signal })
    }

    pub fn axis(&self) -> AxisKind {
        self.axis
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Median sample spacing.
    pub fn median_step(&self) -> f64 {
        let mut d: Vec<f64> = self.x.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(|a, b| a.total_cmp(b));
        d[d.len() / 2]
    }

    /// Exact conversion to an optical-frequency axis (ν = c/λ per sample).
    pub fn to_frequency_ghz(&self) -> Result<Spectrum> {
        match self.axis {
            AxisKind::FrequencyGhz => Ok(self.clone()),
            AxisKind::WavelengthNm => {
                let x = self.x.iter().map(|&nm| nm_to_ghz(nm)).collect();
                Spectrum::new(AxisKind::FrequencyGhz, x, self.signal.clone())
            }
            AxisKind::SampleIndex => Err(domain("a raw scan axis needs calibration before frequency conversion")),
        }
    }

    /// Multiplies the x axis by `k > 0` (axis kind unchanged).
    pub fn rescaled(&self, k: f64) -> Result<Spectrum> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(domain("rescale factor must be positive"));
        }
        Spectrum::new(self.axis, self.x.iter().map(|v| v * k).collect(), self.signal.clone())
    }

    /// Returns `(x, signal)` pairs with x inside `[lo, hi]`.
    pub(crate) fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let start = self.x.partition_point(|&v| v < lo);
        let end = self.x.partition_point(|&v| v <= hi);
        (self.x[start..end].to_vec(), self.signal[start..end].to_vec())
    }
}

pub fn nm_to_ghz(nm: f64) -> f64 {
    C_UM_THZ / (nm * 1e-3) * 1e3
}

pub fn ghz_to_nm(ghz: f64) -> f64 {
    C_UM_THZ / (ghz * 1e-3) * 1e3
}

/// A detected or fitted resonance dip, in the units of its spectrum's axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancePeak {
    pub center: f64,
    pub fwhm: f64,
    /// Dip depth in (0, 1].
    pub contrast: f64,
    pub assignment: Option<ModeIndex>,
}

/// Raw-axis to frequency calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// MHz per raw axis unit.
    pub scale: f64,
    pub scale_sigma: f64,
    /// Mean carrier-to-sideband distance, raw units.
    pub sideband_spacing_measured: f64,
    /// Relative left/right spacing asymmetry.
    pub residual: f64,
}
