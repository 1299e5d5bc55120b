//! Lorentzian dip fits, sideband axis calibration and linewidth extraction.
//!
//! Fits run in a normalized coordinate `u = (x − x_ref)/w_ref` built from the
//! seed, so convergence behaves identically under any rescaling of the axis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    auto_contrast_threshold, detect_peaks, synthesize_scan, AxisKind, CalibrationResult, ResonancePeak, ScanConfig,
    Spectrum,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lm::{LevenbergMarquardt, Problem};

/// Minimum number of samples inside a fit window.
const MIN_FIT_POINTS: usize = 8;
/// Half-width of the single-dip fit window in units of the seed FWHM.
const WINDOW_HALF_WIDTHS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub center_sigma: f64,
    pub fwhm: f64,
    pub fwhm_sigma: f64,
    pub contrast: f64,
    pub contrast_sigma: f64,
    /// RMS of the fit residuals.
    pub residual: f64,
    pub iterations: usize,
    pub points_used: usize,
}

/// Carrier fitted jointly with two satellites of common width and depth
/// ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandFit {
    pub carrier: LorentzianFit,
    pub left_center: f64,
    pub left_sigma: f64,
    pub right_center: f64,
    pub right_sigma: f64,
    pub depth_ratio: f64,
    pub depth_ratio_sigma: f64,
    /// Half the left-to-right satellite distance and its one-sigma error.
    pub mean_spacing: f64,
    pub mean_spacing_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandCalibration {
    pub calibration: CalibrationResult,
    pub fit: SidebandFit,
}

/// Linewidth report in the external JSON shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthReport {
    /// Carrier center in the units of the input axis.
    pub center: f64,
    /// FWHM in MHz, or in raw axis units when the axis is uncalibrated.
    pub fwhm_mhz: f64,
    pub fwhm_sigma_mhz: f64,
    pub contrast: f64,
    /// RMS fit residual.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthMeasurement {
    pub report: LinewidthReport,
    /// True when `fwhm_mhz` is in MHz.
    pub calibrated: bool,
    pub calibration: Option<CalibrationResult>,
    pub warnings: Vec<String>,
}

/// Sum of Lorentzian dips on a unit baseline in normalized coordinates.
///
/// Parameters are `[u0, Γ, c]`, or `[u0, Γ, c, uL, uR, r]` with satellites
/// of depth `r·c` at `uL` and `uR`.
struct DipModel {
    u: Vec<f64>,
    y: Vec<f64>,
    sidebands: bool,
}

fn lorentz(u: f64, center: f64, width: f64) -> (f64, f64, f64) {
    // value, d/dcenter, d/dwidth
    let h = 0.5 * width;
    let d = u - center;
    let den = d * d + h * h;
    let l = h * h / den;
    (l, 2.0 * h * h * d / (den * den), h * d * d / (den * den))
}

impl Problem for DipModel {
    fn params(&self) -> usize {
        if self.sidebands {
            6
        } else {
            3
        }
    }

    fn observations(&self) -> usize {
        self.u.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (i, (&u, &y)) in self.u.iter().zip(&self.y).enumerate() {
            let mut dip = lorentz(u, p[0], p[1]).0;
            if self.sidebands {
                dip += p[5] * (lorentz(u, p[3], p[1]).0 + lorentz(u, p[4], p[1]).0);
            }
            out[i] = 1.0 - p[2] * dip - y;
        }
    }

    fn scale(&self, p: &[f64], j: usize) -> f64 {
        match j {
            0 | 3 | 4 => p[1].abs(),
            _ => p[j].abs(),
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let c = p[2];
        for (i, &u) in self.u.iter().enumerate() {
            let (l0, d0, w0) = lorentz(u, p[0], p[1]);
            jac[(i, 0)] = -c * d0;
            if self.sidebands {
                let r = p[5];
                let (ll, dl, wl) = lorentz(u, p[3], p[1]);
                let (lr, dr, wr) = lorentz(u, p[4], p[1]);
                jac[(i, 1)] = -c * (w0 + r * (wl + wr));
                jac[(i, 2)] = -(l0 + r * (ll + lr));
                jac[(i, 3)] = -c * r * dl;
                jac[(i, 4)] = -c * r * dr;
                jac[(i, 5)] = -c * (ll + lr);
            } else {
                jac[(i, 1)] = -c * w0;
                jac[(i, 2)] = -l0;
            }
        }
    }
}

fn check_seed(seed: &ResonancePeak) -> Result<()> {
    if !(seed.contrast > 0.0 && seed.contrast.is_finite()) {
        return Err(Error::Degenerate(format!("seed contrast {} is not positive", seed.contrast)));
    }
    if !(seed.fwhm > 0.0 && seed.fwhm.is_finite()) {
        return Err(Error::Degenerate(format!("seed width {} is not positive", seed.fwhm)));
    }
    Ok(())
}

struct Normalized {
    origin: f64,
    unit: f64,
    model: DipModel,
}

fn normalize(spec: &Spectrum, lo: f64, hi: f64, origin: f64, unit: f64, sidebands: bool) -> Result<Normalized> {
    let (x, y) = spec.window(lo, hi);
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points inside the fit window [{lo}, {hi}], need {MIN_FIT_POINTS}",
            x.len()
        )));
    }
    let u = x.iter().map(|&v| (v - origin) / unit).collect();
    Ok(Normalized { origin, unit, model: DipModel { u, y, sidebands } })
}

fn carrier_fit(n: &Normalized, sol: &crate::lm::Solution) -> LorentzianFit {
    let m = n.model.u.len();
    LorentzianFit {
        center: n.origin + sol.params[0] * n.unit,
        center_sigma: sol.sigma(0) * n.unit,
        fwhm: sol.params[1].abs() * n.unit,
        fwhm_sigma: sol.sigma(1) * n.unit,
        contrast: sol.params[2],
        contrast_sigma: sol.sigma(2),
        residual: (sol.ssr / m as f64).sqrt(),
        iterations: sol.iterations,
        points_used: m,
    }
}

/// Fits `1 − c·(Γ/2)²/((x−x₀)² + (Γ/2)²)` to the samples within two seed
/// widths of the seed center.
pub fn fit_lorentzian(spec: &Spectrum, seed: &ResonancePeak) -> Result<LorentzianFit> {
    check_seed(seed)?;
    let half = WINDOW_HALF_WIDTHS * seed.fwhm;
    let n = normalize(spec, seed.center - half, seed.center + half, seed.center, seed.fwhm, false)?;
    let sol = LevenbergMarquardt::default().solve(&n.model, &[0.0, 1.0, seed.contrast])?;
    if !(sol.params[2] > 0.0) {
        return Err(Error::Degenerate("fitted contrast is not positive".into()));
    }
    Ok(carrier_fit(&n, &sol))
}

/// Joint fit of a carrier and its two satellites, seeded from coarse peaks.
pub fn fit_with_sidebands(
    spec: &Spectrum,
    carrier: &ResonancePeak,
    left: &ResonancePeak,
    right: &ResonancePeak,
) -> Result<SidebandFit> {
    check_seed(carrier)?;
    if !(left.center < carrier.center && carrier.center < right.center) {
        return Err(Error::Calibration("satellites must lie on either side of the carrier".into()));
    }
    let width = carrier.fwhm;
    let n = normalize(spec, left.center - 2.0 * width, right.center + 2.0 * width, carrier.center, width, true)?;
    let ratio = (0.5 * (left.contrast + right.contrast) / carrier.contrast).max(1e-3);
    let init = [
        0.0,
        1.0,
        carrier.contrast,
        (left.center - carrier.center) / width,
        (right.center - carrier.center) / width,
        ratio,
    ];
    let sol = LevenbergMarquardt::default().solve(&n.model, &init)?;
    if !(sol.params[2] > 0.0 && sol.params[5] > 0.0) {
        return Err(Error::Calibration("sideband fit collapsed to zero depth".into()));
    }
    let p = &sol.params;
    let mean_spacing = 0.5 * (p[4] - p[3]) * width;
    let mean_spacing_sigma = sol
        .covariance
        .as_ref()
        .map(|c| 0.5 * (c[(3, 3)] + c[(4, 4)] - 2.0 * c[(3, 4)]).max(0.0).sqrt() * width)
        .unwrap_or(0.0);
    Ok(SidebandFit {
        carrier: carrier_fit(&n, &sol),
        left_center: n.origin + p[3] * width,
        left_sigma: sol.sigma(3) * width,
        right_center: n.origin + p[4] * width,
        right_sigma: sol.sigma(4) * width,
        depth_ratio: p[5],
        depth_ratio_sigma: sol.sigma(5),
        mean_spacing,
        mean_spacing_sigma,
    })
}

/// Calibrates the axis from a carrier flanked by modulation sidebands at
/// `±modulation_mhz`. The deepest dip is taken as the carrier and the
/// nearest dip on each side as its satellites.
pub fn calibrate_with_sidebands(spec: &Spectrum, modulation_mhz: f64) -> Result<SidebandCalibration> {
    if !(modulation_mhz > 0.0 && modulation_mhz.is_finite()) {
        return Err(crate::error::domain("sideband modulation frequency must be positive"));
    }
    let peaks = detect_peaks(spec, auto_contrast_threshold(spec));
    let Some(ci) = (0..peaks.len()).max_by(|&a, &b| peaks[a].contrast.total_cmp(&peaks[b].contrast)) else {
        return Err(Error::Calibration("sidebands not found: no resonance detected".into()));
    };
    if ci == 0 || ci + 1 == peaks.len() {
        return Err(Error::Calibration(format!(
            "sidebands not found: {} dip(s) detected, carrier at {} lacks a satellite on {} side",
            peaks.len(),
            peaks[ci].center,
            if ci == 0 && ci + 1 == peaks.len() {
                "either"
            } else if ci == 0 {
                "the low"
            } else {
                "the high"
            }
        )));
    }
    let (carrier, left, right) = (peaks[ci], peaks[ci - 1], peaks[ci + 1]);
    let step = spec.median_step();
    let dl = carrier.center - left.center;
    let dr = right.center - carrier.center;
    if dl <= 2.0 * step || dr <= 2.0 * step {
        return Err(Error::Calibration(format!(
            "sidebands unresolved: carrier-satellite distances {dl} and {dr} are within two samples ({step})"
        )));
    }
    if !(0.5..=2.0).contains(&(dl / dr)) {
        return Err(Error::Calibration(format!(
            "sidebands not found: neighbours of the carrier are asymmetric ({dl} vs {dr})"
        )));
    }
    let depth_balance = left.contrast / right.contrast;
    if !(0.25..=4.0).contains(&depth_balance) {
        return Err(Error::Calibration(format!(
            "sidebands not found: neighbour depths {} and {} are too unequal",
            left.contrast, right.contrast
        )));
    }

    let fit = fit_with_sidebands(spec, &carrier, &left, &right)?;
    let scale = modulation_mhz / fit.mean_spacing;
    let left_spacing = fit.carrier.center - fit.left_center;
    let right_spacing = fit.right_center - fit.carrier.center;
    let calibration = CalibrationResult {
        scale,
        scale_sigma: scale * fit.mean_spacing_sigma / fit.mean_spacing,
        sideband_spacing_measured: fit.mean_spacing,
        residual: (right_spacing - left_spacing).abs() / fit.mean_spacing,
    };
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Calibration(format!("non-physical axis scale {scale}")));
    }
    Ok(SidebandCalibration { calibration, fit })
}

/// Measures the linewidth of the deepest resonance.
///
/// With `sideband_mhz` the axis is calibrated from the satellites and the
/// carrier width comes from the joint fit. Without it a frequency or
/// wavelength axis is converted exactly; a raw axis yields a width in raw
/// units and a warning.
pub fn measure_linewidth(spec: &Spectrum, sideband_mhz: Option<f64>) -> Result<LinewidthMeasurement> {
    let working = match spec.axis() {
        AxisKind::WavelengthNm => spec.to_frequency_ghz()?,
        _ => spec.clone(),
    };
    let to_input_axis = |center: f64| match spec.axis() {
        AxisKind::WavelengthNm => super::ghz_to_nm(center),
        _ => center,
    };
    let mut warnings = Vec::new();

    if let Some(f_mod) = sideband_mhz {
        let cal = calibrate_with_sidebands(&working, f_mod)?;
        let c = cal.calibration;
        let fit = cal.fit.carrier;
        let fwhm_mhz = fit.fwhm * c.scale;
        let sigma = ((fit.fwhm_sigma * c.scale).powi(2) + (fit.fwhm * c.scale_sigma).powi(2)).sqrt();
        if c.residual > 0.05 {
            warnings.push(format!("sideband spacings differ by {:.1}%", 100.0 * c.residual));
        }
        return Ok(LinewidthMeasurement {
            report: LinewidthReport {
                center: to_input_axis(fit.center),
                fwhm_mhz,
                fwhm_sigma_mhz: sigma,
                contrast: fit.contrast,
                residual: fit.residual,
            },
            calibrated: true,
            calibration: Some(c),
            warnings,
        });
    }

    let peaks = detect_peaks(&working, auto_contrast_threshold(&working));
    let seed = peaks.iter().max_by(|a, b| a.contrast.total_cmp(&b.contrast)).ok_or(Error::NoResonanceInSpan)?;
    let fit = fit_lorentzian(&working, seed)?;
    let (factor, calibrated) = match working.axis() {
        AxisKind::FrequencyGhz => (1e3, true),
        _ => {
            warnings.push("no sideband calibration for a raw axis: linewidth in raw units".to_string());
            (1.0, false)
        }
    };
    Ok(LinewidthMeasurement {
        report: LinewidthReport {
            center: to_input_axis(fit.center),
            fwhm_mhz: fit.fwhm * factor,
            fwhm_sigma_mhz: fit.fwhm_sigma * factor,
            contrast: fit.contrast,
            residual: fit.residual,
        },
        calibrated,
        calibration: None,
        warnings,
    })
}

/// Synthesizes `template` once per seed and measures each linewidth.
pub fn monte_carlo_linewidths(
    template: &ScanConfig,
    seeds: &[u64],
    sideband_mhz: Option<f64>,
    exec: Execution,
) -> Vec<Result<LinewidthReport>> {
    exec.map(seeds, |&seed| {
        let cfg = ScanConfig { seed, ..template.clone() };
        let spec = synthesize_scan(&cfg)?;
        Ok(measure_linewidth(&spec, sideband_mhz)?.report)
    })
}
