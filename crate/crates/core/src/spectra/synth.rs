//! Synthetic reflection scans with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ghz_to_nm, nm_to_ghz, AxisKind, Spectrum};
use crate::error::{domain, Error, Result};
use crate::optics::{self, CavityGeometry, Wavelength};

/// One Lorentzian reflection dip placed at an optical frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub frequency_ghz: f64,
    pub fwhm_mhz: f64,
    pub contrast: f64,
}

/// Phase-modulation sidebands: two satellites at `±offset_mhz` around every
/// resonance with `depth_ratio` times the carrier contrast.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidebands {
    pub offset_mhz: f64,
    pub depth_ratio: f64,
}

/// Sampling of the scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AxisSpec {
    /// Uniform in wavelength.
    Wavelength { start_nm: f64, stop_nm: f64, points: usize },
    /// Uniform in optical frequency.
    Frequency { start_ghz: f64, stop_ghz: f64, points: usize },
    /// Uncalibrated axis: sample `i` has x = `i·unit` and frequency
    /// `start_ghz + i·unit·mhz_per_unit/1000`.
    Raw { start_ghz: f64, mhz_per_unit: f64, unit: f64, points: usize },
}

impl AxisSpec {
    fn points(&self) -> usize {
        match *self {
            AxisSpec::Wavelength { points, .. } | AxisSpec::Frequency { points, .. } | AxisSpec::Raw { points, .. } => {
                points
            }
        }
    }

    fn kind(&self) -> AxisKind {
        match self {
            AxisSpec::Wavelength { .. } => AxisKind::WavelengthNm,
            AxisSpec::Frequency { .. } => AxisKind::FrequencyGhz,
            AxisSpec::Raw { .. } => AxisKind::SampleIndex,
        }
    }

    /// `(x, ν_GHz)` for sample `i`.
    fn sample(&self, i: usize) -> (f64, f64) {
        let n = self.points();
        let t = i as f64 / (n - 1) as f64;
        match *self {
            AxisSpec::Wavelength { start_nm, stop_nm, .. } => {
                let x = start_nm + (stop_nm - start_nm) * t;
                (x, nm_to_ghz(x))
            }
            AxisSpec::Frequency { start_ghz, stop_ghz, .. } => {
                let x = start_ghz + (stop_ghz - start_ghz) * t;
                (x, x)
            }
            AxisSpec::Raw { start_ghz, mhz_per_unit, unit, .. } => {
                let x = i as f64 * unit;
                (x, start_ghz + x * mhz_per_unit * 1e-3)
            }
        }
    }

    /// Frequency span `(lo, hi)` in GHz.
    fn frequency_span(&self) -> (f64, f64) {
        let (_, a) = self.sample(0);
        let (_, b) = self.sample(self.points() - 1);
        (a.min(b), a.max(b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub axis: AxisSpec,
    pub resonances: Vec<Resonance>,
    pub sidebands: Option<Sidebands>,
    pub noise_sigma: f64,
    pub seed: u64,
}

fn lorentzian_dip(nu_ghz: f64, center_ghz: f64, fwhm_mhz: f64, contrast: f64) -> f64 {
    let h = 0.5 * fwhm_mhz;
    let d = (nu_ghz - center_ghz) * 1e3;
    contrast * h * h / (d * d + h * h)
}

/// Generates a reflection scan `1 − Σ dips + noise`, clamped to
/// `[0, 1 + 3σ]`. Deterministic for a fixed seed.
pub fn synthesize_scan(config: &ScanConfig) -> Result<Spectrum> {
    let n = config.axis.points();
    if n < super::MIN_POINTS {
        return Err(domain(format!("scan needs at least {} points", super::MIN_POINTS)));
    }
    if !(config.noise_sigma >= 0.0) {
        return Err(domain("noise sigma must be non-negative"));
    }
    for r in &config.resonances {
        if !(r.fwhm_mhz > 0.0 && r.contrast > 0.0 && r.contrast <= 1.0) {
            return Err(domain("resonances need positive linewidth and contrast in (0, 1]"));
        }
    }
    if let Some(sb) = config.sidebands {
        if !(sb.offset_mhz > 0.0 && sb.depth_ratio >= 0.0) {
            return Err(domain("sidebands need a positive offset and non-negative depth ratio"));
        }
    }
    let (lo, hi) = config.axis.frequency_span();
    if !config.resonances.iter().any(|r| r.frequency_ghz >= lo && r.frequency_ghz <= hi) {
        return Err(Error::NoResonanceInSpan);
    }

    let mut dips = Vec::with_capacity(config.resonances.len() * 3);
    for r in &config.resonances {
        dips.push(*r);
        if let Some(sb) = config.sidebands {
            if sb.depth_ratio > 0.0 {
                for sign in [-1.0, 1.0] {
                    dips.push(Resonance {
                        frequency_ghz: r.frequency_ghz + sign * sb.offset_mhz * 1e-3,
                        fwhm_mhz: r.fwhm_mhz,
                        contrast: r.contrast * sb.depth_ratio,
                    });
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| domain(e.to_string()))?;
    let ceiling = 1.0 + 3.0 * config.noise_sigma;
    let mut x = Vec::with_capacity(n);
    let mut signal = Vec::with_capacity(n);
    for i in 0..n {
        let (xi, nu) = config.axis.sample(i);
        let mut s = 1.0 - dips.iter().map(|d| lorentzian_dip(nu, d.frequency_ghz, d.fwhm_mhz, d.contrast)).sum::<f64>();
        if config.noise_sigma > 0.0 {
            s += noise.sample(&mut rng);
        }
        x.push(xi);
        signal.push(s.clamp(0.0, ceiling));
    }
    Spectrum::new(config.axis.kind(), x, signal)
}

/// Resonances of a mode ladder anchored at the TEM₀₀ frequency of
/// `fundamental`: `ν = ν₀₀ + m·FSR + N·Δν₁` for transverse orders
/// `0..=max_order` and longitudinal offsets `m` in `longitudinal`. The
/// contrast of order N is `contrast·decay^N`.
pub fn ladder_resonances(
    geom: &CavityGeometry,
    fundamental: Wavelength,
    max_order: u32,
    longitudinal: std::ops::RangeInclusive<i32>,
    fwhm_mhz: f64,
    contrast: f64,
    decay: f64,
) -> Result<Vec<Resonance>> {
    let nu00 = fundamental.frequency_thz() * 1e3;
    let spacing = optics::transverse_mode_spacing(geom, 1)? * 1e3;
    let fsr = optics::free_spectral_range(geom.effective_length()) / geom.medium_index * 1e3;
    let mut out = Vec::new();
    for m in longitudinal {
        for order in 0..=max_order {
            out.push(Resonance {
                frequency_ghz: nu00 + m as f64 * fsr + order as f64 * spacing,
                fwhm_mhz,
                contrast: contrast * decay.powi(order as i32),
            });
        }
    }
    Ok(out)
}

/// Wavelength in nm of a resonance.
pub fn resonance_wavelength_nm(r: &Resonance) -> f64 {
    ghz_to_nm(r.frequency_ghz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{Topology, Wavelength};

    fn single(noise: f64, seed: u64) -> ScanConfig {
        ScanConfig {
            axis: AxisSpec::Frequency { start_ghz: 234_000.0 - 0.4, stop_ghz: 234_000.0 + 0.4, points: 801 },
            resonances: vec![Resonance { frequency_ghz: 234_000.0, fwhm_mhz: 58.0, contrast: 0.6 }],
            sidebands: None,
            noise_sigma: noise,
            seed,
        }
    }

    #[test]
    fn noiseless_scan_is_the_analytic_lorentzian() {
        let s = synthesize_scan(&single(0.0, 1)).unwrap();
        let max_dev = s
            .x()
            .iter()
            .zip(s.signal())
            .map(|(&x, &y)| {
                let d = (x - 234_000.0) * 1e3;
                (y - (1.0 - 0.6 * 29.0 * 29.0 / (d * d + 29.0 * 29.0))).abs()
            })
            .fold(0.0, f64::max);
        assert_eq!(max_dev, 0.0);
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let a = synthesize_scan(&single(0.01, 42)).unwrap();
        let b = synthesize_scan(&single(0.01, 42)).unwrap();
        let c = synthesize_scan(&single(0.01, 43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let ceiling = 1.0 + 3.0 * 0.01;
        assert!(a.signal().iter().all(|&v| (0.0..=ceiling).contains(&v)));
    }

    #[test]
    fn empty_span_is_an_error() {
        let mut cfg = single(0.0, 1);
        cfg.resonances[0].frequency_ghz = 235_000.0;
        assert_eq!(synthesize_scan(&cfg), Err(Error::NoResonanceInSpan));
    }

    #[test]
    fn ladder_places_short_cavity_modes() {
        let r = 69.3;
        let lam0 = Wavelength::from_nm(1275.7).unwrap();
        let lam1 = Wavelength::from_nm(1263.5).unwrap();
        let sol = optics::length_from_mode_splitting(Topology::PlanoConcave, r, lam0, lam1, 1, (1.0, 20.0)).unwrap();
        let g = CavityGeometry::with_effective_length(Topology::PlanoConcave, r, sol.length_um).unwrap();
        let res = ladder_resonances(&g, lam0, 1, 0..=0, 5000.0, 0.8, 0.6).unwrap();
        assert!((resonance_wavelength_nm(&res[0]) - 1275.7).abs() < 1e-9);
        assert!((resonance_wavelength_nm(&res[1]) - 1263.5).abs() < 1e-6);
    }
}
