//! Synthetic micromirror depressions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{aperture_from_cap, SurfaceMap};
use crate::error::{domain, Result};

/// Parameters of a synthetic depression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceConfig {
    pub roc_um: f64,
    pub depth_um: f64,
    /// Coefficient of the r⁴ correction, µm⁻³.
    pub quartic_coeff: f64,
    pub noise_nm: f64,
    pub pitch_um: f64,
    pub seed: u64,
}

impl SurfaceConfig {
    /// Noise-free paraboloid sampled at 1 µm.
    pub fn new(roc_um: f64, depth_um: f64) -> Self {
        Self { roc_um, depth_um, quartic_coeff: 0.0, noise_nm: 0.0, pitch_um: 1.0, seed: 0 }
    }

    pub fn with_quartic(self, quartic_coeff: f64) -> Self {
        Self { quartic_coeff, ..self }
    }

    pub fn with_noise(self, noise_nm: f64, seed: u64) -> Self {
        Self { noise_nm, seed, ..self }
    }

    pub fn with_pitch(self, pitch_um: f64) -> Self {
        Self { pitch_um, ..self }
    }
}

/// Samples `z = r²/(2R) + c₄·r⁴` inside the cap radius and a flat rim at the
/// cap depth outside, on a square grid centered on the vertex that extends
/// 20% beyond the cap. Gaussian height noise is added per sample.
pub fn synthesize_surface(cfg: &SurfaceConfig) -> Result<SurfaceMap> {
    let a = aperture_from_cap(cfg.roc_um, cfg.depth_um)?;
    if !(cfg.pitch_um.is_finite() && cfg.pitch_um > 0.0) {
        return Err(domain("sampling pitch must be positive"));
    }
    if !(cfg.noise_nm.is_finite() && cfg.noise_nm >= 0.0) {
        return Err(domain("noise must be non-negative"));
    }
    let half = (1.2 * a / cfg.pitch_um).ceil() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, (cfg.noise_nm * 1e-3).max(f64::MIN_POSITIVE)).map_err(|e| domain(e.to_string()))?;
    let n = (2 * half + 1) as usize;
    let (mut x, mut y, mut z) = (Vec::with_capacity(n * n), Vec::with_capacity(n * n), Vec::with_capacity(n * n));
    for j in -half..=half {
        for i in -half..=half {
            let (xi, yj) = (i as f64 * cfg.pitch_um, j as f64 * cfg.pitch_um);
            let r2 = xi * xi + yj * yj;
            let mut h = if r2 <= a * a { r2 / (2.0 * cfg.roc_um) + cfg.quartic_coeff * r2 * r2 } else { cfg.depth_um };
            if cfg.noise_nm > 0.0 {
                h += noise.sample(&mut rng);
            }
            x.push(xi);
            y.push(yj);
            z.push(h);
        }
    }
    SurfaceMap::new(x, y, z)
}
