//! Round-trip loss accounting and derived figures of merit.
//!
//! Losses are carried in ppm throughout and converted to a fractional
//! round-trip loss only when the finesse is evaluated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::optics::{self, CavityGeometry, Wavelength};

const PPM: f64 = 1e-6;
/// 4π²/3, the Purcell denominator.
const PURCELL_SCALE: f64 = 4.0 * PI * PI / 3.0;

/// Per-mechanism round-trip losses in ppm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub transmission_a_ppm: f64,
    pub transmission_b_ppm: f64,
    pub absorption_ppm: f64,
    pub scattering_ppm: f64,
    pub clipping_ppm: f64,
    pub shape_excess_ppm: f64,
}

impl LossBudget {
    pub fn total_ppm(&self) -> f64 {
        self.transmission_a_ppm
            + self.transmission_b_ppm
            + self.absorption_ppm
            + self.scattering_ppm
            + self.clipping_ppm
            + self.shape_excess_ppm
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.transmission_a_ppm,
            self.transmission_b_ppm,
            self.absorption_ppm,
            self.scattering_ppm,
            self.clipping_ppm,
            self.shape_excess_ppm,
        ];
        if parts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("loss components must be finite and non-negative"));
        }
        if self.total_ppm() >= 1e6 {
            return Err(domain(format!("total round-trip loss {} ppm is not below 1e6", self.total_ppm())));
        }
        Ok(())
    }

    /// Budget of a cavity at its current length: mirror transmissions,
    /// per-mirror coating excess (booked as shape excess), roughness
    /// scattering on both mirrors and clipping on every curved mirror.
    pub fn for_cavity(geom: &CavityGeometry, lambda: Wavelength, absorption_ppm: f64) -> Result<Self> {
        let mirrors = [&geom.mirror_a, &geom.mirror_b];
        let scattering_ppm =
            mirrors.iter().map(|m| scattering_loss(m.roughness_rms_nm, lambda)).sum::<Result<f64>>()?;
        let mut clipping_ppm = 0.0;
        let curved = geom.curved_mirrors().filter_map(|m| m.aperture_radius()).collect::<Vec<_>>();
        if !curved.is_empty() {
            let w = optics::spot_on_curved_mirror(geom, lambda)?;
            for a in curved {
                clipping_ppm += clipping_loss(w, a)?;
            }
        }
        let budget = Self {
            transmission_a_ppm: geom.mirror_a.transmission_ppm,
            transmission_b_ppm: geom.mirror_b.transmission_ppm,
            absorption_ppm,
            scattering_ppm,
            clipping_ppm,
            shape_excess_ppm: geom.mirror_a.excess_loss_ppm + geom.mirror_b.excess_loss_ppm,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn finesse(&self) -> Result<Finesse> {
        self.validate()?;
        finesse_from_loss(self.total_ppm())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finesse {
    /// Exact Airy-function finesse.
    pub exact: f64,
    /// Low-loss approximation `2π/l`.
    pub approx: f64,
}

/// Finesse from the total round-trip loss in ppm,
/// `F = π / (2·arcsin((1 − √(1−l)) / (2·(1−l)^¼)))` and `F ≈ 2π/l`.
///
/// The approximation always overestimates: `approx/exact − 1 = l/2 + O(l²)`.
pub fn finesse_from_loss(total_ppm: f64) -> Result<Finesse> {
    if total_ppm == 0.0 {
        return Err(Error::LosslessCavity);
    }
    if !(total_ppm > 0.0 && total_ppm < 1e6) {
        return Err(domain(format!("round-trip loss must lie in (0, 1e6) ppm, got {total_ppm}")));
    }
    let l = total_ppm * PPM;
    let s = (1.0 - l).sqrt();
    // 1 − √(1−l) without cancellation
    let num = l / (1.0 + s);
    let den = 2.0 * s.sqrt();
    let exact = PI / (2.0 * (num / den).asin());
    Ok(Finesse { exact, approx: 2.0 * PI / l })
}

/// Inverse of the exact finesse relation, returning the round-trip loss in
/// ppm. With `u = (1−l)^¼` and `θ = π/2F` the relation reads
/// `u² + 2u·sinθ − 1 = 0`.
pub fn loss_from_finesse(finesse: f64) -> Result<f64> {
    if !(finesse.is_finite() && finesse > 1.0) {
        return Err(domain(format!("finesse must exceed 1, got {finesse}")));
    }
    let t = (PI / (2.0 * finesse)).sin();
    let root = (1.0 + t * t).sqrt();
    let u = root - t;
    // 1 − u = t − t²/(1 + √(1+t²))
    let one_minus_u = t - t * t / (1.0 + root);
    let l = one_minus_u * (1.0 + u) * (1.0 + u * u);
    Ok(l / PPM)
}

/// `Q = 2LF/λ`.
pub fn q_from_finesse(finesse: f64, length_um: f64, lambda: Wavelength) -> f64 {
    2.0 * length_um * finesse / lambda.um()
}

/// `Q = ν/Δν` with the linewidth in MHz.
pub fn q_from_linewidth(lambda: Wavelength, fwhm_mhz: f64) -> Result<f64> {
    if !(fwhm_mhz.is_finite() && fwhm_mhz > 0.0) {
        return Err(domain(format!("linewidth must be positive, got {fwhm_mhz} MHz")));
    }
    Ok(lambda.frequency_thz() * 1e6 / fwhm_mhz)
}

/// Optical enhancement `Υ = Q/(V/λ³)·n⁻³`.
pub fn enhancement(quality: f64, volume_cubic_wavelengths: f64, medium_index: f64) -> Result<f64> {
    if !(quality > 0.0 && volume_cubic_wavelengths > 0.0 && medium_index > 0.0) {
        return Err(domain("Q, V and n must be positive"));
    }
    Ok(quality / volume_cubic_wavelengths / medium_index.powi(3))
}

/// Purcell factor `P = 3Υη/4π²`.
pub fn purcell(enhancement: f64, branching_ratio: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&branching_ratio) {
        return Err(domain(format!("branching ratio must lie in [0, 1], got {branching_ratio}")));
    }
    if !(enhancement >= 0.0) {
        return Err(domain("enhancement must be non-negative"));
    }
    Ok(enhancement * branching_ratio / PURCELL_SCALE)
}

/// Gaussian power outside a circular aperture of radius `a` for spot radius
/// `w`: `exp(−2a²/w²)`, in ppm per reflection. Fractions below 1e-80 are
/// reported as 0.
pub fn clipping_loss(spot_radius_um: f64, aperture_radius_um: f64) -> Result<f64> {
    if !(spot_radius_um > 0.0 && aperture_radius_um > 0.0) {
        return Err(domain("spot and aperture radii must be positive"));
    }
    let frac = (-2.0 * (aperture_radius_um / spot_radius_um).powi(2)).exp();
    Ok(if frac < 1e-80 { 0.0 } else { frac / PPM })
}

/// Total integrated scatter `(4πσ/λ)²` in ppm per reflection.
pub fn scattering_loss(roughness_rms_nm: f64, lambda: Wavelength) -> Result<f64> {
    if !(roughness_rms_nm >= 0.0) {
        return Err(domain("roughness must be non-negative"));
    }
    Ok((4.0 * PI * roughness_rms_nm / lambda.nm()).powi(2) / PPM)
}

/// Figures of merit for one cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub finesse: f64,
    pub quality: f64,
    pub enhancement: f64,
    pub purcell: f64,
    pub branching_ratio: f64,
    pub medium_index: f64,
}

impl EnhancementReport {
    /// Builds the report from a finesse, with `Q = 2LF/λ`.
    pub fn from_finesse(
        finesse: f64,
        length_um: f64,
        lambda: Wavelength,
        volume_cubic_wavelengths: f64,
        medium_index: f64,
        branching_ratio: f64,
    ) -> Result<Self> {
        let quality = q_from_finesse(finesse, length_um, lambda);
        Self::from_quality(finesse, quality, volume_cubic_wavelengths, medium_index, branching_ratio)
    }

    pub fn from_quality(
        finesse: f64,
        quality: f64,
        volume_cubic_wavelengths: f64,
        medium_index: f64,
        branching_ratio: f64,
    ) -> Result<Self> {
        if !(finesse >= 0.0) {
            return Err(domain("finesse must be non-negative"));
        }
        let enhancement = enhancement(quality, volume_cubic_wavelengths, medium_index)?;
        let purcell = purcell(enhancement, branching_ratio)?;
        Ok(Self { finesse, quality, enhancement, purcell, branching_ratio, medium_index })
    }

    /// Checks an independently measured Q against `2LF/λ`.
    pub fn check_quality(&self, length_um: f64, lambda: Wavelength, rel_tol: f64) -> Result<()> {
        let expected = q_from_finesse(self.finesse, length_um, lambda);
        let rel = (self.quality - expected).abs() / expected;
        if rel > rel_tol {
            return Err(domain(format!(
                "Q = {:.4e} inconsistent with 2LF/λ = {expected:.4e} (relative gap {rel:.3})",
                self.quality
            )));
        }
        Ok(())
    }
}

/// Excess loss from mirror-shape deviation, `A·exp((L − L₀)/s)` ppm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeExcessLaw {
    pub amplitude_ppm: f64,
    pub onset_um: f64,
    pub scale_um: f64,
}

impl ShapeExcessLaw {
    pub fn evaluate(&self, length_um: f64) -> f64 {
        self.amplitude_ppm * ((length_um - self.onset_um) / self.scale_um).exp()
    }

    /// Calibrates the law so the total loss `base(L) + law(L)` passes
    /// through both anchors `(L, ppm)`; `L₀` is pinned at the longer anchor.
    pub fn calibrate<F: Fn(f64) -> Result<f64>>(base: F, short: (f64, f64), long: (f64, f64)) -> Result<Self> {
        let (l_short, total_short) = short;
        let (l_long, total_long) = long;
        if !(l_short < l_long) {
            return Err(domain("calibration anchors must be ordered by length"));
        }
        let excess_short = total_short - base(l_short)?;
        let excess_long = total_long - base(l_long)?;
        if !(excess_short > 0.0 && excess_long > excess_short) {
            return Err(domain(format!(
                "anchors leave no growing shape excess (short {excess_short:.3} ppm, long {excess_long:.3} ppm)"
            )));
        }
        let scale_um = (l_long - l_short) / (excess_long / excess_short).ln();
        Ok(Self { amplitude_ppm: excess_long, onset_um: l_long, scale_um })
    }
}

/// Length-dependent loss model for a finesse-vs-length sweep. The mirror
/// losses (transmission, coating excess, roughness, aperture) come from the
/// cavity template.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthLossModel {
    pub absorption_ppm: f64,
    pub shape: Option<ShapeExcessLaw>,
    /// Constant extra loss added to the shape-excess channel.
    pub additional_excess_ppm: f64,
    /// Lengths beyond this are dropped with a warning (no observable
    /// resonance).
    pub max_observable_um: Option<f64>,
}

impl Default for LengthLossModel {
    fn default() -> Self {
        Self { absorption_ppm: 0.0, shape: None, additional_excess_ppm: 0.0, max_observable_um: None }
    }
}

impl LengthLossModel {
    /// Loss budget of `template` rescaled to effective length `length_um`.
    pub fn budget(&self, template: &CavityGeometry, lambda: Wavelength, length_um: f64) -> Result<LossBudget> {
        let geom = template.at_effective_length(length_um)?;
        let mut b = LossBudget::for_cavity(&geom, lambda, self.absorption_ppm)?;
        b.shape_excess_ppm += self.additional_excess_ppm;
        if let Some(law) = self.shape {
            b.shape_excess_ppm += law.evaluate(length_um);
        }
        b.validate()?;
        Ok(b)
    }

    /// Calibrates the shape-excess law against a short-length finesse and a
    /// long-length total loss.
    pub fn calibrated(
        template: &CavityGeometry,
        lambda: Wavelength,
        absorption_ppm: f64,
        short_finesse: (f64, f64),
        long_loss: (f64, f64),
    ) -> Result<Self> {
        let base = Self { absorption_ppm, ..Self::default() };
        let short = (short_finesse.0, loss_from_finesse(short_finesse.1)?);
        let law =
            ShapeExcessLaw::calibrate(|l| base.budget(template, lambda, l).map(|b| b.total_ppm()), short, long_loss)?;
        Ok(Self { shape: Some(law), ..base })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub length_um: f64,
    pub finesse: f64,
    pub total_ppm: f64,
    pub budget: LossBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepWarning {
    /// Points at or beyond the stability edge `αR` were dropped.
    BeyondStability { from_um: f64, alpha_roc_um: f64, dropped: usize },
    /// Points beyond the observable-resonance limit were dropped.
    BeyondObservable { from_um: f64, limit_um: f64, dropped: usize },
}

impl std::fmt::Display for SweepWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepWarning::BeyondStability { from_um, alpha_roc_um, dropped } => write!(
                f,
                "sweep truncated: {dropped} point(s) from {from_um:.3} µm reach the stability edge alpha*R = {alpha_roc_um:.3} µm"
            ),
            SweepWarning::BeyondObservable { from_um, limit_um, dropped } => write!(
                f,
                "sweep truncated: {dropped} point(s) from {from_um:.3} µm lie beyond the observable-resonance limit {limit_um:.3} µm"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub warnings: Vec<SweepWarning>,
}

impl SweepResult {
    pub fn is_non_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].finesse <= w[0].finesse)
    }
}

/// Evenly spaced lengths from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Finesse and total loss as a function of effective cavity length.
pub fn finesse_vs_length(
    template: &CavityGeometry,
    lambda: Wavelength,
    lengths_um: &[f64],
    model: &LengthLossModel,
    exec: Execution,
) -> Result<SweepResult> {
    let alpha_roc = template.topology.alpha() * template.roc_um();
    let mut warnings = Vec::new();
    let mut kept: Vec<f64> = Vec::with_capacity(lengths_um.len());
    let unstable: Vec<f64> = lengths_um.iter().copied().filter(|&l| l >= alpha_roc).collect();
    let mut beyond_obs = Vec::new();
    for &l in lengths_um {
        if l >= alpha_roc {
            continue;
        }
        match model.max_observable_um {
            Some(limit) if l > limit => beyond_obs.push(l),
            _ => kept.push(l),
        }
    }
    if let Some(limit) = model.max_observable_um {
        if !beyond_obs.is_empty() {
            warnings.push(SweepWarning::BeyondObservable {
                from_um: beyond_obs.iter().copied().fold(f64::INFINITY, f64::min),
                limit_um: limit,
                dropped: beyond_obs.len(),
            });
        }
    }
    if !unstable.is_empty() {
        warnings.push(SweepWarning::BeyondStability {
            from_um: unstable.iter().copied().fold(f64::INFINITY, f64::min),
            alpha_roc_um: alpha_roc,
            dropped: unstable.len(),
        });
    }
    let points = exec
        .map(&kept, |&l| {
            let budget = model.budget(template, lambda, l)?;
            let f = budget.finesse()?;
            Ok(SweepPoint { length_um: l, finesse: f.exact, total_ppm: budget.total_ppm(), budget })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points, warnings })
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn finesse_inverse_round_trip(log_f in 2.0f64..7.0) {
            let f = 10f64.powf(log_f);
            let l = loss_from_finesse(f).unwrap();
            let back = finesse_from_loss(l).unwrap().exact;
            prop_assert!((back / f - 1.0).abs() < 1e-9, "{} vs {}", back, f);
        }

        #[test]
        fn scattering_is_quadratic(sigma in 0.001f64..5.0, nm in 400.0f64..2000.0) {
            let lam = Wavelength::from_nm(nm).unwrap();
            let one = scattering_loss(sigma, lam).unwrap();
            let two = scattering_loss(2.0 * sigma, lam).unwrap();
            prop_assert!((two / one - 4.0).abs() < 1e-12);
        }

        #[test]
        fn enhancement_is_homogeneous(q in 1e3f64..1e8, v in 1.0f64..1e3, k in 0.1f64..10.0, n in 1.0f64..3.5) {
            let base = enhancement(q, v, 1.0).unwrap();
            prop_assert!((enhancement(k * q, k * v, 1.0).unwrap() / base - 1.0).abs() < 1e-12);
            prop_assert!((enhancement(q, v, n).unwrap() * n.powi(3) / base - 1.0).abs() < 1e-12);
        }

        #[test]
        fn quality_equals_finesse_at_half_wavelength(f in 10.0f64..1e7, nm in 400.0f64..2000.0) {
            let lam = Wavelength::from_nm(nm).unwrap();
            prop_assert!((q_from_finesse(f, lam.um() / 2.0, lam) / f - 1.0).abs() < 1e-12);
        }
    }
}
