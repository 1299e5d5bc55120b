//! Paraxial Gaussian-mode geometry of plano-concave (PC) and symmetric
//! concave-concave (CC) Fabry-Pérot cavities.
//!
//! Every mode-geometry quantity is evaluated on the *effective* cavity length,
//! i.e. the geometric mirror spacing plus the field penetration into both
//! Bragg stacks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::roots;
use crate::C_UM_THZ;

/// Field penetration into each Bragg mirror, in units of the wavelength.
pub const DEFAULT_PENETRATION_WAVELENGTHS: f64 = 0.8;

/// Vacuum wavelength.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn from_nm(nm: f64) -> Result<Self> {
        if !(nm.is_finite() && nm > 0.0) {
            return Err(domain(format!("wavelength must be positive, got {nm} nm")));
        }
        Ok(Self(nm))
    }

    pub fn from_um(um: f64) -> Result<Self> {
        Self::from_nm(um * 1e3)
    }

    pub fn from_frequency_thz(nu_thz: f64) -> Result<Self> {
        if !(nu_thz.is_finite() && nu_thz > 0.0) {
            return Err(domain(format!("frequency must be positive, got {nu_thz} THz")));
        }
        Self::from_um(C_UM_THZ / nu_thz)
    }

    pub fn nm(self) -> f64 {
        self.0
    }

    pub fn um(self) -> f64 {
        self.0 * 1e-3
    }

    /// Optical frequency ν = c/λ in THz.
    pub fn frequency_thz(self) -> f64 {
        C_UM_THZ / self.um()
    }
}

/// Mirror surface figure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    Flat,
    Concave { roc_um: f64 },
}

/// Geometry and optical losses of a single mirror.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    pub surface: Surface,
    pub depth_um: f64,
    /// Explicit lateral aperture; when absent it is derived from the
    /// spherical-cap relation between ROC and depth.
    pub aperture_radius_um: Option<f64>,
    pub transmission_ppm: f64,
    pub excess_loss_ppm: f64,
    pub roughness_rms_nm: f64,
}

impl MirrorSpec {
    pub fn flat() -> Self {
        Self {
            surface: Surface::Flat,
            depth_um: 0.0,
            aperture_radius_um: None,
            transmission_ppm: 0.0,
            excess_loss_ppm: 0.0,
            roughness_rms_nm: 0.0,
        }
    }

    pub fn concave(roc_um: f64) -> Result<Self> {
        let m = Self { surface: Surface::Concave { roc_um }, ..Self::flat() };
        m.validate()?;
        Ok(m)
    }

    pub fn with_depth(mut self, depth_um: f64) -> Result<Self> {
        self.depth_um = depth_um;
        self.validate()?;
        Ok(self)
    }

    pub fn with_aperture(mut self, radius_um: f64) -> Result<Self> {
        self.aperture_radius_um = Some(radius_um);
        self.validate()?;
        Ok(self)
    }

    pub fn with_losses(mut self, transmission_ppm: f64, excess_loss_ppm: f64, roughness_rms_nm: f64) -> Result<Self> {
        self.transmission_ppm = transmission_ppm;
        self.excess_loss_ppm = excess_loss_ppm;
        self.roughness_rms_nm = roughness_rms_nm;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if let Surface::Concave { roc_um } = self.surface {
            if !(roc_um.is_finite() && roc_um > 0.0) {
                return Err(domain(format!("mirror ROC must be positive, got {roc_um} µm")));
            }
            if !(self.depth_um >= 0.0 && self.depth_um < roc_um) {
                return Err(domain(format!(
                    "mirror depth must satisfy 0 <= depth < ROC, got depth {} µm for ROC {roc_um} µm",
                    self.depth_um
                )));
            }
        } else if self.depth_um != 0.0 {
            return Err(domain("flat mirror cannot have a depth"));
        }
        if let Some(a) = self.aperture_radius_um {
            if !(a.is_finite() && a > 0.0) {
                return Err(domain(format!("aperture radius must be positive, got {a} µm")));
            }
        }
        for (name, v) in [
            ("transmission", self.transmission_ppm),
            ("excess loss", self.excess_loss_ppm),
            ("roughness", self.roughness_rms_nm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn roc_um(&self) -> Option<f64> {
        match self.surface {
            Surface::Flat => None,
            Surface::Concave { roc_um } => Some(roc_um),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.surface, Surface::Flat)
    }

    /// Resonator g-parameter `1 − L/R`; exactly 1 for a flat mirror.
    pub fn g(&self, length_um: f64) -> f64 {
        match self.surface {
            Surface::Flat => 1.0,
            Surface::Concave { roc_um } => 1.0 - length_um / roc_um,
        }
    }

    /// Lateral aperture radius: explicit if set, otherwise the cap radius for
    /// the mirror's ROC and depth. `None` for flat mirrors or zero depth.
    pub fn aperture_radius(&self) -> Option<f64> {
        if self.aperture_radius_um.is_some() {
            return self.aperture_radius_um;
        }
        match self.surface {
            Surface::Concave { roc_um } if self.depth_um > 0.0 => {
                crate::profile::aperture_from_cap(roc_um, self.depth_um).ok()
            }
            _ => None,
        }
    }
}

/// Cavity topology; `alpha` is 1 for PC and 2 for CC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "pc")]
    PlanoConcave,
    #[serde(rename = "cc")]
    ConcaveConcave,
}

impl Topology {
    pub fn alpha(self) -> f64 {
        match self {
            Topology::PlanoConcave => 1.0,
            Topology::ConcaveConcave => 2.0,
        }
    }

    pub fn curved_mirrors(self) -> usize {
        match self {
            Topology::PlanoConcave => 1,
            Topology::ConcaveConcave => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Topology::PlanoConcave => "pc",
            Topology::ConcaveConcave => "cc",
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" | "plano-concave" => Ok(Topology::PlanoConcave),
            "cc" | "concave-concave" => Ok(Topology::ConcaveConcave),
            other => Err(domain(format!("unknown topology '{other}', expected pc or cc"))),
        }
    }
}

/// Hermite-Gaussian transverse mode index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub p: u32,
    pub q: u32,
}

impl ModeIndex {
    pub const FUNDAMENTAL: ModeIndex = ModeIndex { p: 0, q: 0 };

    pub fn new(p: u32, q: u32) -> Self {
        Self { p, q }
    }

    /// Transverse order `p + q`.
    pub fn order(self) -> u32 {
        self.p + self.q
    }
}

/// Two-mirror resonator description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    pub topology: Topology,
    /// Curved mirror.
    pub mirror_a: MirrorSpec,
    /// Flat mirror for PC, second curved mirror for CC.
    pub mirror_b: MirrorSpec,
    pub geometric_spacing_um: f64,
    pub penetration_per_mirror_um: f64,
    pub medium_index: f64,
}

/// Effective cavity length: geometric spacing plus penetration into both
/// mirrors.
pub fn effective_length(geometric_spacing_um: f64, penetration_per_mirror_um: f64) -> f64 {
    geometric_spacing_um + 2.0 * penetration_per_mirror_um
}

/// Default per-mirror penetration depth, 0.8 λ, in µm.
pub fn default_penetration_um(lambda: Wavelength) -> f64 {
    DEFAULT_PENETRATION_WAVELENGTHS * lambda.um()
}

impl CavityGeometry {
    pub fn new(
        topology: Topology,
        mirror_a: MirrorSpec,
        mirror_b: MirrorSpec,
        geometric_spacing_um: f64,
        penetration_per_mirror_um: f64,
    ) -> Result<Self> {
        if !(geometric_spacing_um.is_finite() && geometric_spacing_um > 0.0) {
            return Err(domain(format!("mirror spacing must be positive, got {geometric_spacing_um} µm")));
        }
        if !(penetration_per_mirror_um.is_finite() && penetration_per_mirror_um >= 0.0) {
            return Err(domain("penetration depth must be non-negative"));
        }
        match topology {
            Topology::PlanoConcave => {
                if mirror_a.is_flat() || !mirror_b.is_flat() {
                    return Err(domain("plano-concave cavity needs a curved mirror_a and a flat mirror_b"));
                }
            }
            Topology::ConcaveConcave => {
                let (ra, rb) = match (mirror_a.roc_um(), mirror_b.roc_um()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(domain("concave-concave cavity needs two curved mirrors")),
                };
                if (ra - rb).abs() > 1e-12 * ra.max(rb) {
                    return Err(domain("only symmetric concave-concave cavities are supported"));
                }
            }
        }
        Ok(Self { topology, mirror_a, mirror_b, geometric_spacing_um, penetration_per_mirror_um, medium_index: 1.0 })
    }

    /// Cavity with the given curvature and *effective* length (no separate
    /// penetration term), lossless mirrors.
    pub fn with_effective_length(topology: Topology, roc_um: f64, length_um: f64) -> Result<Self> {
        let curved = MirrorSpec::concave(roc_um)?;
        let b = match topology {
            Topology::PlanoConcave => MirrorSpec::flat(),
            Topology::ConcaveConcave => curved,
        };
        Self::new(topology, curved, b, length_um, 0.0)
    }

    /// Cavity built from a geometric mirror spacing, adding the default 0.8 λ
    /// penetration per mirror.
    pub fn from_spacing(topology: Topology, roc_um: f64, spacing_um: f64, lambda: Wavelength) -> Result<Self> {
        let mut g = Self::with_effective_length(topology, roc_um, spacing_um)?;
        g.penetration_per_mirror_um = default_penetration_um(lambda);
        Ok(g)
    }

    pub fn with_medium_index(mut self, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(domain(format!("medium index must be positive, got {n}")));
        }
        self.medium_index = n;
        Ok(self)
    }

    /// Returns a copy with the effective length set to `length_um` (the
    /// penetration term is kept, the geometric spacing adjusted).
    pub fn at_effective_length(&self, length_um: f64) -> Result<Self> {
        let spacing = length_um - 2.0 * self.penetration_per_mirror_um;
        let mut g = *self;
        if !(spacing > 0.0) {
            return Err(domain(format!("effective length {length_um} µm leaves no positive mirror spacing")));
        }
        g.geometric_spacing_um = spacing;
        Ok(g)
    }

    pub fn effective_length(&self) -> f64 {
        effective_length(self.geometric_spacing_um, self.penetration_per_mirror_um)
    }

    /// ROC of the curved mirror.
    pub fn roc_um(&self) -> f64 {
        self.mirror_a.roc_um().expect("validated: mirror_a is curved")
    }

    pub fn g_factors(&self) -> (f64, f64) {
        let l = self.effective_length();
        (self.mirror_a.g(l), self.mirror_b.g(l))
    }

    pub fn curved_mirrors(&self) -> impl Iterator<Item = &MirrorSpec> {
        [&self.mirror_a, &self.mirror_b].into_iter().filter(|m| !m.is_flat())
    }

    /// Distance from the waist to each curved mirror.
    pub fn waist_to_curved_mirror_um(&self) -> f64 {
        match self.topology {
            Topology::PlanoConcave => self.effective_length(),
            Topology::ConcaveConcave => 0.5 * self.effective_length(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub g_product: f64,
    pub is_stable: bool,
}

/// Standard two-mirror stability criterion `0 ≤ g₁g₂ ≤ 1`.
pub fn stability(geom: &CavityGeometry) -> Stability {
    let (g1, g2) = geom.g_factors();
    let g_product = g1 * g2;
    Stability { g_product, is_stable: (0.0..=1.0).contains(&g_product) }
}

/// `αRL − L²`, which must be strictly positive for a confined mode.
fn confinement(geom: &CavityGeometry) -> Result<f64> {
    let l = geom.effective_length();
    let st = stability(geom);
    if !st.is_stable {
        return Err(Error::Unstable { g_product: st.g_product, condition: "0 <= g1*g2 <= 1 violated" });
    }
    let d = geom.topology.alpha() * geom.roc_um() * l - l * l;
    if !(d > 0.0) {
        return Err(Error::Unstable { g_product: st.g_product, condition: "marginal geometry: alpha*R*L - L^2 <= 0" });
    }
    Ok(d)
}

/// Mode waist `w₀ = sqrt((λ/πα)·sqrt(αRL − L²))` in µm, with λ the
/// wavelength in the cavity medium.
pub fn beam_waist(geom: &CavityGeometry, lambda: Wavelength) -> Result<f64> {
    let d = confinement(geom)?;
    let lam = lambda.um() / geom.medium_index;
    Ok((lam / (PI * geom.topology.alpha()) * d.sqrt()).sqrt())
}

/// Rayleigh range `z_r = π w₀²/λ` in µm.
pub fn rayleigh_range(geom: &CavityGeometry, lambda: Wavelength) -> Result<f64> {
    let w0 = beam_waist(geom, lambda)?;
    Ok(PI * w0 * w0 / (lambda.um() / geom.medium_index))
}

/// Wavefront curvature of the Gaussian beam at some distance from the waist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Wavefront {
    /// At the waist the phase front is planar (infinite ROC).
    Planar,
    Curved {
        roc_um: f64,
    },
}

impl Wavefront {
    pub fn roc_um(self) -> Option<f64> {
        match self {
            Wavefront::Planar => None,
            Wavefront::Curved { roc_um } => Some(roc_um),
        }
    }
}

/// Spot radius `w(z) = w₀·sqrt(1 + (z/z_r)²)` and wavefront curvature
/// `R(z) = z·[1 + (z_r/z)²]` at axial distance `z_um` from the waist.
pub fn spot_size_and_wavefront(geom: &CavityGeometry, lambda: Wavelength, z_um: f64) -> Result<(f64, Wavefront)> {
    let w0 = beam_waist(geom, lambda)?;
    let zr = PI * w0 * w0 / (lambda.um() / geom.medium_index);
    let w = w0 * (1.0 + (z_um / zr).powi(2)).sqrt();
    let front =
        if z_um == 0.0 { Wavefront::Planar } else { Wavefront::Curved { roc_um: z_um * (1.0 + (zr / z_um).powi(2)) } };
    Ok((w, front))
}

/// Spot radius on the curved mirror(s).
pub fn spot_on_curved_mirror(geom: &CavityGeometry, lambda: Wavelength) -> Result<f64> {
    spot_size_and_wavefront(geom, lambda, geom.waist_to_curved_mirror_um()).map(|(w, _)| w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeVolume {
    pub cubic_um: f64,
    /// Volume in units of λ³ (vacuum wavelength).
    pub cubic_wavelengths: f64,
}

/// Mode volume `V = (π/4)·w₀²·L`.
pub fn mode_volume(geom: &CavityGeometry, lambda: Wavelength) -> Result<ModeVolume> {
    let w0 = beam_waist(geom, lambda)?;
    let cubic_um = PI / 4.0 * w0 * w0 * geom.effective_length();
    Ok(ModeVolume { cubic_um, cubic_wavelengths: cubic_um / lambda.um().powi(3) })
}

/// Free spectral range `c/2L` in THz for an effective length in µm.
pub fn free_spectral_range(length_um: f64) -> f64 {
    C_UM_THZ / (2.0 * length_um)
}

/// One-way Gouy phase `ζ` for the given topology and effective length:
/// `arccos(sqrt(1 − L/R))` for PC and `arccos(1 − L/R)` for symmetric CC.
pub fn gouy_phase(topology: Topology, roc_um: f64, length_um: f64) -> Result<f64> {
    let g = 1.0 - length_um / roc_um;
    let zeta = match topology {
        Topology::PlanoConcave => {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Unstable { g_product: g, condition: "Gouy phase undefined: need 0 < L < R" });
            }
            g.sqrt().acos()
        }
        Topology::ConcaveConcave => {
            if !(g > -1.0 && g < 1.0) {
                return Err(Error::Unstable { g_product: g * g, condition: "Gouy phase undefined: need 0 < L < 2R" });
            }
            g.acos()
        }
    };
    Ok(zeta)
}

/// Frequency offset in THz between TEM₀₀ and a TEM_{pq} mode of the given
/// transverse order, `Δν = (p+q)·c/(2πL)·ζ`.
pub fn transverse_mode_spacing(geom: &CavityGeometry, order: u32) -> Result<f64> {
    let l = geom.effective_length();
    let zeta = gouy_phase(geom.topology, geom.roc_um(), l)?;
    Ok(order as f64 * C_UM_THZ / (2.0 * PI * l * geom.medium_index) * zeta)
}

/// Derived quantities of the fundamental mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    pub length_um: f64,
    pub waist_um: f64,
    pub rayleigh_um: f64,
    pub fsr_thz: f64,
    /// Δν_{p+q}/(p+q).
    pub transverse_spacing_thz: f64,
    pub volume: ModeVolume,
}

impl GaussianMode {
    pub fn compute(geom: &CavityGeometry, lambda: Wavelength) -> Result<Self> {
        let waist_um = beam_waist(geom, lambda)?;
        let lam = lambda.um() / geom.medium_index;
        let length_um = geom.effective_length();
        Ok(Self {
            length_um,
            waist_um,
            rayleigh_um: PI * waist_um * waist_um / lam,
            fsr_thz: free_spectral_range(length_um) / geom.medium_index,
            transverse_spacing_thz: transverse_mode_spacing(geom, 1)?,
            volume: mode_volume(geom, lambda)?,
        })
    }
}

/// Solution of the implicit length equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthSolution {
    /// Smallest root in the bracket.
    pub length_um: f64,
    /// All roots found, ascending. More than one root means the splitting is
    /// compatible with several lengths; the smallest is reported.
    pub roots_um: Vec<f64>,
}

impl LengthSolution {
    pub fn root_count(&self) -> usize {
        self.roots_um.len()
    }
}

/// Residual of the length equation `L − R(1 − cos²(kL))` (PC) or
/// `L − R(1 − cos(kL))` (CC), with `k = 2πΔν/(c·(p+q))`.
pub fn length_equation_residual(
    topology: Topology,
    roc_um: f64,
    splitting_thz: f64,
    order: u32,
    length_um: f64,
) -> f64 {
    let k = 2.0 * PI * splitting_thz / (C_UM_THZ * order as f64);
    let c = (k * length_um).cos();
    let rhs = match topology {
        Topology::PlanoConcave => roc_um * (1.0 - c * c),
        Topology::ConcaveConcave => roc_um * (1.0 - c),
    };
    length_um - rhs
}

/// Default search bracket `(10⁻⁶·αR, αR)` for the length inversion.
pub fn default_length_bracket(topology: Topology, roc_um: f64) -> (f64, f64) {
    let hi = topology.alpha() * roc_um;
    (1e-6 * hi, hi * (1.0 - 1e-12))
}

/// Effective cavity length from the frequency splitting between TEM₀₀ at
/// `lambda_00` and a mode of transverse order `order` at `lambda_pq`.
///
/// The implicit equation is solved by scanning the bracket for sign changes
/// and bisecting each; plain fixed-point iteration is not used because it
/// diverges near typical operating points.
pub fn length_from_mode_splitting(
    topology: Topology,
    roc_um: f64,
    lambda_00: Wavelength,
    lambda_pq: Wavelength,
    order: u32,
    bracket_um: (f64, f64),
) -> Result<LengthSolution> {
    if order == 0 {
        return Err(domain("transverse order must be at least 1"));
    }
    if lambda_00 == lambda_pq {
        return Err(domain("mode wavelengths must differ"));
    }
    let splitting = (lambda_pq.frequency_thz() - lambda_00.frequency_thz()).abs();
    length_from_splitting_thz(topology, roc_um, splitting, order, bracket_um)
}

/// As [`length_from_mode_splitting`], with the splitting given directly in THz.
pub fn length_from_splitting_thz(
    topology: Topology,
    roc_um: f64,
    splitting_thz: f64,
    order: u32,
    bracket_um: (f64, f64),
) -> Result<LengthSolution> {
    if !(roc_um.is_finite() && roc_um > 0.0) {
        return Err(domain(format!("ROC must be positive, got {roc_um} µm")));
    }
    if order == 0 || !(splitting_thz.is_finite() && splitting_thz > 0.0) {
        return Err(domain("splitting must be positive and order at least 1"));
    }
    let (lo, hi) = bracket_um;
    let max = topology.alpha() * roc_um;
    if !(lo > 0.0 && lo < hi && hi <= max) {
        return Err(domain(format!("bracket ({lo}, {hi}) µm must lie within (0, {max}] µm")));
    }
    // the residual is periodic in kL; only the branch with a Gouy phase in
    // (0, π/2] (PC) or (0, π] (CC) is physical
    let k = 2.0 * PI * splitting_thz / (C_UM_THZ * order as f64);
    let gouy_max = match topology {
        Topology::PlanoConcave => 0.5 * PI,
        Topology::ConcaveConcave => PI,
    };
    let hi = hi.min(gouy_max / k);
    if lo >= hi {
        let f = |l: f64| length_equation_residual(topology, roc_um, splitting_thz, order, l);
        return Err(Error::NoSolution { lo, hi: bracket_um.1, f_lo: f(lo), f_hi: f(bracket_um.1) });
    }
    let roots_um =
        roots::find_smallest_root(|l| length_equation_residual(topology, roc_um, splitting_thz, order, l), lo, hi)?;
    Ok(LengthSolution { length_um: roots_um[0], roots_um })
}
