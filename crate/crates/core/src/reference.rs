//! Measured reference values for the O-band micromirror platform.
//!
//! Every number that comes from the characterized devices lives here, each
//! tagged with what it describes, so that reports and tests cite one place.

use serde::Serialize;

use crate::error::Result;
use crate::loss::{self, LengthLossModel};
use crate::optics::{CavityGeometry, MirrorSpec, Topology, Wavelength};

/// One characterized cavity assembly. Values in parentheses are the quoted
/// uncertainties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceCavity {
    pub name: &'static str,
    pub topology: Topology,
    pub wavelength_nm: f64,
    pub roc_um: f64,
    pub roc_sigma_um: f64,
    /// Effective length, penetration included.
    pub length_um: f64,
    pub length_sigma_um: f64,
    pub waist_um: f64,
    pub waist_sigma_um: f64,
    pub volume_lambda3: f64,
    pub volume_sigma_lambda3: f64,
    pub finesse: f64,
    pub finesse_sigma: f64,
    pub quality: f64,
    pub quality_sigma: f64,
    /// Enhancement as printed for the assembly (approximate).
    pub printed_enhancement: f64,
}

impl ReferenceCavity {
    pub fn geometry(&self) -> Result<CavityGeometry> {
        CavityGeometry::with_effective_length(self.topology, self.roc_um, self.length_um)
    }

    pub fn wavelength(&self) -> Wavelength {
        Wavelength::from_nm(self.wavelength_nm).expect("reference wavelengths are positive")
    }
}

/// The four assemblies: short glued PC cavities (PC-f, PC-f2), the
/// piezo-actuated PC cavity (PC-a) and the actuated CC cavity (CC-a).
pub const REFERENCE_CAVITIES: [ReferenceCavity; 4] = [
    ReferenceCavity {
        name: "PC-f",
        topology: Topology::PlanoConcave,
        wavelength_nm: 1276.0,
        roc_um: 69.3,
        roc_sigma_um: 8.3,
        length_um: 8.7,
        length_sigma_um: 0.7,
        waist_um: 3.05,
        waist_sigma_um: 0.16,
        volume_lambda3: 30.8,
        volume_sigma_lambda3: 5.0,
        finesse: 350e3,
        finesse_sigma: 30e3,
        quality: 4.1e6,
        quality_sigma: 0.6e6,
        printed_enhancement: 1.8e5,
    },
    ReferenceCavity {
        name: "PC-f2",
        topology: Topology::PlanoConcave,
        wavelength_nm: 1279.0,
        roc_um: 69.3,
        roc_sigma_um: 8.3,
        length_um: 9.3,
        length_sigma_um: 0.8,
        waist_um: 3.10,
        waist_sigma_um: 0.16,
        volume_lambda3: 33.7,
        volume_sigma_lambda3: 5.0,
        finesse: 330e3,
        finesse_sigma: 20e3,
        quality: 4.1e6,
        quality_sigma: 0.5e6,
        printed_enhancement: 1.6e5,
    },
    ReferenceCavity {
        name: "PC-a",
        topology: Topology::PlanoConcave,
        wavelength_nm: 1280.0,
        roc_um: 105.6,
        roc_sigma_um: 17.1,
        length_um: 18.9,
        length_sigma_um: 0.1,
        waist_um: 4.05,
        waist_sigma_um: 0.18,
        volume_lambda3: 116.7,
        volume_sigma_lambda3: 10.0,
        finesse: 490e3,
        finesse_sigma: 90e3,
        quality: 12.9e6,
        quality_sigma: 2.4e6,
        printed_enhancement: 1.3e5,
    },
    ReferenceCavity {
        name: "CC-a",
        topology: Topology::ConcaveConcave,
        wavelength_nm: 1280.0,
        roc_um: 105.6,
        roc_sigma_um: 17.1,
        length_um: 27.4,
        length_sigma_um: 0.1,
        waist_um: 3.79,
        waist_sigma_um: 0.17,
        volume_lambda3: 148.2,
        volume_sigma_lambda3: 14.0,
        finesse: 180e3,
        finesse_sigma: 10e3,
        quality: 7.1e6,
        quality_sigma: 0.4e6,
        printed_enhancement: 0.5e5,
    },
];

pub fn reference_cavity(name: &str) -> Option<&'static ReferenceCavity> {
    REFERENCE_CAVITIES.iter().find(|c| c.name.eq_ignore_ascii_case(name))
}

/// Note printed with reproduced enhancement values.
pub const ENHANCEMENT_NOTE: &str = "enhancement is computed strictly as Q/(V/lambda^3)/n^3; the printed values \
for the short PC assemblies (~1.8e5, ~1.6e5) do not follow from their own Q and V columns \
(4.1e6/30.8 = 1.33e5, the headline enhancement of the platform)";

/// Headline enhancement of the platform, Q/(V/λ³) of PC-f.
pub const HEADLINE_ENHANCEMENT: f64 = 1.33e5;

/// Short PC cavity mode positions: TEM₀₀ and a first-order mode.
pub const PC_F_FUNDAMENTAL_NM: f64 = 1275.7;
pub const PC_F_FIRST_ORDER_NM: f64 = 1263.5;
/// Effective length inferred for that mode pair and its uncertainty.
pub const PC_F_INFERRED_LENGTH_UM: f64 = 6.7;
pub const PC_F_INFERRED_LENGTH_SIGMA_UM: f64 = 0.5;
/// FSR quoted alongside that length.
pub const PC_F_QUOTED_FSR_THZ: f64 = 20.3;
/// Effective length that reproduces the quoted FSR exactly (c/2L).
pub const PC_F_FSR_LENGTH_UM: f64 = 7.39;

/// Linewidth of the PC-f fundamental and its uncertainty, MHz.
pub const PC_F_LINEWIDTH_MHZ: f64 = 58.0;
pub const PC_F_LINEWIDTH_SIGMA_MHZ: f64 = 2.0;
/// Frequency of the phase modulation used to calibrate the scan axis, MHz.
pub const SIDEBAND_MODULATION_MHZ: f64 = 200.0;
/// Finesse of the shortest cavity and the round-trip loss quoted with it.
pub const PC_F_FINESSE: f64 = 3.5e5;
pub const PC_F_LOSS_PPM: f64 = 18.0;

/// Mirror coating: transmission per mirror and the upper bound of excess
/// coating loss per mirror, ppm.
pub const COATING_TRANSMISSION_PPM: f64 = 5.0;
pub const COATING_EXCESS_MAX_PPM: f64 = 1.0;
/// Total coating-loss range and the finesse bounds quoted for it.
pub const COATING_LOSS_RANGE_PPM: (f64, f64) = (10.0, 12.0);
pub const COATING_FINESSE_BOUNDS: (f64, f64) = (5.2e5, 6.3e5);

/// Mirror families: (ROC µm, depth µm).
pub const SHORT_MIRROR: (f64, f64) = (69.3, 4.5);
pub const ACTUATED_MIRROR: (f64, f64) = (105.6, 8.5);

/// Finesse-vs-length anchors for PC-a: finesse at its nominal length and the
/// total loss near the end of the observable range.
pub const PC_A_SHORT_ANCHOR: (f64, f64) = (18.9, 490e3);
pub const PC_A_LONG_ANCHOR_PPM: (f64, f64) = (39.0, 50.0);
/// No resonance was observable beyond this effective length, µm.
pub const MAX_OBSERVABLE_LENGTH_UM: f64 = 40.0;

/// Loss terms assumed for the PC-a sweep: per-mirror excess coating loss
/// (half the quoted upper bound) and per-mirror roughness.
pub const SWEEP_EXCESS_PER_MIRROR_PPM: f64 = 0.5;
pub const SWEEP_ROUGHNESS_NM: f64 = 0.05;
/// Extra constant loss of the PC-a2 mirror, ppm (not quoted; chosen to
/// separate the two curves).
pub const PC_A2_EXTRA_EXCESS_PPM: f64 = 5.0;

/// Calibrations selectable for finesse-vs-length sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepPreset {
    PcA,
    PcA2,
}

impl std::str::FromStr for SweepPreset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc-a" | "pca" => Ok(SweepPreset::PcA),
            "pc-a2" | "pca2" => Ok(SweepPreset::PcA2),
            other => Err(crate::error::domain(format!("unknown sweep calibration '{other}', expected PC-a or PC-a2"))),
        }
    }
}

impl SweepPreset {
    pub fn name(self) -> &'static str {
        match self {
            SweepPreset::PcA => "PC-a",
            SweepPreset::PcA2 => "PC-a2",
        }
    }

    pub fn wavelength(self) -> Wavelength {
        Wavelength::from_nm(1280.0).expect("positive")
    }

    /// Cavity template (actuated mirror against a flat mirror, coated).
    pub fn template(self) -> Result<CavityGeometry> {
        let (roc, depth) = ACTUATED_MIRROR;
        let curved = MirrorSpec::concave(roc)?.with_depth(depth)?.with_losses(
            COATING_TRANSMISSION_PPM,
            SWEEP_EXCESS_PER_MIRROR_PPM,
            SWEEP_ROUGHNESS_NM,
        )?;
        let flat = MirrorSpec::flat().with_losses(
            COATING_TRANSMISSION_PPM,
            SWEEP_EXCESS_PER_MIRROR_PPM,
            SWEEP_ROUGHNESS_NM,
        )?;
        CavityGeometry::new(Topology::PlanoConcave, curved, flat, PC_A_SHORT_ANCHOR.0, 0.0)
    }

    pub fn model(self) -> Result<LengthLossModel> {
        let template = self.template()?;
        let mut m =
            LengthLossModel::calibrated(&template, self.wavelength(), 0.0, PC_A_SHORT_ANCHOR, PC_A_LONG_ANCHOR_PPM)?;
        m.max_observable_um = Some(MAX_OBSERVABLE_LENGTH_UM);
        if self == SweepPreset::PcA2 {
            m.additional_excess_ppm = PC_A2_EXTRA_EXCESS_PPM;
        }
        Ok(m)
    }

    /// Nominal PC-a finesse implied by the calibration at 18.9 µm.
    pub fn anchored_finesse(self) -> Result<f64> {
        let m = self.model()?;
        let b = m.budget(&self.template()?, self.wavelength(), PC_A_SHORT_ANCHOR.0)?;
        Ok(loss::finesse_from_loss(b.total_ppm())?.exact)
    }
}
