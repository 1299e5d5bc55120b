//! Assignment of resonances to a transverse-mode ladder and length inference.

use serde::{Deserialize, Serialize};

use super::{auto_contrast_threshold, detect_peaks, fit_lorentzian, nm_to_ghz, AxisKind, ResonancePeak, Spectrum};
use crate::error::{domain, Error, Result};
use crate::optics::{self, ModeIndex, Topology, Wavelength};
use crate::C_UM_THZ;

/// A ladder prediction may miss a peak by at most this fraction of the
/// first-order spacing.
const LADDER_TOLERANCE: f64 = 0.05;
const MAX_ORDER: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderAssignment {
    /// Index into the peak list passed in.
    pub peak: usize,
    pub frequency_ghz: f64,
    /// Representative `(N, 0)` of the degenerate family of order N.
    pub mode: ModeIndex,
    /// Longitudinal offset relative to the fundamental.
    pub longitudinal: i32,
    /// Distance from the ladder prediction, GHz.
    pub offset_ghz: f64,
}

/// Length from a second fundamental one FSR above the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsrCheck {
    pub length_um: f64,
    /// `(L_fsr − L)/L`.
    pub relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeLadder {
    pub assignments: Vec<LadderAssignment>,
    /// Effective length from the transverse splitting (smallest root).
    pub length_um: f64,
    /// All lengths compatible with the splitting.
    pub roots_um: Vec<f64>,
    pub spacing_thz: f64,
    pub fsr_thz: f64,
    pub fundamental_ghz: f64,
    /// Largest ladder miss as a fraction of the first-order spacing.
    pub consistency_residual: f64,
    pub fsr_check: Option<FsrCheck>,
    /// Effective length minus the default penetration into both mirrors.
    pub geometric_spacing_um: f64,
}

impl ModeLadder {
    pub fn root_count(&self) -> usize {
        self.roots_um.len()
    }
}

fn peak_frequency_ghz(center: f64, axis: AxisKind) -> Result<f64> {
    match axis {
        AxisKind::FrequencyGhz => Ok(center),
        AxisKind::WavelengthNm => Ok(nm_to_ghz(center)),
        AxisKind::SampleIndex => Err(domain("mode-ladder identification needs a wavelength or frequency axis")),
    }
}

struct Candidate {
    longitudinal: i32,
    order: u32,
    offset: f64,
}

fn nearest(nu: f64, nu0: f64, spacing: f64, fsr: f64) -> Vec<Candidate> {
    let mut c: Vec<Candidate> = (-1..=1)
        .flat_map(|m| {
            (0..=MAX_ORDER).map(move |n| Candidate {
                longitudinal: m,
                order: n,
                offset: nu - (nu0 + m as f64 * fsr + n as f64 * spacing),
            })
        })
        .collect();
    // ties resolve toward the same longitudinal family
    c.sort_by(|a, b| a.offset.abs().total_cmp(&b.offset.abs()).then(a.longitudinal.abs().cmp(&b.longitudinal.abs())));
    c
}

fn solve_length(topology: Topology, roc_um: f64, spacing_ghz: f64) -> Result<optics::LengthSolution> {
    optics::length_from_splitting_thz(
        topology,
        roc_um,
        spacing_ghz * 1e-3,
        1,
        optics::default_length_bracket(topology, roc_um),
    )
}

fn fsr_ghz(length_um: f64) -> f64 {
    optics::free_spectral_range(length_um) * 1e3
}

/// Assigns peaks to the ladder `ν₀₀ + m·FSR + N·Δν₁` and infers the
/// effective length from the first-order splitting.
///
/// The fundamental is the lowest-frequency peak at least half as deep as
/// the deepest one, and the next peak up is taken as order 1. With three or
/// more peaks the splitting is refined by least squares over the orders of
/// the fundamental's longitudinal family.
pub fn identify_mode_ladder(
    peaks: &[ResonancePeak],
    axis: AxisKind,
    topology: Topology,
    roc_um: f64,
    lambda_reference: Wavelength,
) -> Result<ModeLadder> {
    if peaks.len() < 2 {
        return Err(Error::InsufficientModes { needed: 2, found: peaks.len() });
    }
    let freqs = peaks.iter().map(|p| peak_frequency_ghz(p.center, axis)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]));
    let deepest = peaks.iter().map(|p| p.contrast).fold(0.0, f64::max);
    let pos0 = order.iter().position(|&i| peaks[i].contrast >= 0.5 * deepest).expect("the deepest peak qualifies");
    let Some(&i1) = order.get(pos0 + 1) else {
        return Err(Error::InsufficientModes { needed: 2, found: 1 });
    };
    let i0 = order[pos0];
    let nu0 = freqs[i0];
    let mut spacing = freqs[i1] - nu0;

    let mut sol = solve_length(topology, roc_um, spacing)?;
    let mut fsr = fsr_ghz(sol.length_um);

    let assign = |spacing: f64, fsr: f64| -> Result<Vec<LadderAssignment>> {
        let mut out = Vec::with_capacity(peaks.len());
        for &i in &order {
            let cands = nearest(freqs[i], nu0, spacing, fsr);
            let best = &cands[0];
            if best.offset.abs() > LADDER_TOLERANCE * spacing {
                let listing = cands
                    .iter()
                    .take(3)
                    .map(|c| format!("(m={}, N={}, off {:.1} GHz)", c.longitudinal, c.order, c.offset))
                    .collect::<Vec<_>>()
                    .join(", ");
                return Err(Error::AmbiguousLadder {
                    residual: best.offset.abs() / spacing,
                    candidates: format!("peak at {:.3} GHz: {listing}", freqs[i]),
                });
            }
            out.push(LadderAssignment {
                peak: i,
                frequency_ghz: freqs[i],
                mode: ModeIndex::new(best.order, 0),
                longitudinal: best.longitudinal,
                offset_ghz: best.offset,
            });
        }
        Ok(out)
    };

    let mut assignments = assign(spacing, fsr)?;
    let family: Vec<(f64, f64)> = assignments
        .iter()
        .filter(|a| a.longitudinal == 0 && a.mode.order() > 0)
        .map(|a| (a.mode.order() as f64, a.frequency_ghz - nu0))
        .collect();
    if family.len() >= 2 {
        let num: f64 = family.iter().map(|(n, d)| n * d).sum();
        let den: f64 = family.iter().map(|(n, _)| n * n).sum();
        spacing = num / den;
        sol = solve_length(topology, roc_um, spacing)?;
        fsr = fsr_ghz(sol.length_um);
        assignments = assign(spacing, fsr)?;
    }
    let consistency_residual = assignments.iter().map(|a| a.offset_ghz.abs()).fold(0.0, f64::max) / spacing;

    let fsr_check = assignments
        .iter()
        .filter(|a| a.longitudinal == 1 && a.mode.order() == 0)
        .map(|a| {
            let length_um = C_UM_THZ / (2.0 * (a.frequency_ghz - nu0) * 1e-3);
            FsrCheck { length_um, relative_difference: (length_um - sol.length_um) / sol.length_um }
        })
        .next();
    let geometric_spacing_um = sol.length_um - 2.0 * optics::default_penetration_um(lambda_reference);

    Ok(ModeLadder {
        assignments,
        length_um: sol.length_um,
        roots_um: sol.roots_um,
        spacing_thz: spacing * 1e-3,
        fsr_thz: fsr * 1e-3,
        fundamental_ghz: nu0,
        consistency_residual,
        fsr_check,
        geometric_spacing_um,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrumAnalysis {
    /// Lorentzian-refined peaks on a frequency axis (GHz), with assignments.
    pub peaks_ghz: Vec<ResonancePeak>,
    pub ladder: ModeLadder,
}

/// Detects, refines and assigns all resonances of a wavelength or frequency
/// scan.
pub fn analyze_mode_spectrum(
    spec: &Spectrum,
    topology: Topology,
    roc_um: f64,
    lambda_reference: Wavelength,
) -> Result<ModeSpectrumAnalysis> {
    let freq = spec.to_frequency_ghz()?;
    let coarse = detect_peaks(&freq, auto_contrast_threshold(&freq));
    let mut peaks: Vec<ResonancePeak> = coarse
        .iter()
        .map(|p| match fit_lorentzian(&freq, p) {
            Ok(f) => ResonancePeak { center: f.center, fwhm: f.fwhm, contrast: f.contrast.min(1.0), assignment: None },
            Err(_) => *p,
        })
        .collect();
    let ladder = identify_mode_ladder(&peaks, AxisKind::FrequencyGhz, topology, roc_um, lambda_reference)?;
    for a in &ladder.assignments {
        peaks[a.peak].assignment = Some(a.mode);
    }
    Ok(ModeSpectrumAnalysis { peaks_ghz: peaks, ladder })
}

#[cfg(test)]
mod tests {
    use super::super::{ladder_resonances, synthesize_scan, AxisSpec, ScanConfig};
    use super::*;
    use crate::optics::CavityGeometry;
    use crate::reference;

    fn peak(center: f64, contrast: f64) -> ResonancePeak {
        ResonancePeak { center, fwhm: 0.01, contrast, assignment: None }
    }

    fn nm(x: f64) -> Wavelength {
        Wavelength::from_nm(x).unwrap()
    }

    #[test]
    fn short_cavity_mode_pair() {
        let peaks = [peak(reference::PC_F_FUNDAMENTAL_NM, 0.8), peak(reference::PC_F_FIRST_ORDER_NM, 0.5)];
        let l = identify_mode_ladder(&peaks, AxisKind::WavelengthNm, Topology::PlanoConcave, 69.3, nm(1276.0)).unwrap();
        assert!((l.length_um - 6.6).abs() < 0.05, "{}", l.length_um);
        assert!((l.length_um - reference::PC_F_INFERRED_LENGTH_UM).abs() <= reference::PC_F_INFERRED_LENGTH_SIGMA_UM);
        assert_eq!(l.assignments.iter().find(|a| a.peak == 0).unwrap().mode.order(), 0);
        assert_eq!(l.assignments.iter().find(|a| a.peak == 1).unwrap().mode.order(), 1);
    }

    #[test]
    fn single_peak_is_insufficient() {
        let err = identify_mode_ladder(
            &[peak(1275.7, 0.8)],
            AxisKind::WavelengthNm,
            Topology::PlanoConcave,
            69.3,
            nm(1276.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientModes { needed: 2, found: 1 }));
    }

    #[test]
    fn exact_ladder_recovers_length() {
        let g = CavityGeometry::with_effective_length(Topology::PlanoConcave, 105.6, 18.9).unwrap();
        let res = ladder_resonances(&g, nm(1280.0), 2, 0..=0, 1000.0, 0.8, 0.7).unwrap();
        let peaks: Vec<ResonancePeak> = res.iter().map(|r| peak(r.frequency_ghz, r.contrast)).collect();
        let l =
            identify_mode_ladder(&peaks, AxisKind::FrequencyGhz, Topology::PlanoConcave, 105.6, nm(1280.0)).unwrap();
        assert!((l.length_um / 18.9 - 1.0).abs() < 1e-9, "{}", l.length_um);
        assert!(l.consistency_residual < 1e-9);
        assert!((l.geometric_spacing_um - (18.9 - 1.6 * 1.28)).abs() < 1e-6);
    }

    #[test]
    fn second_fundamental_cross_checks_fsr() {
        let g = CavityGeometry::with_effective_length(Topology::PlanoConcave, 69.3, 7.39).unwrap();
        let res = ladder_resonances(&g, nm(1275.7), 2, 0..=1, 1000.0, 0.8, 0.7).unwrap();
        let peaks: Vec<ResonancePeak> = res.iter().map(|r| peak(r.frequency_ghz, r.contrast)).collect();
        let l = identify_mode_ladder(&peaks, AxisKind::FrequencyGhz, Topology::PlanoConcave, 69.3, nm(1275.7)).unwrap();
        let chk = l.fsr_check.unwrap();
        assert!(chk.relative_difference.abs() < 1e-9, "{chk:?}");
        assert!(l.assignments.iter().filter(|a| a.longitudinal == 1).count() == 3);
    }

    #[test]
    fn stray_peak_is_ambiguous() {
        let g = CavityGeometry::with_effective_length(Topology::PlanoConcave, 105.6, 18.9).unwrap();
        let res = ladder_resonances(&g, nm(1280.0), 2, 0..=0, 1000.0, 0.8, 0.7).unwrap();
        let mut peaks: Vec<ResonancePeak> = res.iter().map(|r| peak(r.frequency_ghz, r.contrast)).collect();
        let spacing = res[1].frequency_ghz - res[0].frequency_ghz;
        peaks.push(peak(res[0].frequency_ghz + 2.5 * spacing, 0.3));
        match identify_mode_ladder(&peaks, AxisKind::FrequencyGhz, Topology::PlanoConcave, 105.6, nm(1280.0)) {
            Err(Error::AmbiguousLadder { residual, candidates }) => {
                assert!(residual > LADDER_TOLERANCE);
                assert!(candidates.contains("N="));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn ladder_scan(noise: f64, seed: u64) -> ScanConfig {
        let g = CavityGeometry::with_effective_length(Topology::PlanoConcave, 105.6, 18.9).unwrap();
        let resonances = ladder_resonances(&g, nm(1280.0), 2, 0..=0, 20_000.0, 0.8, 0.7).unwrap();
        let nu0 = resonances[0].frequency_ghz;
        ScanConfig {
            axis: AxisSpec::Frequency { start_ghz: nu0 - 500.0, stop_ghz: nu0 + 3000.0, points: 3501 },
            resonances,
            sidebands: None,
            noise_sigma: noise,
            seed,
        }
    }

    #[test]
    fn scan_round_trip_at_zero_noise() {
        let s = synthesize_scan(&ladder_scan(0.0, 0)).unwrap();
        let a = analyze_mode_spectrum(&s, Topology::PlanoConcave, 105.6, nm(1280.0)).unwrap();
        assert_eq!(a.peaks_ghz.len(), 3);
        assert!((a.ladder.length_um / 18.9 - 1.0).abs() < 1e-6, "{}", a.ladder.length_um);
        assert!(a.peaks_ghz.iter().all(|p| p.assignment.is_some()));
    }

    #[test]
    fn scan_round_trip_with_noise() {
        for seed in 0..5 {
            let s = synthesize_scan(&ladder_scan(0.02, seed)).unwrap();
            let a = analyze_mode_spectrum(&s, Topology::PlanoConcave, 105.6, nm(1280.0)).unwrap();
            assert!((a.ladder.length_um / 18.9 - 1.0).abs() < 0.02, "seed {seed}: {}", a.ladder.length_um);
        }
    }

    #[test]
    fn raw_axis_is_rejected() {
        let peaks = [peak(1.0, 0.8), peak(2.0, 0.5)];
        assert!(identify_mode_ladder(&peaks, AxisKind::SampleIndex, Topology::PlanoConcave, 69.3, nm(1276.0)).is_err());
    }
}
