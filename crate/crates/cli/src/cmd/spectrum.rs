use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde_json::{json, Value};

use microcavity::optics::{Topology, Wavelength};
use microcavity::spectra::{analyze_mode_spectrum, measure_linewidth, read_spectrum_csv, AxisKind, Spectrum};
use microcavity::Error;

use super::{open, positive, sig, TopologyArg};
use crate::output::{single_row, Report};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Scan CSV with header `x,signal`.
    #[arg(long)]
    pub input: PathBuf,
    /// Unit of the x column: nm, ghz or raw.
    #[arg(long)]
    pub x_unit: String,
    /// Phase-modulation frequency; calibrates the axis from the sidebands.
    #[arg(long, value_parser = positive)]
    pub sideband_mhz: Option<f64>,
    /// Curved-mirror ROC, enables the mode-ladder length inference.
    #[arg(long, value_parser = positive)]
    pub roc_um: Option<f64>,
    #[arg(long, value_enum, default_value_t = TopologyArg::Pc)]
    pub topology: TopologyArg,
    /// Separate wide scan holding the transverse-mode ladder.
    #[arg(long, requires = "roc_um")]
    pub ladder: Option<PathBuf>,
    #[arg(long, default_value = "nm")]
    pub ladder_x_unit: String,
}

fn load(path: &Path, unit: &str) -> Result<Spectrum> {
    let axis: AxisKind = unit.parse()?;
    read_spectrum_csv(open(path)?, axis).with_context(|| format!("reading {}", path.display()))
}

fn plot(spec: &Spectrum, title: &str) -> String {
    let x_label = match spec.axis() {
        AxisKind::WavelengthNm => "wavelength (nm)",
        AxisKind::FrequencyGhz => "frequency (GHz)",
        AxisKind::SampleIndex => "scan coordinate (raw units)",
    };
    LinePlot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: "reflected signal".into(),
        series: vec![Series {
            label: "signal".into(),
            points: spec.x().iter().copied().zip(spec.signal().iter().copied()).collect(),
        }],
    }
    .render()
}

pub fn run(a: &SpectrumArgs) -> Result<Report> {
    let spec = load(&a.input, &a.x_unit)?;
    let m = measure_linewidth(&spec, a.sideband_mhz)?;
    let mut warnings = m.warnings.clone();
    let mut files = vec![("spectrum_scan.svg".to_string(), plot(&spec, "scan"))];

    let ladder_source = match (&a.ladder, spec.axis()) {
        (Some(path), _) => Some((load(path, &a.ladder_x_unit)?, true)),
        (None, AxisKind::SampleIndex) => None,
        (None, _) => Some((spec.clone(), false)),
    };
    let mut ladder_json = Value::Null;
    let mut fsr_thz = None;
    if let (Some(roc), Some((src, explicit))) = (a.roc_um, ladder_source) {
        let (lo, hi) = src.to_frequency_ghz()?.span();
        let reference = Wavelength::from_frequency_thz(0.5 * (lo + hi) * 1e-3)?;
        match analyze_mode_spectrum(&src, Topology::from(a.topology), roc, reference) {
            Ok(an) => {
                let l = &an.ladder;
                fsr_thz = Some(l.fsr_thz);
                if l.root_count() > 1 {
                    warnings.push(format!(
                        "mode splitting is compatible with {} lengths {:?} µm; the smallest is reported",
                        l.root_count(),
                        l.roots_um
                    ));
                }
                let modes: Vec<Value> = l
                    .assignments
                    .iter()
                    .map(|s| {
                        json!({
                            "frequency_ghz": s.frequency_ghz,
                            "transverse_order": s.mode.order(),
                            "longitudinal_offset": s.longitudinal,
                            "offset_ghz": s.offset_ghz,
                        })
                    })
                    .collect();
                ladder_json = json!({
                    "length_um": l.length_um,
                    "roots_um": l.roots_um,
                    "geometric_spacing_um": l.geometric_spacing_um,
                    "fsr_thz": l.fsr_thz,
                    "transverse_spacing_thz": l.spacing_thz,
                    "fundamental_ghz": l.fundamental_ghz,
                    "consistency_residual": l.consistency_residual,
                    "fsr_check_length_um": l.fsr_check.map(|c| c.length_um),
                    "modes": modes,
                });
                if explicit {
                    files.push(("spectrum_ladder.svg".into(), plot(&src, "mode ladder scan")));
                }
            }
            Err(e @ Error::InsufficientModes { .. }) if !explicit => {
                warnings.push(format!("no length inference: {e}"));
            }
            Err(e) => return Err(e).context("mode-ladder analysis"),
        }
    }

    let r = m.report;
    let finesse = match fsr_thz {
        Some(fsr) if m.calibrated => {
            Some((fsr * 1e6 / r.fwhm_mhz, fsr * 1e6 * r.fwhm_sigma_mhz / (r.fwhm_mhz * r.fwhm_mhz)))
        }
        Some(_) => {
            warnings.push("linewidth is uncalibrated: finesse not computed".into());
            None
        }
        None => None,
    };
    let calibration = m.calibration.map(|c| {
        json!({
            "scale_mhz_per_unit": c.scale,
            "scale_sigma_mhz_per_unit": c.scale_sigma,
            "sideband_spacing_raw": c.sideband_spacing_measured,
            "spacing_asymmetry": c.residual,
        })
    });
    let json = json!({
        "input": a.input.display().to_string(),
        "x_unit": a.x_unit,
        "center": r.center,
        "fwhm_mhz": r.fwhm_mhz,
        "fwhm_sigma_mhz": r.fwhm_sigma_mhz,
        "contrast": r.contrast,
        "residual": r.residual,
        "calibrated": m.calibrated,
        "calibration": calibration,
        "ladder": ladder_json,
        "finesse": finesse.map(|f| f.0),
        "finesse_sigma": finesse.map(|f| f.1),
        "warnings": warnings,
    });

    let unit = if m.calibrated { "MHz" } else { "raw units" };
    let mut text = format!(
        "linewidth      {} ± {} {unit}\ncontrast       {}\nfit residual   {}\n",
        sig(r.fwhm_mhz, 4),
        sig(r.fwhm_sigma_mhz, 2),
        sig(r.contrast, 3),
        sig(r.residual, 2)
    );
    if let Some(c) = m.calibration {
        text.push_str(&format!("axis scale     {} ± {} MHz/unit\n", sig(c.scale, 5), sig(c.scale_sigma, 2)));
    }
    if let Some(l) = ladder_json.as_object() {
        text.push_str(&format!(
            "cavity length  {} µm (FSR {} THz)\n",
            sig(l["length_um"].as_f64().unwrap_or(f64::NAN), 4),
            sig(l["fsr_thz"].as_f64().unwrap_or(f64::NAN), 4)
        ));
    }
    if let Some((f, s)) = finesse {
        text.push_str(&format!("finesse        {} ± {}\n", sig(f, 4), sig(s, 2)));
    }

    Ok(Report { name: "spectrum", text, table: single_row(&json), json, files, warnings })
}
