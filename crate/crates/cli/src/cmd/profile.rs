use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use microcavity::profile::{estimate_cap_radius, fit_mirror_profile, read_surface_csv, DEFAULT_FIT_FRACTION};

use super::{open, positive, sig, Switch};
use crate::output::{single_row, Report};
use crate::svg::HeatMap;

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Surface map CSV with header `x_um,y_um,z_um`.
    #[arg(long)]
    pub input: PathBuf,
    /// Radius of the fitted disc; defaults to 0.4 of the estimated cap radius.
    #[arg(long, value_parser = positive)]
    pub fit_radius_um: Option<f64>,
    /// Include the r⁴ correction term.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub quartic: Switch,
}

pub fn run(a: &ProfileArgs) -> Result<Report> {
    let map = read_surface_csv(open(&a.input)?).with_context(|| format!("reading {}", a.input.display()))?;
    let aperture = estimate_cap_radius(&map).context("estimating the cap radius")?;
    let radius = a.fit_radius_um.unwrap_or(DEFAULT_FIT_FRACTION * aperture);
    let fit = fit_mirror_profile(&map, radius, a.quartic.is_on())?;
    let zmin = map.z().iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = map.z().iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let json = json!({
        "input": a.input.display().to_string(),
        "roc_um": fit.roc_um,
        "roc_sigma_um": fit.roc_sigma_um,
        "center_um": [fit.center_um.0, fit.center_um.1],
        "quartic": fit.quartic_fitted,
        "quartic_coeff_per_um3": fit.quartic_coeff,
        "rms_residual_nm": fit.rms_residual_nm,
        "fit_radius_um": fit.fit_radius_used_um,
        "points_used": fit.points_used,
        "depth_um": zmax - zmin,
        "aperture_um": aperture,
    });
    let text = format!(
        "R              {} ± {} µm\ncenter         ({}, {}) µm\nquartic        {}\nrms residual   {} nm\nfit radius     {} µm ({} points)\ndepth          {} µm\naperture       {} µm\n",
        sig(fit.roc_um, 5),
        sig(fit.roc_sigma_um, 2),
        sig(fit.center_um.0, 4),
        sig(fit.center_um.1, 4),
        if fit.quartic_fitted { format!("on, {:.3e} µm⁻³", fit.quartic_coeff) } else { "off".into() },
        sig(fit.rms_residual_nm, 3),
        sig(fit.fit_radius_used_um, 4),
        fit.points_used,
        sig(zmax - zmin, 4),
        sig(aperture, 4),
    );
    let residuals = HeatMap {
        title: format!("fit residuals, R = {} µm", sig(fit.roc_um, 5)),
        x_label: "x (µm)".into(),
        y_label: "y (µm)".into(),
        value_label: "residual (nm)".into(),
        cell: map.pitch_um(),
        samples: fit.residuals(&map),
    }
    .render();
    Ok(Report {
        name: "profile",
        text,
        table: single_row(&json),
        json,
        files: vec![("profile_residuals.svg".into(), residuals)],
        warnings: Vec::new(),
    })
}
