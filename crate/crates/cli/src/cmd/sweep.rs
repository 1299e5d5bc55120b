use anyhow::{bail, Result};
use clap::Args;
use serde_json::json;

use microcavity::loss::finesse_vs_length;
use microcavity::reference::SweepPreset;
use microcavity::Execution;

use super::{sig, Switch};
use crate::output::{Report, Table};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Effective lengths `start:stop:step` in µm, both ends inclusive.
    #[arg(long, default_value = "5:40:0.5", value_parser = parse_range)]
    pub length_range: LengthRange,
    /// Loss calibration: PC-a or PC-a2.
    #[arg(long, default_value = "PC-a")]
    pub calibration: String,
    /// Length-dependent shape excess loss.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub shape_excess: Switch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LengthRange {
    pub fn lengths(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

pub fn parse_range(s: &str) -> Result<LengthRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got '{s}'"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
    let r = LengthRange { start: num(a)?, stop: num(b)?, step: num(c)? };
    if !(r.start > 0.0 && r.stop > r.start && r.step > 0.0 && r.start.is_finite() && r.stop.is_finite()) {
        return Err(format!("need 0 < start < stop and step > 0, got '{s}'"));
    }
    if (r.stop - r.start) / r.step > 1e6 {
        return Err("more than 10^6 sweep points".into());
    }
    Ok(r)
}

pub fn run(a: &SweepArgs) -> Result<Report> {
    let preset: SweepPreset = a.calibration.parse()?;
    let template = preset.template()?;
    let lambda = preset.wavelength();
    let mut model = preset.model()?;
    if !a.shape_excess.is_on() {
        model.shape = None;
    }
    let sweep = finesse_vs_length(&template, lambda, &a.length_range.lengths(), &model, Execution::Parallel)?;
    if sweep.points.is_empty() {
        bail!("no sweep point lies inside the stable, observable range");
    }
    let warnings: Vec<String> = sweep.warnings.iter().map(|w| w.to_string()).collect();

    let mut table = Table::new([
        "length_um",
        "finesse",
        "total_loss_ppm",
        "transmission_ppm",
        "scattering_ppm",
        "clipping_ppm",
        "excess_ppm",
    ]);
    for p in &sweep.points {
        let b = &p.budget;
        table.push(vec![
            format!("{}", p.length_um),
            format!("{}", p.finesse),
            format!("{}", p.total_ppm),
            format!("{}", b.transmission_a_ppm + b.transmission_b_ppm),
            format!("{}", b.scattering_ppm),
            format!("{}", b.clipping_ppm),
            format!("{}", b.shape_excess_ppm + b.absorption_ppm),
        ]);
    }
    let points: Vec<_> = sweep
        .points
        .iter()
        .map(|p| json!({"length_um": p.length_um, "finesse": p.finesse, "total_loss_ppm": p.total_ppm}))
        .collect();
    let json = json!({
        "calibration": preset.name(),
        "roc_um": template.roc_um(),
        "lambda_nm": lambda.nm(),
        "shape_excess": a.shape_excess.is_on(),
        "non_increasing": sweep.is_non_increasing(),
        "points": points,
        "warnings": warnings,
    });

    let first = &sweep.points[0];
    let last = &sweep.points[sweep.points.len() - 1];
    let text = format!(
        "calibration {} (R = {} µm, λ = {} nm), {} points\nF({} µm) = {}, loss {} ppm\nF({} µm) = {}, loss {} ppm\nnon-increasing: {}\n",
        preset.name(),
        template.roc_um(),
        lambda.nm(),
        sweep.points.len(),
        sig(first.length_um, 4),
        sig(first.finesse, 4),
        sig(first.total_ppm, 4),
        sig(last.length_um, 4),
        sig(last.finesse, 4),
        sig(last.total_ppm, 4),
        sweep.is_non_increasing()
    );
    let svg = LinePlot {
        title: format!("finesse vs length, {}", preset.name()),
        x_label: "effective length L (µm)".into(),
        y_label: "finesse".into(),
        series: vec![Series {
            label: preset.name().into(),
            points: sweep.points.iter().map(|p| (p.length_um, p.finesse)).collect(),
        }],
    }
    .render();
    Ok(Report { name: "sweep", text, table, json, files: vec![("sweep.svg".into(), svg)], warnings })
}
