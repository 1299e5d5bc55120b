use anyhow::Result;
use serde_json::{json, Value};

use microcavity::loss;
use microcavity::optics;
use microcavity::reference::{ENHANCEMENT_NOTE, REFERENCE_CAVITIES};

use super::sig;
use crate::output::{Report, Table};

/// Agreement required between recomputed and tabulated values.
pub const WAIST_TOLERANCE_UM: f64 = 0.02;
pub const VOLUME_TOLERANCE_LAMBDA3: f64 = 0.3;

pub fn run() -> Result<Report> {
    let mut table = Table::new([
        "name",
        "topology",
        "lambda_nm",
        "roc_um",
        "length_um",
        "w0_um",
        "w0_table_um",
        "w0_delta_um",
        "w0_ok",
        "w0_within_sigma",
        "v_lambda3",
        "v_table_lambda3",
        "v_delta_lambda3",
        "v_ok",
        "v_within_sigma",
        "finesse_table",
        "q_table",
        "enhancement_q_over_v",
        "enhancement_printed",
    ]);
    let mut rows: Vec<Value> = Vec::new();
    let mut all_ok = true;
    for c in &REFERENCE_CAVITIES {
        let g = c.geometry()?;
        let lam = c.wavelength();
        let w0 = optics::beam_waist(&g, lam)?;
        let v = optics::mode_volume(&g, lam)?.cubic_wavelengths;
        let (dw, dv) = (w0 - c.waist_um, v - c.volume_lambda3);
        let w_ok = dw.abs() <= WAIST_TOLERANCE_UM;
        let v_ok = dv.abs() <= VOLUME_TOLERANCE_LAMBDA3;
        all_ok &= w_ok && v_ok;
        let upsilon = loss::enhancement(c.quality, v, 1.0)?;
        table.push(vec![
            c.name.to_string(),
            c.topology.label().to_string(),
            c.wavelength_nm.to_string(),
            c.roc_um.to_string(),
            c.length_um.to_string(),
            format!("{w0:.4}"),
            format!("{:.2}", c.waist_um),
            format!("{dw:+.4}"),
            w_ok.to_string(),
            (dw.abs() <= c.waist_sigma_um).to_string(),
            format!("{v:.2}"),
            format!("{:.1}", c.volume_lambda3),
            format!("{dv:+.2}"),
            v_ok.to_string(),
            (dv.abs() <= c.volume_sigma_lambda3).to_string(),
            sig(c.finesse, 3),
            sig(c.quality, 3),
            sig(upsilon, 3),
            sig(c.printed_enhancement, 2),
        ]);
        rows.push(json!({
            "name": c.name,
            "topology": c.topology.label(),
            "lambda_nm": c.wavelength_nm,
            "roc_um": c.roc_um,
            "length_um": c.length_um,
            "w0_um": w0,
            "w0_table_um": c.waist_um,
            "w0_delta_um": dw,
            "w0_ok": w_ok,
            "w0_within_sigma": dw.abs() <= c.waist_sigma_um,
            "v_lambda3": v,
            "v_table_lambda3": c.volume_lambda3,
            "v_delta_lambda3": dv,
            "v_ok": v_ok,
            "v_within_sigma": dv.abs() <= c.volume_sigma_lambda3,
            "finesse_table": c.finesse,
            "q_table": c.quality,
            "enhancement_q_over_v": upsilon,
            "enhancement_printed": c.printed_enhancement,
        }));
    }
    let mut text = table.to_text();
    text.push_str(&format!(
        "\nw0 tolerance ±{WAIST_TOLERANCE_UM} µm, V tolerance ±{VOLUME_TOLERANCE_LAMBDA3} λ³: {}\nnote: {ENHANCEMENT_NOTE}\n",
        if all_ok { "all rows agree" } else { "some rows disagree" }
    ));
    let json = json!({
        "rows": rows,
        "w0_tolerance_um": WAIST_TOLERANCE_UM,
        "v_tolerance_lambda3": VOLUME_TOLERANCE_LAMBDA3,
        "all_ok": all_ok,
        "note": ENHANCEMENT_NOTE,
    });
    Ok(Report { name: "table1", text, table, json, files: Vec::new(), warnings: Vec::new() })
}
