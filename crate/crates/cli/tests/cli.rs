use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microcavity")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = run(&a);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn num(v: &Value, key: &str) -> f64 {
    v.pointer(key).and_then(Value::as_f64).unwrap_or_else(|| panic!("missing {key} in {v}"))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn design_reproduces_short_pc_row() {
    let v = json(&["design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "8.7", "--lambda-nm", "1276"]);
    assert!((num(&v, "/waist_um") - 3.05).abs() <= 0.02);
    assert!((num(&v, "/mode_volume_lambda3") - 30.8).abs() <= 0.3);
    assert!(num(&v, "/finesse") > 6.28e5 && num(&v, "/finesse") < 6.29e5);
}

#[test]
fn design_reproduces_cc_row() {
    let v = json(&["design", "--topology", "cc", "--roc-um", "105.6", "--length-um", "27.4", "--lambda-nm", "1280"]);
    assert!((num(&v, "/waist_um") - 3.79).abs() <= 0.02);
    assert!((num(&v, "/mode_volume_lambda3") - 148.2).abs() <= 0.3);
}

#[test]
fn design_spacing_adds_penetration() {
    let v = json(&["design", "--topology", "pc", "--roc-um", "69.3", "--spacing-um", "6.65", "--lambda-nm", "1280"]);
    assert!((num(&v, "/length_um") - (6.65 + 2.0 * 0.8 * 1.28)).abs() < 1e-12);
}

#[test]
fn design_rejects_zero_length() {
    let out = run(&["design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "0", "--lambda-nm", "1276"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--length-um"));
}

#[test]
fn design_unstable_geometry_names_g_product() {
    let out = run(&["design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "80", "--lambda-nm", "1276"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("g1*g2"), "{}", stderr(&out));
}

#[test]
fn design_csv_is_one_row() {
    let out = run(&[
        "design",
        "--topology",
        "pc",
        "--roc-um",
        "69.3",
        "--length-um",
        "8.7",
        "--lambda-nm",
        "1276",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("waist_um") && lines[0].contains("mode_volume_lambda3"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pcf.ini");
    std::fs::write(&cfg, "[design]\ntopology = pc\nroc_um = 69.3\nlength_um = 8.7\nlambda_nm = 1276\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let v = json(&["design", "--config", cfg]);
    assert!((num(&v, "/waist_um") - 3.05).abs() <= 0.02);
    let v = json(&["design", "--config", cfg, "--length-um", "9.3", "--lambda-nm", "1279"]);
    assert!((num(&v, "/waist_um") - 3.10).abs() <= 0.02);
}

#[test]
fn table1_rows_agree() {
    let v = json(&["table1"]);
    assert_eq!(v["all_ok"], Value::Bool(true));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let cc = rows.iter().find(|r| r["name"] == "CC-a").unwrap();
    assert!((num(cc, "/enhancement_q_over_v") / 0.48e5 - 1.0).abs() < 0.01);
    let out = run(&["table1"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("note:"));
}

#[test]
fn spectrum_bundle_gives_linewidth_and_finesse() {
    let scan = fixture("pcf_linewidth_raw.csv");
    let ladder = fixture("pcf_ladder_nm.csv");
    let v = json(&[
        "spectrum",
        "--input",
        scan.to_str().unwrap(),
        "--x-unit",
        "raw",
        "--sideband-mhz",
        "200",
        "--ladder",
        ladder.to_str().unwrap(),
        "--roc-um",
        "69.3",
    ]);
    assert!((num(&v, "/fwhm_mhz") - 58.0).abs() <= 2.0, "{v}");
    assert!((num(&v, "/finesse") - 3.5e5).abs() <= 0.1e5, "{v}");
    assert!((num(&v, "/ladder/length_um") - 7.39).abs() < 0.05);
    assert_eq!(v["calibrated"], Value::Bool(true));
    for key in ["center", "fwhm_mhz", "fwhm_sigma_mhz", "contrast", "residual"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn spectrum_without_sidebands_warns_about_raw_units() {
    let scan = fixture("pcf_no_sidebands_raw.csv");
    let out = run(&["spectrum", "--input", scan.to_str().unwrap(), "--x-unit", "raw", "--format", "json"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("raw units"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["calibrated"], Value::Bool(false));
    assert!(v["finesse"].is_null());
}

#[test]
fn spectrum_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("empty.csv", ""), ("header.csv", "x,signal\n")] {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let out = run(&["spectrum", "--input", p.to_str().unwrap(), "--x-unit", "nm"]);
        assert!(!out.status.success(), "{name}");
        assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
    }
}

#[test]
fn profile_recovers_roc() {
    let v = json(&["profile", "--input", fixture("surface_r105.csv").to_str().unwrap()]);
    assert!((num(&v, "/roc_um") / 105.6 - 1.0).abs() < 0.01);
    assert!((num(&v, "/aperture_um") - 41.5).abs() < 0.5);
    let q = json(&["profile", "--input", fixture("surface_r105_quartic.csv").to_str().unwrap()]);
    assert!((num(&q, "/roc_um") / 105.6 - 1.0).abs() < 0.01);
    for key in ["roc_um", "center_um", "quartic", "rms_residual_nm", "fit_radius_um"] {
        assert!(q.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn profile_without_quartic_has_larger_residual() {
    let input = fixture("surface_r105_quartic.csv");
    let on = json(&["profile", "--input", input.to_str().unwrap(), "--quartic", "on"]);
    let off = json(&["profile", "--input", input.to_str().unwrap(), "--quartic", "off"]);
    assert!(num(&off, "/rms_residual_nm") > num(&on, "/rms_residual_nm"));
    assert_eq!(num(&off, "/fit_radius_um"), num(&on, "/fit_radius_um"));
}

#[test]
fn profile_missing_columns_names_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "x_um,y_um,height\n0,0,0\n").unwrap();
    let out = run(&["profile", "--input", p.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("x_um,y_um,z_um"), "{}", stderr(&out));
}

#[test]
fn sweep_matches_anchors() {
    let v = json(&["sweep", "--length-range", "18.9:39.0:20.1", "--calibration", "PC-a"]);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert!((num(&pts[0], "/finesse") - 4.9e5).abs() <= 0.5e5);
    assert!((num(&pts[1], "/total_loss_ppm") / 50.0 - 1.0).abs() <= 0.1);
}

#[test]
fn sweep_beyond_observable_range_warns_and_stays_monotone() {
    let out = run(&["sweep", "--length-range", "5:45:0.5", "--format", "json"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("truncated"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["non_increasing"], Value::Bool(true));
    assert!(!v["warnings"].as_array().unwrap().is_empty());
    let a2 = json(&["sweep", "--calibration", "PC-a2"]);
    let a = json(&["sweep", "--calibration", "PC-a"]);
    assert!(num(&a2, "/points/0/finesse") < num(&a, "/points/0/finesse"));
}

#[test]
fn artifacts_are_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| {
        let d = dir.path().join(sub);
        let out = run(&["sweep", "--out-dir", d.to_str().unwrap()]);
        assert!(out.status.success());
        ["sweep.csv", "sweep.json", "sweep.svg"].map(|f| std::fs::read(d.join(f)).unwrap())
    };
    let first = read("a");
    let second = read("b");
    assert_eq!(first, second);
    let svg = String::from_utf8(first[2].clone()).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("version=\"1.1\"") && svg.trim_end().ends_with("</svg>"));
    assert!(String::from_utf8_lossy(&first[0]).starts_with("length_um,finesse,total_loss_ppm"));

    let d = dir.path().join("p");
    let out =
        run(&["profile", "--input", fixture("surface_r105.csv").to_str().unwrap(), "--out-dir", d.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(d.join("profile_residuals.svg").exists() && d.join("profile.json").exists());
    let d = dir.path().join("d");
    let out = run(&[
        "design",
        "--topology",
        "cc",
        "--roc-um",
        "105.6",
        "--length-um",
        "27.4",
        "--lambda-nm",
        "1280",
        "--out-dir",
        d.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(d.join("design_mode.svg").exists() && d.join("design.csv").exists());
}

#[test]
fn unknown_calibration_is_an_error() {
    let out = run(&["sweep", "--calibration", "PC-z"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("PC-a"));
}
