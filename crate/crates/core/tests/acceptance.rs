//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use microcavity::loss::{self, finesse_vs_length, linspace};
use microcavity::optics::{self, CavityGeometry, Topology, Wavelength};
use microcavity::profile::{
    aperture_from_cap, fit_mirror_profile, synthesize_surface, SurfaceConfig, DEFAULT_FIT_FRACTION,
};
use microcavity::reference::{self, SweepPreset, REFERENCE_CAVITIES};
use microcavity::spectra::{
    detect_peaks, fit_lorentzian, measure_linewidth, monte_carlo_linewidths, synthesize_scan, AxisSpec, Resonance,
    ScanConfig, Sidebands,
};
use microcavity::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TIME_LIMIT: Duration = Duration::from_secs(10);

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.lines.push(format!("    [{}] {msg}", if ok { "ok" } else { "!!" }));
    }
}

fn nm(x: f64) -> Wavelength {
    Wavelength::from_nm(x).unwrap()
}

fn table_rows() -> Outcome {
    let mut o = Outcome::new();
    for c in &REFERENCE_CAVITIES {
        let g = c.geometry().unwrap();
        let w0 = optics::beam_waist(&g, c.wavelength()).unwrap();
        let v = optics::mode_volume(&g, c.wavelength()).unwrap().cubic_wavelengths;
        o.check(
            (w0 - c.waist_um).abs() <= 0.02 && (v - c.volume_lambda3).abs() <= 0.3,
            format!(
                "{:5}: w0 {w0:.4} µm (table {:.2}), V {v:.2} λ³ (table {:.1})",
                c.name, c.waist_um, c.volume_lambda3
            ),
        );
    }
    o
}

fn coating_bound() -> Outcome {
    let mut o = Outcome::new();
    let f10 = loss::finesse_from_loss(10.0).unwrap().exact;
    let f12 = loss::finesse_from_loss(12.0).unwrap().exact;
    o.check((f10 / 6.28e5 - 1.0).abs() < 0.005, format!("F(10 ppm) = {f10:.0}, expected 6.28e5 ± 0.5%"));
    o.check((f12 / 5.24e5 - 1.0).abs() < 0.005, format!("F(12 ppm) = {f12:.0}, expected 5.24e5 ± 0.5%"));
    let (lo, hi) = reference::COATING_FINESSE_BOUNDS;
    o.check(f12 >= lo && f10 <= hi * 1.0005, format!("bracket {lo:.2e} ≤ F ≤ {hi:.2e}"));

    // exact-vs-2π/l relative gap, by magnitude, against l/2
    let mut worst: Option<(f64, f64)> = None;
    let n = 900;
    for i in 1..n {
        let l = 0.9 * i as f64 / n as f64;
        let f = loss::finesse_from_loss(l * 1e6).unwrap();
        let gap = (f.exact - f.approx).abs() / f.exact;
        if gap >= 0.5 * l && worst.is_none_or(|(_, g)| gap - 0.5 * l > g) {
            worst = Some((l, gap - 0.5 * l));
        }
    }
    match worst {
        None => o.check(true, "|F − 2π/l|/F < l/2 on l ∈ (0, 0.9)".into()),
        Some((l, excess)) => o.check(
            false,
            format!("|F − 2π/l|/F < l/2 violated on l ∈ (0, 0.9): gap exceeds l/2 by up to {excess:.3e} (at l = {l:.3}); the gap is l/2 + O(l²) for every l"),
        ),
    }
    o
}

fn length_inversion() -> Outcome {
    let mut o = Outcome::new();
    let sol = optics::length_from_mode_splitting(
        Topology::PlanoConcave,
        69.3,
        nm(reference::PC_F_FUNDAMENTAL_NM),
        nm(reference::PC_F_FIRST_ORDER_NM),
        1,
        optics::default_length_bracket(Topology::PlanoConcave, 69.3),
    )
    .unwrap();
    o.check(
        (6.2..=7.2).contains(&sol.length_um),
        format!("L = {:.4} µm from 1275.7/1263.5 nm at R = 69.3 µm ({} root)", sol.length_um, sol.root_count()),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<(Topology, f64, f64)> = (0..1000)
        .map(|_| {
            let topo = if rng.random_bool(0.5) { Topology::PlanoConcave } else { Topology::ConcaveConcave };
            let r = rng.random_range(20.0..200.0);
            let l = rng.random_range(0.01..0.95) * topo.alpha() * r;
            (topo, r, l)
        })
        .collect();
    let errors: Vec<(f64, bool)> = Execution::Parallel.map(&cases, |&(topo, r, l)| {
        let g = CavityGeometry::with_effective_length(topo, r, l).unwrap();
        let d = optics::transverse_mode_spacing(&g, 1).unwrap();
        let sol = optics::length_from_splitting_thz(topo, r, d, 1, optics::default_length_bracket(topo, r)).unwrap();
        let nearest = sol.roots_um.iter().map(|&x| (x / l - 1.0).abs()).fold(f64::INFINITY, f64::min);
        (nearest, sol.root_count() == 1)
    });
    let worst = errors.iter().map(|e| e.0).fold(0.0, f64::max);
    let unique = errors.iter().filter(|e| e.1).count();
    o.check(
        worst < 1e-9,
        format!("forward/inverse round trip on 1000 geometries: worst relative error {worst:.2e} ({unique} unique roots, others recovered among twin roots)"),
    );
    o
}

fn linewidth_scan() -> ScanConfig {
    // uncalibrated axis: 1.7 MHz per unit, 1 MHz sampling over 1.2 GHz
    let mhz_per_unit = 1.7;
    ScanConfig {
        axis: AxisSpec::Raw { start_ghz: 234_999.4, mhz_per_unit, unit: 1.0 / mhz_per_unit, points: 1201 },
        resonances: vec![Resonance {
            frequency_ghz: 235_000.0,
            fwhm_mhz: reference::PC_F_LINEWIDTH_MHZ,
            contrast: 0.5,
        }],
        sidebands: Some(Sidebands { offset_mhz: reference::SIDEBAND_MODULATION_MHZ, depth_ratio: 0.5 }),
        noise_sigma: 0.02,
        seed: 0,
    }
}

fn linewidth_pipeline() -> Outcome {
    let mut o = Outcome::new();
    let seeds: Vec<u64> = (0..100).collect();
    let fits = monte_carlo_linewidths(
        &linewidth_scan(),
        &seeds,
        Some(reference::SIDEBAND_MODULATION_MHZ),
        Execution::Parallel,
    );
    let widths: Vec<f64> = fits.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.fwhm_mhz).collect();
    let failures = fits.len() - widths.len();
    let within = widths.iter().filter(|&&w| (w - 58.0).abs() <= 2.0).count();
    o.check(within >= 95, format!("{within}/100 seeds within 58 ± 2 MHz ({failures} fit failures)"));
    let mean = widths.iter().sum::<f64>() / widths.len().max(1) as f64;
    let finesse = reference::PC_F_QUOTED_FSR_THZ * 1e6 / mean;
    o.check(
        (finesse - 3.5e5).abs() <= 0.12e5,
        format!(
            "mean Γ = {mean:.2} MHz → F = FSR/Γ = {finesse:.4e} (3.50 ± 0.12)e5; round-trip loss {:.1} ppm (reference {} ppm)",
            loss::loss_from_finesse(finesse).unwrap(),
            reference::PC_F_LOSS_PPM
        ),
    );
    o
}

fn profilometry() -> Outcome {
    let mut o = Outcome::new();
    let families = [(reference::SHORT_MIRROR, -1e-5), (reference::ACTUATED_MIRROR, -1e-6)];
    for ((roc, depth), c4) in families {
        let rad = DEFAULT_FIT_FRACTION * aperture_from_cap(roc, depth).unwrap();
        let seeds: Vec<u64> = (0..10).collect();
        let res: Vec<(f64, f64, f64)> = Execution::Parallel.map(&seeds, |&seed| {
            let cfg = SurfaceConfig::new(roc, depth).with_quartic(c4).with_noise(1.0, seed).with_pitch(0.5);
            let map = synthesize_surface(&cfg).unwrap();
            let with = fit_mirror_profile(&map, rad, true).unwrap();
            let without = fit_mirror_profile(&map, rad, false).unwrap();
            (with.roc_um, with.rms_residual_nm, without.rms_residual_nm)
        });
        let worst = res.iter().map(|r| (r.0 / roc - 1.0).abs()).fold(0.0, f64::max);
        let nested = res.iter().all(|r| r.1 <= r.2);
        o.check(
            worst < 0.01,
            format!("R = {roc} µm, c4 = {c4:e}, 1 nm noise, 10 maps: worst ROC error {:.3}%", worst * 100.0),
        );
        o.check(
            nested,
            format!(
                "R = {roc} µm: quartic residual ≤ paraboloid residual on every map (e.g. {:.3} vs {:.3} nm)",
                res[0].1, res[0].2
            ),
        );
    }
    o
}

fn enhancement_figures() -> Outcome {
    let mut o = Outcome::new();
    let a = loss::enhancement(4.1e6, 30.8, 1.0).unwrap();
    o.check(
        (a / reference::HEADLINE_ENHANCEMENT - 1.0).abs() < 0.01,
        format!("Υ(4.1e6, 30.8) = {a:.4e}, expected 1.33e5 ± 1%"),
    );
    let b = loss::enhancement(7.1e6, 148.2, 1.0).unwrap();
    o.check((b / 4.8e4 - 1.0).abs() < 0.01, format!("Υ(7.1e6, 148.2) = {b:.4e}, expected 4.8e4 ± 1%"));
    let p = loss::purcell(4.0 * PI * PI / 3.0, 1.0).unwrap();
    o.check(p == 1.0, format!("Purcell(4π²/3, 1) = {p:?}"));
    o
}

fn length_model() -> Outcome {
    let mut o = Outcome::new();
    let preset = SweepPreset::PcA;
    let (template, model, lam) = (preset.template().unwrap(), preset.model().unwrap(), preset.wavelength());
    let f = loss::finesse_from_loss(model.budget(&template, lam, 18.9).unwrap().total_ppm()).unwrap().exact;
    o.check((f - 4.9e5).abs() <= 0.5e5, format!("F(18.9 µm) = {f:.4e}, expected (4.9 ± 0.5)e5"));
    let l39 = model.budget(&template, lam, 39.0).unwrap().total_ppm();
    o.check((l39 / 50.0 - 1.0).abs() <= 0.1, format!("loss(39 µm) = {l39:.2} ppm, expected 50 ± 10%"));
    let sweep = finesse_vs_length(&template, lam, &linspace(5.0, 40.0, 141), &model, Execution::Parallel).unwrap();
    o.check(
        sweep.is_non_increasing(),
        format!("finesse non-increasing over {} points in [5, 40] µm", sweep.points.len()),
    );
    o
}

fn property_suite() -> Outcome {
    let mut o = Outcome::new();
    let lam = nm(1280.0);
    let q = loss::q_from_finesse(4.9e5, lam.um() / 2.0, lam);
    o.check((q / 4.9e5 - 1.0).abs() < 1e-12, format!("Q = F at L = λ/2: Q/F − 1 = {:.1e}", q / 4.9e5 - 1.0));
    let s1 = loss::scattering_loss(0.3, lam).unwrap();
    let s2 = loss::scattering_loss(0.6, lam).unwrap();
    o.check((s2 / s1 - 4.0).abs() < 1e-12, format!("scattering(2σ)/scattering(σ) = {:.15}", s2 / s1));

    let spec = synthesize_scan(&linewidth_scan()).unwrap();
    let base = measure_linewidth(&spec, Some(200.0)).unwrap().report.fwhm_mhz;
    let worst = [1e-3, 0.25, 3.0, 1e4]
        .iter()
        .map(|&k| {
            let g = measure_linewidth(&spec.rescaled(k).unwrap(), Some(200.0)).unwrap().report.fwhm_mhz;
            (g / base - 1.0).abs()
        })
        .fold(0.0, f64::max);
    o.check(worst < 1e-6, format!("calibrated linewidth under raw-axis rescaling: worst relative change {worst:.1e}"));

    let cfg = ScanConfig {
        axis: AxisSpec::Frequency { start_ghz: 234_999.0, stop_ghz: 235_001.0, points: 2001 },
        resonances: vec![Resonance { frequency_ghz: 235_000.012_3, fwhm_mhz: 58.0, contrast: 0.55 }],
        sidebands: None,
        noise_sigma: 0.0,
        seed: 0,
    };
    let s = synthesize_scan(&cfg).unwrap();
    let f = fit_lorentzian(&s, &detect_peaks(&s, 0.1)[0]).unwrap();
    let err = [
        ((f.center - 235_000.012_3) * 1e3 / 58.0).abs(),
        (f.fwhm * 1e3 / 58.0 - 1.0).abs(),
        (f.contrast / 0.55 - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    o.check(err < 1e-6, format!("spectrum fit closure at zero noise: worst relative error {err:.1e}"));

    let mut worst = 0.0f64;
    for ((roc, depth), c4) in [(reference::SHORT_MIRROR, -1e-5), (reference::ACTUATED_MIRROR, -1e-6)] {
        let map = synthesize_surface(&SurfaceConfig::new(roc, depth).with_quartic(c4)).unwrap();
        let rad = DEFAULT_FIT_FRACTION * aperture_from_cap(roc, depth).unwrap();
        let fit = fit_mirror_profile(&map, rad, true).unwrap();
        worst = worst.max((fit.roc_um / roc - 1.0).abs());
    }
    o.check(worst < 1e-6, format!("surface fit closure at zero noise: worst ROC error {worst:.1e}"));
    o
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("reference-cavity waist and mode volume", table_rows),
        ("coating-limited finesse bound", coating_bound),
        ("cavity length from mode splitting", length_inversion),
        ("sideband-calibrated linewidth pipeline", linewidth_pipeline),
        ("mirror profile fits", profilometry),
        ("enhancement and Purcell figures", enhancement_figures),
        ("finesse-vs-length model", length_model),
        ("property suite", property_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        out.check(elapsed < TIME_LIMIT, format!("ran in {:.2} s", elapsed.as_secs_f64()));
        println!("{} criterion {}: {name}", if out.pass { "PASS" } else { "FAIL" }, i + 1);
        for l in &out.lines {
            println!("{l}");
        }
        if !out.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
