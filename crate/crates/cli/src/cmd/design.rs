use anyhow::{bail, Result};
use clap::Args;
use serde_json::json;

use microcavity::loss::{self, EnhancementReport, LossBudget};
use microcavity::optics::{self, CavityGeometry, MirrorSpec, Topology, Wavelength};

use super::{non_negative, positive, sig, TopologyArg};
use crate::output::{single_row, Report};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, value_enum)]
    pub topology: TopologyArg,
    /// Radius of curvature of the curved mirror(s).
    #[arg(long, value_parser = positive)]
    pub roc_um: f64,
    /// Effective cavity length, penetration included.
    #[arg(long, value_parser = positive, required_unless_present = "spacing_um", conflicts_with = "spacing_um")]
    pub length_um: Option<f64>,
    /// Geometric mirror spacing; the penetration depth is added per mirror.
    #[arg(long, value_parser = positive)]
    pub spacing_um: Option<f64>,
    /// Penetration depth per mirror in wavelengths, used with --spacing-um.
    #[arg(long, value_parser = non_negative, default_value_t = optics::DEFAULT_PENETRATION_WAVELENGTHS)]
    pub penetration_lambda: f64,
    #[arg(long, value_parser = positive)]
    pub lambda_nm: f64,
    /// Total round-trip loss; overrides the per-mechanism budget.
    #[arg(long, value_parser = positive)]
    pub loss_ppm: Option<f64>,
    /// Transmission of each mirror.
    #[arg(long, value_parser = non_negative, default_value_t = 5.0)]
    pub transmission_ppm: f64,
    /// Coating excess loss of each mirror.
    #[arg(long, value_parser = non_negative, default_value_t = 0.0)]
    pub excess_ppm: f64,
    /// RMS surface roughness of each mirror.
    #[arg(long, value_parser = non_negative, default_value_t = 0.0)]
    pub roughness_nm: f64,
    #[arg(long, value_parser = non_negative, default_value_t = 0.0)]
    pub absorption_ppm: f64,
    /// Depth of the curved mirror; sets the aperture for clipping.
    #[arg(long, value_parser = positive)]
    pub depth_um: Option<f64>,
    /// Branching ratio of the emitter transition.
    #[arg(long, value_parser = positive, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, value_parser = positive, default_value_t = 1.0)]
    pub medium_index: f64,
}

fn geometry(a: &DesignArgs, lambda: Wavelength) -> Result<CavityGeometry> {
    let topology = Topology::from(a.topology);
    let mut curved = MirrorSpec::concave(a.roc_um)?;
    if let Some(d) = a.depth_um {
        curved = curved.with_depth(d)?;
    }
    curved = curved.with_losses(a.transmission_ppm, a.excess_ppm, a.roughness_nm)?;
    let other = match topology {
        Topology::PlanoConcave => MirrorSpec::flat().with_losses(a.transmission_ppm, a.excess_ppm, a.roughness_nm)?,
        Topology::ConcaveConcave => curved,
    };
    let (spacing, penetration) = match (a.length_um, a.spacing_um) {
        (Some(l), _) => (l, 0.0),
        (None, Some(s)) => (s, a.penetration_lambda * lambda.um()),
        (None, None) => bail!("either --length-um or --spacing-um is required"),
    };
    Ok(CavityGeometry::new(topology, curved, other, spacing, penetration)?.with_medium_index(a.medium_index)?)
}

/// Envelope `±w(z)` between the mirrors and the curved mirror surface.
fn mode_sketch(geom: &CavityGeometry, lambda: Wavelength, spot_um: f64) -> Result<String> {
    let l = geom.effective_length();
    let (z0, z1) = match geom.topology {
        Topology::PlanoConcave => (0.0, l),
        Topology::ConcaveConcave => (-0.5 * l, 0.5 * l),
    };
    let n = 200;
    let mut upper = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let z = z0 + (z1 - z0) * i as f64 / n as f64;
        upper.push((z, optics::spot_size_and_wavefront(geom, lambda, z)?.0));
    }
    let lower = upper.iter().map(|&(z, w)| (z, -w)).collect();
    let r = geom.roc_um();
    let half_height = 2.0 * spot_um;
    let surface = |vertex: f64, sign: f64| -> Vec<(f64, f64)> {
        (0..=40)
            .map(|i| {
                let y = -half_height + 2.0 * half_height * i as f64 / 40.0;
                (vertex + sign * (r - (r * r - y * y).max(0.0).sqrt()), y)
            })
            .collect()
    };
    let mut series = vec![
        Series { label: "+w(z)".into(), points: upper },
        Series { label: "-w(z)".into(), points: lower },
        Series { label: "curved mirror".into(), points: surface(z1, 1.0) },
    ];
    series.push(match geom.topology {
        Topology::PlanoConcave => {
            Series { label: "flat mirror".into(), points: vec![(z0, -half_height), (z0, half_height)] }
        }
        Topology::ConcaveConcave => Series { label: "curved mirror".into(), points: surface(z0, -1.0) },
    });
    Ok(LinePlot {
        title: format!("{} cavity, R = {} µm, L = {} µm", geom.topology.label(), sig(r, 4), sig(l, 4)),
        x_label: "axial position z (µm)".into(),
        y_label: "transverse position (µm)".into(),
        series,
    }
    .render())
}

pub fn run(a: &DesignArgs) -> Result<Report> {
    let lambda = Wavelength::from_nm(a.lambda_nm)?;
    let geom = geometry(a, lambda)?;
    let st = optics::stability(&geom);
    let (g1, g2) = geom.g_factors();
    let mode = optics::GaussianMode::compute(&geom, lambda)?;
    let spot = optics::spot_on_curved_mirror(&geom, lambda)?;
    let budget = LossBudget::for_cavity(&geom, lambda, a.absorption_ppm)?;
    let total_ppm = a.loss_ppm.unwrap_or(budget.total_ppm());
    let finesse = loss::finesse_from_loss(total_ppm)?;
    let fom = EnhancementReport::from_finesse(
        finesse.exact,
        mode.length_um,
        lambda,
        mode.volume.cubic_wavelengths,
        a.medium_index,
        a.eta,
    )?;

    let json = json!({
        "topology": geom.topology.label(),
        "roc_um": geom.roc_um(),
        "lambda_nm": lambda.nm(),
        "length_um": mode.length_um,
        "spacing_um": geom.geometric_spacing_um,
        "penetration_per_mirror_um": geom.penetration_per_mirror_um,
        "g1": g1,
        "g2": g2,
        "g_product": st.g_product,
        "waist_um": mode.waist_um,
        "rayleigh_range_um": mode.rayleigh_um,
        "spot_on_curved_mirror_um": spot,
        "mode_volume_um3": mode.volume.cubic_um,
        "mode_volume_lambda3": mode.volume.cubic_wavelengths,
        "fsr_thz": mode.fsr_thz,
        "transverse_spacing_thz": mode.transverse_spacing_thz,
        "loss_ppm": {
            "transmission_a": budget.transmission_a_ppm,
            "transmission_b": budget.transmission_b_ppm,
            "absorption": budget.absorption_ppm,
            "scattering": budget.scattering_ppm,
            "clipping": budget.clipping_ppm,
            "excess": budget.shape_excess_ppm,
            "budget_total": budget.total_ppm(),
            "used_total": total_ppm,
            "override": a.loss_ppm.is_some(),
        },
        "finesse": finesse.exact,
        "finesse_low_loss_approx": finesse.approx,
        "quality_factor": fom.quality,
        "enhancement": fom.enhancement,
        "purcell_factor": fom.purcell,
        "eta": a.eta,
        "medium_index": a.medium_index,
    });

    let rows: [(&str, String); 16] = [
        ("topology", geom.topology.label().to_string()),
        ("R (µm)", sig(geom.roc_um(), 4)),
        ("L effective (µm)", sig(mode.length_um, 4)),
        ("g1*g2", sig(st.g_product, 4)),
        ("w0 (µm)", format!("{:.3}", mode.waist_um)),
        ("z_R (µm)", sig(mode.rayleigh_um, 4)),
        ("w on curved mirror (µm)", format!("{:.3}", spot)),
        ("V (λ³)", format!("{:.1}", mode.volume.cubic_wavelengths)),
        ("FSR (THz)", sig(mode.fsr_thz, 4)),
        ("transverse spacing (THz)", sig(mode.transverse_spacing_thz, 4)),
        ("round-trip loss (ppm)", sig(total_ppm, 4)),
        ("F", sig(finesse.exact, 4)),
        ("Q", sig(fom.quality, 4)),
        ("enhancement Q/(V/λ³)/n³", sig(fom.enhancement, 4)),
        ("Purcell factor", sig(fom.purcell, 4)),
        ("eta", sig(a.eta, 4)),
    ];
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    let text: String =
        rows.iter().map(|(k, v)| format!("{k}{}  {v}\n", " ".repeat(width - k.chars().count()))).collect();

    Ok(Report {
        name: "design",
        text,
        table: single_row(&json),
        json,
        files: vec![("design_mode.svg".into(), mode_sketch(&geom, lambda, spot)?)],
        warnings: Vec::new(),
    })
}
