//! Paraboloid and paraboloid-plus-quartic surface fits.
//!
//! Without the quartic, center and tilt are exactly degenerate (a paraboloid
//! plus a plane is a shifted paraboloid), so the fit is linear and the
//! center is reported at the vertex with zero tilt. With the quartic the
//! linear coefficients are projected out and the symmetry axis is refined
//! by Levenberg-Marquardt on the projected residual. The axis is poorly
//! determined when the quartic is weak, so the reported center is the
//! stationary point of the fitted surface in both models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{aperture_from_cap, synthesize_surface, SurfaceConfig, SurfaceMap};
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::lm::{LevenbergMarquardt, Problem};

/// Default fit radius as a fraction of the cap radius.
pub const DEFAULT_FIT_FRACTION: f64 = 0.4;
const VERTEX_PASSES: usize = 3;
const RANK_TOLERANCE: f64 = 1e-12;
const CENTER_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    pub roc_um: f64,
    /// Single-fit standard error of the ROC.
    pub roc_sigma_um: f64,
    /// Stationary point (lowest point) of the fitted surface.
    pub center_um: (f64, f64),
    /// Symmetry axis of the r², r⁴ terms; equals `center_um` when the
    /// quartic is not fitted.
    pub axis_center_um: (f64, f64),
    /// Height at the symmetry axis.
    pub vertex_height_um: f64,
    pub tilt: (f64, f64),
    /// r⁴ coefficient, µm⁻³ (0 when not fitted).
    pub quartic_coeff: f64,
    pub quartic_fitted: bool,
    pub rms_residual_nm: f64,
    pub fit_radius_used_um: f64,
    /// Center of the disc of samples entering the fit.
    pub disc_center_um: (f64, f64),
    pub points_used: usize,
}

impl ProfileFit {
    /// Model height at `(x, y)`, µm.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.axis_center_um.0;
        let dy = y - self.axis_center_um.1;
        let r2 = dx * dx + dy * dy;
        self.vertex_height_um
            + self.tilt.0 * dx
            + self.tilt.1 * dy
            + r2 / (2.0 * self.roc_um)
            + self.quartic_coeff * r2 * r2
    }

    /// `(x, y, residual_nm)` for every sample inside the fit disc.
    pub fn residuals(&self, map: &SurfaceMap) -> Vec<(f64, f64, f64)> {
        (0..map.len())
            .filter(|&i| in_disc(map.x()[i], map.y()[i], self.disc_center_um, self.fit_radius_used_um))
            .map(|i| {
                let (x, y) = (map.x()[i], map.y()[i]);
                (x, y, (map.z()[i] - self.height_at(x, y)) * 1e3)
            })
            .collect()
    }
}

fn in_disc(x: f64, y: f64, c: (f64, f64), r: f64) -> bool {
    let (dx, dy) = (x - c.0, y - c.1);
    dx * dx + dy * dy <= r * r
}

/// Disc samples relative to its center.
struct Disc {
    dx: Vec<f64>,
    dy: Vec<f64>,
    z: Vec<f64>,
}

fn select_disc(map: &SurfaceMap, center: (f64, f64), radius: f64) -> Result<Disc> {
    let (x0, x1, y0, y1) = map.extent();
    let slack = 0.5 * map.pitch_um() + 1e-9 * radius;
    if center.0 - radius < x0 - slack
        || center.0 + radius > x1 + slack
        || center.1 - radius < y0 - slack
        || center.1 + radius > y1 + slack
    {
        return Err(domain(format!(
            "fit radius {radius} µm around ({:.3}, {:.3}) exceeds the map extent x [{x0}, {x1}], y [{y0}, {y1}]",
            center.0, center.1
        )));
    }
    let mut d = Disc { dx: Vec::new(), dy: Vec::new(), z: Vec::new() };
    for i in 0..map.len() {
        if in_disc(map.x()[i], map.y()[i], center, radius) {
            d.dx.push(map.x()[i] - center.0);
            d.dy.push(map.y()[i] - center.1);
            d.z.push(map.z()[i]);
        }
    }
    Ok(d)
}

/// Linear least squares on `[1, dx, dy, r², (r⁴)]`.
struct LinearFit {
    coef: Vec<f64>,
    ssr: f64,
    /// Standard error of the r² coefficient.
    sigma_k: f64,
}

fn linear_fit(dx: &[f64], dy: &[f64], z: &[f64], shift: (f64, f64), quartic: bool) -> Result<LinearFit> {
    let m = z.len();
    let p = if quartic { 5 } else { 4 };
    if m <= p {
        return Err(Error::InsufficientData(format!("{m} samples in the fit disc for {p} coefficients")));
    }
    let mut a = DMatrix::zeros(m, p);
    for i in 0..m {
        let (u, v) = (dx[i] - shift.0, dy[i] - shift.1);
        let r2 = u * u + v * v;
        a[(i, 0)] = 1.0;
        a[(i, 1)] = u;
        a[(i, 2)] = v;
        a[(i, 3)] = r2;
        if quartic {
            a[(i, 4)] = r2 * r2;
        }
    }
    let norms: Vec<f64> = (0..p).map(|j| a.column(j).norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::Degenerate("design matrix has an all-zero column".into()));
    }
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOLERANCE * smax) {
        return Err(Error::Degenerate(format!(
            "rank-deficient surface design (condition {:.2e}); are the samples collinear?",
            smax / smin
        )));
    }
    let b = DVector::from_column_slice(z);
    let scaled = svd.solve(&b, 0.0).map_err(|e| Error::Degenerate(e.to_string()))?;
    let r = &a * &scaled - &b;
    let ssr = r.norm_squared();
    let v_t = svd.v_t.as_ref().expect("requested");
    let s2 = ssr / (m - p) as f64;
    let var_k = (0..p).map(|i| (v_t[(i, 3)] / svd.singular_values[i]).powi(2)).sum::<f64>() * s2;
    let coef = (0..p).map(|j| scaled[j] / norms[j]).collect();
    Ok(LinearFit { coef, ssr, sigma_k: var_k.sqrt() / norms[3] })
}

fn curvature_to_roc(k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Degenerate(format!("fitted surface is not concave (r² coefficient {k})")));
    }
    Ok(0.5 / k)
}

/// Offset of the stationary point of `a·u + b·v + k·r² + q·r⁴` from the
/// axis. The point lies along `−(a, b)` at the radius solving
/// `ρ·(2k + 4qρ²) = |(a, b)|`.
fn stationary_offset(a: f64, b: f64, k: f64, q: f64) -> (f64, f64) {
    let t = a.hypot(b);
    if t == 0.0 {
        return (0.0, 0.0);
    }
    let mut rho = t / (2.0 * k);
    for _ in 0..50 {
        let g = rho * (2.0 * k + 4.0 * q * rho * rho) - t;
        let dg = 2.0 * k + 12.0 * q * rho * rho;
        if !(dg > 0.0) {
            break;
        }
        let step = g / dg;
        rho -= step;
        if step.abs() <= 1e-15 * rho.abs().max(1.0) {
            break;
        }
    }
    (-a / t * rho, -b / t * rho)
}

/// Projected residual of the quartic model as a function of the center
/// offset (in units of the fit radius).
struct CenterProblem<'a> {
    disc: &'a Disc,
    radius: f64,
}

impl Problem for CenterProblem<'_> {
    fn params(&self) -> usize {
        2
    }

    fn observations(&self) -> usize {
        self.disc.z.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let shift = (p[0] * self.radius, p[1] * self.radius);
        match linear_fit(&self.disc.dx, &self.disc.dy, &self.disc.z, shift, true) {
            Ok(f) => {
                let c = &f.coef;
                for (i, o) in out.iter_mut().enumerate() {
                    let (u, v) = (self.disc.dx[i] - shift.0, self.disc.dy[i] - shift.1);
                    let r2 = u * u + v * v;
                    *o = c[0] + c[1] * u + c[2] * v + c[3] * r2 + c[4] * r2 * r2 - self.disc.z[i];
                }
            }
            Err(_) => out.fill(f64::NAN),
        }
    }

    fn scale(&self, _p: &[f64], _j: usize) -> f64 {
        1.0
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let m = self.observations();
        let (mut lo, mut hi) = (vec![0.0; m], vec![0.0; m]);
        let mut q = p.to_vec();
        for j in 0..2 {
            q[j] = p[j] + CENTER_STEP;
            self.residuals(&q, &mut hi);
            q[j] = p[j] - CENTER_STEP;
            self.residuals(&q, &mut lo);
            q[j] = p[j];
            for i in 0..m {
                jac[(i, j)] = (hi[i] - lo[i]) / (2.0 * CENTER_STEP);
            }
        }
    }
}

/// Fits `z₀ + a·(x−x₀) + b·(y−y₀) + r²/(2R) [+ c₄·r⁴]` to the samples within
/// `fit_radius_um` of the depression vertex.
///
/// The disc is located by starting at the lowest sample and moving to the
/// vertex of a paraboloid fit; it does not depend on `include_quartic`, so
/// the two models are nested on identical data.
pub fn fit_mirror_profile(map: &SurfaceMap, fit_radius_um: f64, include_quartic: bool) -> Result<ProfileFit> {
    if !(fit_radius_um.is_finite() && fit_radius_um > 0.0) {
        return Err(domain(format!("fit radius must be positive, got {fit_radius_um} µm")));
    }
    let (x0, x1, y0, y1) = map.extent();
    if x1 == x0 || y1 == y0 {
        return Err(Error::Degenerate("surface samples are collinear".into()));
    }
    let lowest = (0..map.len()).min_by(|&a, &b| map.z()[a].total_cmp(&map.z()[b])).expect("non-empty map");
    let mut center = (map.x()[lowest], map.y()[lowest]);
    for _ in 0..VERTEX_PASSES {
        let d = select_disc(map, center, fit_radius_um)?;
        let f = linear_fit(&d.dx, &d.dy, &d.z, (0.0, 0.0), false)?;
        let k = f.coef[3];
        curvature_to_roc(k)?;
        center = (center.0 - f.coef[1] / (2.0 * k), center.1 - f.coef[2] / (2.0 * k));
    }
    let disc = select_disc(map, center, fit_radius_um)?;
    let m = disc.z.len();

    if !include_quartic {
        let f = linear_fit(&disc.dx, &disc.dy, &disc.z, (0.0, 0.0), false)?;
        let c = &f.coef;
        let k = c[3];
        let roc = curvature_to_roc(k)?;
        let (vx, vy) = (-c[1] / (2.0 * k), -c[2] / (2.0 * k));
        return Ok(ProfileFit {
            roc_um: roc,
            roc_sigma_um: f.sigma_k / (2.0 * k * k),
            center_um: (center.0 + vx, center.1 + vy),
            axis_center_um: (center.0 + vx, center.1 + vy),
            vertex_height_um: c[0] - (c[1] * c[1] + c[2] * c[2]) / (4.0 * k),
            tilt: (0.0, 0.0),
            quartic_coeff: 0.0,
            quartic_fitted: false,
            rms_residual_nm: (f.ssr / m as f64).sqrt() * 1e3,
            fit_radius_used_um: fit_radius_um,
            disc_center_um: center,
            points_used: m,
        });
    }

    let problem = CenterProblem { disc: &disc, radius: fit_radius_um };
    let sol = LevenbergMarquardt::default().solve(&problem, &[0.0, 0.0])?;
    let shift = (sol.params[0] * fit_radius_um, sol.params[1] * fit_radius_um);
    let f = linear_fit(&disc.dx, &disc.dy, &disc.z, shift, true)?;
    let c = &f.coef;
    let roc = curvature_to_roc(c[3])?;
    let axis = (center.0 + shift.0, center.1 + shift.1);
    let (sx, sy) = stationary_offset(c[1], c[2], c[3], c[4]);
    Ok(ProfileFit {
        roc_um: roc,
        roc_sigma_um: f.sigma_k / (2.0 * c[3] * c[3]),
        center_um: (axis.0 + sx, axis.1 + sy),
        axis_center_um: axis,
        vertex_height_um: c[0],
        tilt: (c[1], c[2]),
        quartic_coeff: c[4],
        quartic_fitted: true,
        rms_residual_nm: (f.ssr / m as f64).sqrt() * 1e3,
        fit_radius_used_um: fit_radius_um,
        disc_center_um: center,
        points_used: m,
    })
}

/// Cap radius estimated from the map alone: depth from the height range and
/// ROC from a paraboloid fit to the lowest quarter of the depression.
pub fn estimate_cap_radius(map: &SurfaceMap) -> Result<f64> {
    let zmin = map.z().iter().cloned().fold(f64::INFINITY, f64::min);
    let zmax = map.z().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let depth = zmax - zmin;
    let lowest = (0..map.len()).min_by(|&a, &b| map.z()[a].total_cmp(&map.z()[b])).expect("non-empty map");
    let (cx, cy) = (map.x()[lowest], map.y()[lowest]);
    let mut d = Disc { dx: Vec::new(), dy: Vec::new(), z: Vec::new() };
    for i in 0..map.len() {
        if map.z()[i] - zmin <= 0.25 * depth {
            d.dx.push(map.x()[i] - cx);
            d.dy.push(map.y()[i] - cy);
            d.z.push(map.z()[i]);
        }
    }
    let f = linear_fit(&d.dx, &d.dy, &d.z, (0.0, 0.0), false)?;
    aperture_from_cap(curvature_to_roc(f.coef[3])?, depth)
}

/// Fits one synthetic map per seed.
pub fn fit_noise_study(
    cfg: &SurfaceConfig,
    seeds: &[u64],
    fit_radius_um: f64,
    include_quartic: bool,
    exec: Execution,
) -> Vec<Result<ProfileFit>> {
    exec.map(seeds, |&seed| {
        let map = synthesize_surface(&SurfaceConfig { seed, ..*cfg })?;
        fit_mirror_profile(&map, fit_radius_um, include_quartic)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn radius(r: f64, d: f64) -> f64 {
        DEFAULT_FIT_FRACTION * aperture_from_cap(r, d).unwrap()
    }

    #[test]
    fn perfect_paraboloid_is_exact() {
        let map = synthesize_surface(&SurfaceConfig::new(105.6, 8.5)).unwrap();
        for quartic in [false, true] {
            let f = fit_mirror_profile(&map, radius(105.6, 8.5), quartic).unwrap();
            assert!((f.roc_um / 105.6 - 1.0).abs() < 1e-9, "{quartic}: {}", f.roc_um);
            assert!(f.rms_residual_nm < 1e-6);
            assert!(f.center_um.0.abs() < 1e-9 && f.center_um.1.abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn quartic_surface_with_noise() {
        let cfg = SurfaceConfig::new(69.3, 4.5).with_quartic(-1e-5).with_noise(1.0, 11).with_pitch(0.5);
        let map = synthesize_surface(&cfg).unwrap();
        let rad = radius(69.3, 4.5);
        let with = fit_mirror_profile(&map, rad, true).unwrap();
        let without = fit_mirror_profile(&map, rad, false).unwrap();
        assert!((with.roc_um / 69.3 - 1.0).abs() < 0.01, "{}", with.roc_um);
        assert!((with.quartic_coeff + 1e-5).abs() < 2e-6, "{}", with.quartic_coeff);
        assert!(without.rms_residual_nm > with.rms_residual_nm);
        assert!((without.roc_um / 69.3 - 1.0).abs() > 0.01, "{}", without.roc_um);
        assert!(with.roc_sigma_um > 0.0);
    }

    #[test]
    fn center_is_the_surface_vertex() {
        let cfg = SurfaceConfig::new(105.6, 8.5).with_noise(1.0, 8);
        let map = synthesize_surface(&cfg).unwrap().transformed(3.0, -2.0, 0.0, 0.0, 0.0).unwrap();
        let rad = radius(105.6, 8.5);
        let with = fit_mirror_profile(&map, rad, true).unwrap();
        let without = fit_mirror_profile(&map, rad, false).unwrap();
        for f in [with, without] {
            assert!((f.center_um.0 - 3.0).abs() < 0.05 && (f.center_um.1 + 2.0).abs() < 0.05, "{f:?}");
        }
        let h = |x: f64, y: f64| with.height_at(x, y);
        let (cx, cy) = with.center_um;
        let e = 1e-3;
        assert!((h(cx + e, cy) - h(cx - e, cy)).abs() < 1e-9 && (h(cx, cy + e) - h(cx, cy - e)).abs() < 1e-9);
    }

    #[test]
    fn stationary_point_of_quartic_bowl() {
        let (a, b, k, q) = (0.03, -0.04, 0.005, -1e-7);
        let (u, v) = stationary_offset(a, b, k, q);
        let r2 = u * u + v * v;
        assert!((a + 2.0 * k * u + 4.0 * q * r2 * u).abs() < 1e-14);
        assert!((b + 2.0 * k * v + 4.0 * q * r2 * v).abs() < 1e-14);
        assert_eq!(stationary_offset(0.0, 0.0, k, q), (0.0, 0.0));
    }

    #[test]
    fn oversized_disc_and_collinear_points_fail() {
        let map = synthesize_surface(&SurfaceConfig::new(69.3, 4.5)).unwrap();
        assert!(matches!(fit_mirror_profile(&map, 100.0, false), Err(Error::Domain(_))));
        let x: Vec<f64> = (-20..20).map(|i| i as f64).collect();
        let line = SurfaceMap::new(x.clone(), x.clone(), x.iter().map(|v| v * v).collect()).unwrap();
        assert!(matches!(fit_mirror_profile(&line, 5.0, false), Err(Error::Degenerate(_))));
    }

    #[test]
    fn cap_radius_estimate() {
        let map = synthesize_surface(&SurfaceConfig::new(105.6, 8.5)).unwrap();
        let a = estimate_cap_radius(&map).unwrap();
        assert!((a - 41.5).abs() < 0.1, "{a}");
    }

    #[test]
    fn noise_scaling_is_linear() {
        let seeds: Vec<u64> = (0..100).collect();
        let base = SurfaceConfig::new(105.6, 8.5).with_pitch(1.0);
        let rad = radius(105.6, 8.5);
        let sd = |noise: f64| {
            let rs: Vec<f64> = fit_noise_study(&base.with_noise(noise, 0), &seeds, rad, false, Execution::Parallel)
                .into_iter()
                .map(|f| f.unwrap().roc_um)
                .collect();
            let mean = rs.iter().sum::<f64>() / rs.len() as f64;
            (rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rs.len() - 1) as f64).sqrt()
        };
        let (s05, s1, s2) = (sd(0.5), sd(1.0), sd(2.0));
        assert!((s1 / s05 - 2.0).abs() < 0.2, "{s05} {s1}");
        assert!((s2 / s1 - 2.0).abs() < 0.2, "{s1} {s2}");
    }

    #[test]
    fn study_paths_agree() {
        let seeds: Vec<u64> = (0..6).collect();
        let cfg = SurfaceConfig::new(69.3, 4.5).with_quartic(-1e-5).with_noise(1.0, 0).with_pitch(1.0);
        let rad = radius(69.3, 4.5);
        let a = fit_noise_study(&cfg, &seeds, rad, true, Execution::Sequential);
        let b = fit_noise_study(&cfg, &seeds, rad, true, Execution::Parallel);
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_and_tilt_do_not_change_roc(
            dx in -5.0f64..5.0, dy in -5.0f64..5.0, offset in -3.0f64..3.0,
            tx in -0.02f64..0.02, ty in -0.02f64..0.02, quartic in any::<bool>(),
        ) {
            let map = synthesize_surface(&SurfaceConfig::new(105.6, 8.5)).unwrap();
            let moved = map.transformed(dx, dy, offset, tx, ty).unwrap();
            let rad = radius(105.6, 8.5);
            let a = fit_mirror_profile(&map, rad, quartic).unwrap().roc_um;
            let b = fit_mirror_profile(&moved, rad, quartic).unwrap().roc_um;
            prop_assert!((a / b - 1.0).abs() < 1e-9, "{} vs {}", a, b);
        }

        #[test]
        fn quartic_never_increases_residual(c4 in -1e-5f64..1e-5, noise in 0.1f64..3.0, seed in 0u64..1000) {
            let cfg = SurfaceConfig::new(69.3, 4.5).with_quartic(c4).with_noise(noise, seed).with_pitch(1.0);
            let map = synthesize_surface(&cfg).unwrap();
            let rad = radius(69.3, 4.5);
            let with = fit_mirror_profile(&map, rad, true).unwrap();
            let without = fit_mirror_profile(&map, rad, false).unwrap();
            prop_assert!(with.rms_residual_nm <= without.rms_residual_nm);
        }

        #[test]
        fn noiseless_closure(r in 50.0f64..150.0, depth_frac in 0.03f64..0.1, frac in -0.5f64..0.5) {
            let depth = r * depth_frac;
            // keep the depression monotone out to the cap edge
            let c4 = frac / (4.0 * r * aperture_from_cap(r, depth).unwrap().powi(2));
            let map = synthesize_surface(&SurfaceConfig::new(r, depth).with_quartic(c4)).unwrap();
            let f = fit_mirror_profile(&map, radius(r, depth), true).unwrap();
            prop_assert!((f.roc_um / r - 1.0).abs() < 1e-6, "{} vs {}", f.roc_um, r);
        }
    }
}
