//! Mirror surface maps: ingestion, synthetic depressions, and the
//! paraboloid-plus-quartic fit that yields the radius of curvature.

mod fit;
mod synth;

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use fit::{estimate_cap_radius, fit_mirror_profile, fit_noise_study, ProfileFit, DEFAULT_FIT_FRACTION};
pub use synth::{synthesize_surface, SurfaceConfig};

use crate::error::{domain, Error, Result};

/// Minimum number of height samples in a map.
pub const MIN_SURFACE_POINTS: usize = 25;

/// Aperture radius of a spherical cap of curvature `roc_um` and depth
/// `depth_um`: `√(2·R·d − d²)`.
pub fn aperture_from_cap(roc_um: f64, depth_um: f64) -> Result<f64> {
    if !(roc_um.is_finite() && roc_um > 0.0) {
        return Err(domain(format!("ROC must be positive, got {roc_um} µm")));
    }
    if !(depth_um.is_finite() && depth_um > 0.0) {
        return Err(domain(format!("cap depth must be positive, got {depth_um} µm")));
    }
    if depth_um >= roc_um {
        return Err(domain(format!("cap depth {depth_um} µm must be below the ROC {roc_um} µm")));
    }
    Ok((2.0 * roc_um * depth_um - depth_um * depth_um).sqrt())
}

/// Height samples `(x, y, z)` in µm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMap {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    pitch_um: f64,
}

impl SurfaceMap {
    /// Validates the samples; the lateral pitch is inferred from the x
    /// coordinates.
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != z.len() {
            return Err(domain("x, y and z must have equal length"));
        }
        if x.len() < MIN_SURFACE_POINTS {
            return Err(Error::InsufficientData(format!(
                "surface map needs at least {MIN_SURFACE_POINTS} points, got {}",
                x.len()
            )));
        }
        if x.iter().chain(&y).chain(&z).any(|v| !v.is_finite()) {
            return Err(domain("surface map contains non-finite values"));
        }
        let mut seen = HashSet::with_capacity(x.len());
        for (a, b) in x.iter().zip(&y) {
            if !seen.insert((a.to_bits(), b.to_bits())) {
                return Err(domain(format!("duplicate sample at ({a}, {b})")));
            }
        }
        let pitch_um = infer_pitch(&x).or_else(|| infer_pitch(&y)).unwrap_or(0.0);
        Ok(Self { x, y, z, pitch_um })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Typical lateral sample spacing, µm (0 if all x coincide).
    pub fn pitch_um(&self) -> f64 {
        self.pitch_um
    }

    /// `(x_min, x_max, y_min, y_max)`.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        let fold = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        let (x0, x1) = fold(&self.x);
        let (y0, y1) = fold(&self.y);
        (x0, x1, y0, y1)
    }

    /// Shifts the map laterally by `(dx, dy)` and adds the plane
    /// `offset + tilt_x·x + tilt_y·y` (evaluated at the shifted position).
    pub fn transformed(&self, dx: f64, dy: f64, offset: f64, tilt_x: f64, tilt_y: f64) -> Result<Self> {
        let x: Vec<f64> = self.x.iter().map(|v| v + dx).collect();
        let y: Vec<f64> = self.y.iter().map(|v| v + dy).collect();
        let z = self.z.iter().zip(x.iter().zip(&y)).map(|(z, (x, y))| z + offset + tilt_x * x + tilt_y * y).collect();
        Self::new(x, y, z)
    }
}

fn infer_pitch(v: &[f64]) -> Option<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| a.total_cmp(b));
    u.dedup();
    let mut d: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Some(d[d.len() / 2])
}

/// Reads a map with header `x_um,y_um,z_um`.
pub fn read_surface_csv<R: Read>(reader: R) -> Result<SurfaceMap> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(xi), Some(yi), Some(zi)) = (col("x_um"), col("y_um"), col("z_um")) else {
        return Err(Error::Format(format!(
            "surface CSV needs a header 'x_um,y_um,z_um', found '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    };
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field.parse().map_err(|_| Error::Format(format!("row {}: cannot parse '{field}'", row + 2)))
        };
        x.push(parse(xi)?);
        y.push(parse(yi)?);
        z.push(parse(zi)?);
    }
    if x.is_empty() {
        return Err(Error::Format("surface CSV has no data rows".into()));
    }
    SurfaceMap::new(x, y, z)
}

pub fn write_surface_csv<W: Write>(writer: W, map: &SurfaceMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x_um", "y_um", "z_um"])?;
    for i in 0..map.len() {
        w.write_record([map.x[i].to_string(), map.y[i].to_string(), map.z[i].to_string()])?;
    }
    w.flush()?;
    Ok(())
}
