pub mod design;
pub mod profile;
pub mod spectrum;
pub mod sweep;
pub mod table1;

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use microcavity::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TopologyArg {
    Pc,
    Cc,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Pc => Topology::PlanoConcave,
            TopologyArg::Cc => Topology::ConcaveConcave,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

/// Strictly positive, finite float.
pub fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

/// Finite float, zero allowed, negatives rejected.
pub fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be non-negative, got {s}"))
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

/// `v` with `digits` significant digits, plain or scientific depending on
/// magnitude.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-3..6).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{:.*e}", digits.saturating_sub(1), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(3.05391, 3), "3.05");
        assert_eq!(sig(628318.5, 3), "628318");
        assert_eq!(sig(4.1e6, 3), "4.10e6");
        assert_eq!(sig(0.000123, 2), "1.2e-4");
    }

    #[test]
    fn value_parsers() {
        assert!(positive("0").is_err());
        assert!(positive("-1").is_err());
        assert!(positive("nan").is_err());
        assert_eq!(positive("8.7"), Ok(8.7));
        assert_eq!(non_negative("0"), Ok(0.0));
    }
}
