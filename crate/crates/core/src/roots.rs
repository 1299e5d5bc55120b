//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Number of grid cells used to scan a bracket for sign changes.
pub const DEFAULT_SCAN_CELLS: usize = 4096;

/// Refines a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs (or one of them is zero), by bisection down to the floating
/// point resolution of the bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the minimum of `|f|` on `[a, b]`.
fn min_abs<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..120 {
        if f(c).abs() < f(d).abs() {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    0.5 * (a + b)
}

/// Finds all roots of `f` in `(lo, hi)` by scanning `cells` uniform cells for
/// sign changes and refining each by bisection. Cells where `|f|` has a local
/// minimum without a sign change are searched for a hidden pair of close roots.
///
/// Roots are returned in increasing order. An empty vector is returned if no
/// root is found; use [`find_smallest_root`] for the error-reporting variant.
pub fn find_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let cells = cells.max(2);
    let xs: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..cells {
        let (fa, fb) = (fs[i], fs[i + 1]);
        if fa == 0.0 {
            if i > 0 {
                roots.push(xs[i]);
            }
            continue;
        }
        if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
            roots.push(bisect(&f, xs[i], xs[i + 1]));
        }
        // |f| dips toward zero at an interior grid point without changing sign
        if i > 0 && fa != 0.0 {
            let (fp, fc, fnx) = (fs[i - 1], fa, fb);
            let same_sign = (fp < 0.0) == (fc < 0.0) && (fc < 0.0) == (fnx < 0.0);
            if same_sign && fc.abs() < fp.abs() && fc.abs() < fnx.abs() {
                let xm = min_abs(&f, xs[i - 1], xs[i + 1]);
                let fm = f(xm);
                if fm == 0.0 {
                    roots.push(xm);
                } else if (fm < 0.0) != (fc < 0.0) {
                    roots.push(bisect(&f, xs[i - 1], xm));
                    roots.push(bisect(&f, xm, xs[i + 1]));
                }
            }
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(b.abs()));
    roots
}

/// Returns every root in the bracket (smallest first), or
/// [`Error::NoSolution`] carrying the residual at both ends.
pub fn find_smallest_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let roots = find_roots(&f, lo, hi, DEFAULT_SCAN_CELLS);
    if roots.is_empty() {
        return Err(Error::NoSolution { lo, hi, f_lo: f(lo), f_hi: f(hi) });
    }
    Ok(roots)
}
