//! Coarse dip detection.

use super::{ResonancePeak, Spectrum};

const SMOOTHING_WINDOW: usize = 5;

/// Robust estimate of the white-noise level from first differences.
pub fn estimate_noise_sigma(spec: &Spectrum) -> f64 {
    let mut d: Vec<f64> = spec.signal().windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    d.sort_by(|a, b| a.total_cmp(b));
    1.4826 * d[d.len() / 2] / std::f64::consts::SQRT_2
}

/// Contrast threshold that keeps noise excursions out: six noise sigmas,
/// but at least 0.02.
pub fn auto_contrast_threshold(spec: &Spectrum) -> f64 {
    (6.0 * estimate_noise_sigma(spec)).max(0.02)
}

fn smooth(signal: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = signal.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            signal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Linear interpolation of the x where `depth` crosses `level` between
/// samples `a` (above level) and `b` (below).
fn crossing(x: &[f64], depth: &[f64], a: usize, b: usize, level: f64) -> f64 {
    let t = (depth[a] - level) / (depth[a] - depth[b]);
    x[a] + t * (x[b] - x[a])
}

/// Finds reflection dips deeper than `min_contrast` (relative to a unit
/// baseline). Centers are sample positions of the smoothed minimum, widths
/// come from half-depth crossings. Output is sorted by center.
pub fn detect_peaks(spec: &Spectrum, min_contrast: f64) -> Vec<ResonancePeak> {
    let x = spec.x();
    let n = x.len();
    let window = if n >= 50 { SMOOTHING_WINDOW } else { 1 };
    let depth: Vec<f64> = smooth(spec.signal(), window).iter().map(|s| 1.0 - s).collect();
    let noise = estimate_noise_sigma(spec) / (window as f64).sqrt();
    let min_prominence = (0.5 * min_contrast).max(5.0 * noise);

    let mut found: Vec<(usize, ResonancePeak)> = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(depth[i] > depth[i - 1] && depth[i] >= depth[i + 1]) || depth[i] < min_contrast {
            i += 1;
            continue;
        }
        // plateau: take its middle
        let mut j = i;
        while j + 1 < n && depth[j + 1] == depth[i] {
            j += 1;
        }
        let top = (i + j) / 2;
        let d = depth[top];

        let mut left_min = d;
        let mut k = top;
        while k > 0 && depth[k - 1] <= d {
            k -= 1;
            left_min = left_min.min(depth[k]);
        }
        let mut right_min = d;
        let mut k = top;
        while k + 1 < n && depth[k + 1] <= d {
            k += 1;
            right_min = right_min.min(depth[k]);
        }
        let prominence = d - left_min.max(right_min);
        if prominence >= min_prominence {
            let half = 0.5 * d;
            let mut lo = top;
            while lo > 0 && depth[lo] >= half && depth[lo - 1] <= d {
                lo -= 1;
            }
            let left = (depth[lo] < half).then(|| crossing(x, &depth, lo + 1, lo, half));
            let mut hi = top;
            while hi + 1 < n && depth[hi] >= half && depth[hi + 1] <= d {
                hi += 1;
            }
            let right = (depth[hi] < half).then(|| crossing(x, &depth, hi - 1, hi, half));
            let step = x[(top + 1).min(n - 1)] - x[top.saturating_sub(1)];
            let fwhm = match (left, right) {
                (Some(l), Some(r)) => r - l,
                (Some(l), None) => 2.0 * (x[top] - l),
                (None, Some(r)) => 2.0 * (r - x[top]),
                (None, None) => x[hi] - x[lo],
            }
            .max(0.5 * step);
            found.push((top, ResonancePeak { center: x[top], fwhm, contrast: d.min(1.0), assignment: None }));
        }
        i = j + 1;
    }

    // overlapping detections of one dip: keep the deeper
    let mut merged: Vec<ResonancePeak> = Vec::with_capacity(found.len());
    for (_, p) in found {
        if let Some(last) = merged.last_mut() {
            if p.center - last.center < 0.5 * last.fwhm.max(p.fwhm) {
                if p.contrast > last.contrast {
                    *last = p;
                }
                continue;
            }
        }
        merged.push(p);
    }
    merged
}
