//! Peak and dip detection on a sampled spectrum.
//!
//! Local maxima are interior samples strictly above both neighbours, with
//! flat tops resolved to their lowest-frequency sample. Prominence and
//! width follow the usual topographic definitions: the prominence is the
//! height above the higher of the two lowest points reached before climbing
//! above the peak on either side, the width is measured at half that
//! prominence with linear interpolation between samples.

use alloc::vec::Vec;

// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    /// Minimum peak prominence as a fraction of the global maximum.
    pub peak_threshold: f64,
    /// Minimum dip prominence as a fraction of the global maximum.
    pub dip_threshold: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self { peak_threshold: 0.02, dip_threshold: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub omega: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence, in the units of the grid.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    pub index: usize,
    pub omega: f64,
    pub value: f64,
    /// Prominence of the minimum, i.e. how far it sits below the lower of
    /// its two bounding maxima.
    pub depth: f64,
}

/// Indices of local maxima, plateaus reported at their left edge.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push(i);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Prominence of the maximum at `peak` with the indices of its left and right bases.
pub fn prominence(x: &[f64], peak: usize) -> (f64, usize, usize) {
    let h = x[peak];
    let mut left_base = peak;
    let mut left_min = h;
    let mut i = peak;
    while i > 0 {
        i -= 1;
        if x[i] > h {
            break;
        }
        if x[i] < left_min {
            left_min = x[i];
            left_base = i;
        }
    }
    let mut right_base = peak;
    let mut right_min = h;
    for (j, &v) in x.iter().enumerate().skip(peak + 1) {
        if v > h {
            break;
        }
        if v < right_min {
            right_min = v;
            right_base = j;
        }
    }
    (h - left_min.max(right_min), left_base, right_base)
}

fn interpolate(grid: &[f64], x: &[f64], i: usize, j: usize, level: f64) -> f64 {
    // x[i] and x[j] bracket `level`
    let (xi, xj) = (x[i], x[j]);
    if xi == xj {
        return grid[i];
    }
    grid[i] + (grid[j] - grid[i]) * (level - xi) / (xj - xi)
}

fn half_prominence_width(grid: &[f64], x: &[f64], peak: usize, prom: f64, bases: (usize, usize)) -> f64 {
    let level = x[peak] - 0.5 * prom;
    let mut i = peak;
    while i > bases.0 && x[i] > level {
        i -= 1;
    }
    let left = if x[i] < level { interpolate(grid, x, i, i + 1, level) } else { grid[i] };
    let mut j = peak;
    while j < bases.1 && x[j] > level {
        j += 1;
    }
    let right = if x[j] < level { interpolate(grid, x, j - 1, j, level) } else { grid[j] };
    right - left
}

fn global_max(x: &[f64]) -> f64 {
    x.iter().copied().fold(0.0, f64::max)
}

/// Peaks of `density` sampled on the increasing `grid`, ordered by frequency.
pub fn detect_peaks(grid: &[f64], density: &[f64], cfg: &PeakConfig) -> Vec<Peak> {
    let top = global_max(density);
    if top <= 0.0 {
        return Vec::new();
    }
    let threshold = cfg.peak_threshold * top;
    local_maxima(density)
        .into_iter()
        .filter_map(|i| {
            let (prom, lb, rb) = prominence(density, i);
            (prom >= threshold && prom > 0.0).then(|| Peak {
                index: i,
                omega: grid[i],
                height: density[i],
                prominence: prom,
                width: half_prominence_width(grid, density, i, prom, (lb, rb)),
            })
        })
        .collect()
}

/// Local minima lying strictly between the outermost of `peaks`.
pub fn detect_dips(grid: &[f64], density: &[f64], peaks: &[Peak], cfg: &PeakConfig) -> Vec<Dip> {
    if peaks.len() < 2 {
        return Vec::new();
    }
    let lo = peaks.iter().map(|p| p.index).min().unwrap_or(0);
    let hi = peaks.iter().map(|p| p.index).max().unwrap_or(0);
    let threshold = cfg.dip_threshold * global_max(density);
    let flipped: Vec<f64> = density.iter().map(|v| -v).collect();
    local_maxima(&flipped)
        .into_iter()
        .filter(|&i| i > lo && i < hi)
        .filter_map(|i| {
            let (depth, _, _) = prominence(&flipped, i);
            (depth >= threshold && depth > 0.0).then(|| Dip { index: i, omega: grid[i], value: density[i], depth })
        })
        .collect()
}

/// Decades between a dip and the lower of the nearest detected peaks on
/// either side of it. Infinite for an exact zero.
pub fn log_contrast(dip: &Dip, peaks: &[Peak]) -> Option<f64> {
    let left = peaks.iter().filter(|p| p.index < dip.index).max_by_key(|p| p.index)?;
    let right = peaks.iter().filter(|p| p.index > dip.index).min_by_key(|p| p.index)?;
    let rim = left.height.min(right.height);
    Some(if dip.value > 0.0 { (rim / dip.value).log10() } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn grid(n: usize, dx: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dx).collect()
    }

    fn lorentz(w: f64, w0: f64, g: f64) -> f64 {
        g * g / ((w - w0) * (w - w0) + g * g)
    }

    #[test]
    fn single_bump() {
        let w = grid(401, 0.1);
        let d: Vec<f64> = w.iter().map(|&x| lorentz(x, 17.33, 1.5)).collect();
        let p = detect_peaks(&w, &d, &PeakConfig::default());
        assert_eq!(p.len(), 1);
        let argmax = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(p[0].index, argmax);
        // half of the prominence, which is measured from the higher tail
        let base = d[0].max(d[400]);
        let level = d[argmax] - 0.5 * (d[argmax] - base);
        let half = (1.5f64 * 1.5 * (1.0 / level - 1.0)).sqrt();
        assert!((p[0].width - 2.0 * half).abs() < 0.02, "{}", p[0].width);
        assert!(detect_dips(&w, &d, &p, &PeakConfig::default()).is_empty());
    }

    #[test]
    fn symmetric_pair_and_dip() {
        let w = grid(601, 0.1);
        let d: Vec<f64> = w.iter().map(|&x| lorentz(x, 25.0, 1.0) + lorentz(x, 35.0, 1.0)).collect();
        let cfg = PeakConfig::default();
        let p = detect_peaks(&w, &d, &cfg);
        assert_eq!(p.len(), 2);
        assert_relative_eq!(p[1].height / p[0].height, 1.0, max_relative = 1e-12);
        assert_relative_eq!(p[1].omega - p[0].omega, 10.0, max_relative = 1e-9);
        let dips = detect_dips(&w, &d, &p, &cfg);
        assert_eq!(dips.len(), 1);
        assert_relative_eq!(dips[0].omega, 30.0, max_relative = 1e-9);
        assert_relative_eq!(dips[0].depth, d[p[0].index] - d[dips[0].index], max_relative = 1e-12);
        let c = log_contrast(&dips[0], &p).unwrap();
        assert_relative_eq!(c, (d[p[0].index] / d[dips[0].index]).log10(), max_relative = 1e-12);
    }

    #[test]
    fn plateau_resolves_to_lowest_frequency() {
        let x = [0.0, 1.0, 3.0, 3.0, 3.0, 1.0, 0.0];
        assert_eq!(local_maxima(&x), vec![2]);
        // a plateau that keeps rising is not a peak
        let x = [0.0, 2.0, 2.0, 3.0, 1.0];
        assert_eq!(local_maxima(&x), vec![3]);
        // edges never count
        assert!(local_maxima(&[5.0, 1.0, 0.0]).is_empty());
    }

    #[test]
    fn small_ripples_are_filtered() {
        let w = grid(501, 0.1);
        let d: Vec<f64> = w
            .iter()
            .map(|&x| lorentz(x, 25.0, 2.0) + 1e-3 * (7.0 * x).sin())
            .collect();
        let p = detect_peaks(&w, &d, &PeakConfig::default());
        assert_eq!(p.len(), 1);
        let loose = PeakConfig { peak_threshold: 1e-5, dip_threshold: 1e-5 };
        assert!(detect_peaks(&w, &d, &loose).len() > 5);
    }

    #[test]
    fn empty_and_flat() {
        let w = grid(10, 1.0);
        assert!(detect_peaks(&w, &[0.0; 10], &PeakConfig::default()).is_empty());
        assert!(detect_peaks(&[], &[], &PeakConfig::default()).is_empty());
    }
}
