//! Order statistics, bootstrap intervals and circular statistics.

use crate::rng::StreamRng;

/// Quantile with linear interpolation between order statistics
/// (position `p·(n − 1)` in the sorted sample). Panics on an empty sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(xs), p)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Interquartile range, linear interpolation. `{0, 1}` gives `0.5`.
pub fn iqr(xs: &[f64]) -> f64 {
    let s = sorted(xs);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Percentile bootstrap interval of `statistic` at coverage `level`.
pub fn bootstrap_ci<F>(xs: &[f64], statistic: F, resamples: usize, level: f64, seed: u64) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    if xs.is_empty() || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut buf = vec![0.0; xs.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|r| {
            let mut rng = StreamRng::new(seed, 0xb007, r as u64);
            for slot in buf.iter_mut() {
                *slot = xs[rng.index(xs.len())];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
}

/// Paired bootstrap for a statistic of two samples, resampled independently.
pub fn bootstrap_ci2<F>(xs: &[f64], ys: &[f64], statistic: F, resamples: usize, level: f64, seed: u64) -> (f64, f64)
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut bx = vec![0.0; xs.len()];
    let mut by = vec![0.0; ys.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|r| {
            let mut rng = StreamRng::new(seed, 0xb002, r as u64);
            for slot in bx.iter_mut() {
                *slot = xs[rng.index(xs.len())];
            }
            for slot in by.iter_mut() {
                *slot = ys[rng.index(ys.len())];
            }
            statistic(&bx, &by)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
}

/// Distribution-free confidence interval for the median from order
/// statistics (normal approximation to the binomial, 95%).
pub fn median_ci_sorted(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let half = 1.96 * (n as f64).sqrt() / 2.0;
    let mid = n as f64 / 2.0;
    let lo = ((mid - half).floor().max(0.0)) as usize;
    let hi = ((mid + half).ceil() as usize).min(n - 1);
    (sorted[lo.min(n - 1)], sorted[hi])
}

/// Circular summary of angles: mean direction, resultant length `R` and
/// circular standard deviation `√(−2 ln R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularStats {
    pub mean: f64,
    pub resultant: f64,
    pub std_dev: f64,
}

pub fn circular_stats(angles: &[f64]) -> CircularStats {
    let n = angles.len() as f64;
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let (s, c) = (s / n, c / n);
    let mean = s.atan2(c);
    let resultant = s.hypot(c).min(1.0);
    if resultant == 0.0 {
        return CircularStats { mean, resultant, std_dev: f64::INFINITY };
    }
    // 1 − R from deviations about the mean keeps precision for tight samples.
    let deficit = angles.iter().map(|a| 2.0 * ((a - mean) / 2.0).sin().powi(2)).sum::<f64>() / n;
    let std_dev = if deficit < 0.5 {
        (-2.0 * (-deficit).ln_1p()).max(0.0).sqrt()
    } else {
        (-2.0 * resultant.ln()).max(0.0).sqrt()
    };
    CircularStats { mean, resultant, std_dev }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn two_point_iqr_is_half() {
        assert_eq!(iqr(&[0.0, 1.0]), 0.5);
        assert_eq!(iqr(&[3.0; 5]), 0.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let a = bootstrap_ci(&xs, mean, 500, 0.95, 9);
        let b = bootstrap_ci(&xs, mean, 500, 0.95, 9);
        assert_eq!(a, b);
        assert!(a.0 < 99.5 && 99.5 < a.1);
    }

    #[test]
    fn circular_constant_field() {
        let c = circular_stats(&[FRAC_PI_2; 16]);
        assert!((c.mean - FRAC_PI_2).abs() < 1e-15);
        assert!(c.std_dev < 1e-12);
    }

    #[test]
    fn circular_uniform_has_vanishing_resultant() {
        let n = 1024;
        let angles: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * (j as f64 + 1.0) / n as f64).collect();
        let c = circular_stats(&angles);
        assert!(c.resultant < 1e-12);
        assert!(c.std_dev > 5.0);
    }

    #[test]
    fn circular_mean_wraps() {
        let c = circular_stats(&[PI - 0.1, -PI + 0.1]);
        assert!((c.mean.abs() - PI).abs() < 1e-12);
    }
}
