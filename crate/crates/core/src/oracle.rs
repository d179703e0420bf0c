//! Brute-force references: eigenvalues of the truncated operator on
//! `{0, …, N−1}` with Dirichlet ends, and quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::torus::{FrequencyVector, Orbit, TorusPoint, TrigPotential};

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() − 1`), ascending. Implicit QL
/// with Wilkinson shifts.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()), "off-diagonal length");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Eigenvalues of `H(θ₀)` restricted to `{0, …, n−1}`.
pub fn truncated_eigenvalues(pot: &TrigPotential, alpha: &FrequencyVector, theta0: &TorusPoint, n: usize) -> Vec<f64> {
    let orbit = Orbit::new(pot, alpha, theta0);
    let diag: Vec<f64> = (0..n as i64).map(|j| orbit.potential_at(j)).collect();
    tridiagonal_eigenvalues(&diag, &vec![1.0; n.saturating_sub(1)])
}

/// Fraction of eigenvalues `≤ E`.
pub fn counting_ids(eigs: &[f64], energy: f64) -> f64 {
    eigs.partition_point(|&x| x <= energy) as f64 / eigs.len() as f64
}

/// `(1/N) Σ_j log|E − E_j|`.
pub fn thouless_lyapunov(eigs: &[f64], energy: f64) -> f64 {
    eigs.iter().map(|&x| (energy - x).abs().ln()).sum::<f64>() / eigs.len() as f64
}

/// Total length of the level spacings below `max_spacing`: the measure of
/// the union of bands resolved by the eigenvalues.
pub fn spectrum_measure(eigs: &[f64], max_spacing: f64) -> f64 {
    eigs.windows(2).map(|w| w[1] - w[0]).filter(|&s| s < max_spacing).sum()
}

/// Intervals spanned by runs of spacings below `max_spacing`.
pub fn spectral_bands(eigs: &[f64], max_spacing: f64) -> Vec<(f64, f64)> {
    let mut bands: Vec<(f64, f64)> = Vec::new();
    for w in eigs.windows(2) {
        if w[1] - w[0] < max_spacing {
            match bands.last_mut() {
                Some(b) if b.1 == w[0] => b.1 = w[1],
                _ => bands.push((w[0], w[1])),
            }
        }
    }
    bands
}

/// Summary of a truncated-matrix run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSpectrum {
    pub size: usize,
    pub min: f64,
    pub max: f64,
    pub measure: f64,
    pub max_spacing: f64,
    pub bands: usize,
}

pub fn summarize(eigs: &[f64], max_spacing: f64) -> TruncatedSpectrum {
    TruncatedSpectrum {
        size: eigs.len(),
        min: eigs.first().copied().unwrap_or(f64::NAN),
        max: eigs.last().copied().unwrap_or(f64::NAN),
        measure: spectrum_measure(eigs, max_spacing),
        max_spacing,
        bands: spectral_bands(eigs, max_spacing).len(),
    }
}
