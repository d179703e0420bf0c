//! Uniform tensor grids on the torus and interpolation of grid data.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::torus::{FrequencyVector, TorusPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} per axis must be a power of two ≥ 2")]
    NotPowerOfTwo(usize),
    #[error("grid dimension must be at least 1")]
    EmptyDimension,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// `∏ n_k` points `θ_j = 2π j / n` along each axis, row-major with the first
/// axis varying slowest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaGrid {
    sizes: Vec<usize>,
}

impl ThetaGrid {
    pub fn new(sizes: Vec<usize>) -> Result<Self, GridError> {
        if sizes.is_empty() {
            return Err(GridError::EmptyDimension);
        }
        if let Some(&bad) = sizes.iter().find(|&&n| n < 2 || !n.is_power_of_two()) {
            return Err(GridError::NotPowerOfTwo(bad));
        }
        Ok(Self { sizes })
    }

    /// Same size `n` along each of `dim` axes.
    pub fn uniform(dim: usize, n: usize) -> Result<Self, GridError> {
        Self::new(vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.sizes[k];
            flat /= self.sizes[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &n)| acc * n + (i % n))
    }

    pub fn point(&self, flat: usize) -> TorusPoint {
        let coords = self.multi_index(flat).iter().zip(&self.sizes).map(|(&i, &n)| TAU * i as f64 / n as f64).collect();
        TorusPoint::new(coords).expect("grid coordinates are finite")
    }

    pub fn points(&self) -> Vec<TorusPoint> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// Sub-grid of even indices along every axis, with the flat indices of its
    /// points in this grid. `None` if some axis has only two points.
    pub fn even_subgrid(&self) -> Option<(ThetaGrid, Vec<usize>)> {
        if self.sizes.iter().any(|&n| n < 4) {
            return None;
        }
        let sub = ThetaGrid::new(self.sizes.iter().map(|n| n / 2).collect()).ok()?;
        let map = (0..sub.len())
            .map(|j| {
                let idx: Vec<usize> = sub.multi_index(j).iter().map(|i| 2 * i).collect();
                self.flat_index(&idx)
            })
            .collect();
        Some((sub, map))
    }

    fn check_len(&self, n: usize) -> Result<(), GridError> {
        if n != self.len() {
            return Err(GridError::LengthMismatch { expected: self.len(), got: n });
        }
        Ok(())
    }

    /// Periodic multilinear interpolation of grid data at `θ`.
    pub fn interpolate(&self, values: &[Complex64], theta: &TorusPoint) -> Complex64 {
        debug_assert_eq!(values.len(), self.len());
        let dim = self.dim();
        let mut base = vec![0usize; dim];
        let mut w = vec![0.0; dim];
        for k in 0..dim {
            let x = theta.coords()[k] / TAU * self.sizes[k] as f64;
            let i = x.floor();
            base[k] = (i as usize) % self.sizes[k];
            w[k] = x - i;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut corner = vec![0usize; dim];
        for mask in 0..(1usize << dim) {
            let mut weight = 1.0;
            for k in 0..dim {
                let up = (mask >> k) & 1 == 1;
                corner[k] = base[k] + up as usize;
                weight *= if up { w[k] } else { 1.0 - w[k] };
            }
            if weight != 0.0 {
                acc += values[self.flat_index(&corner)] * weight;
            }
        }
        acc
    }

    /// Bound on the multilinear interpolation error from second differences,
    /// `max |f_{j+1} − 2 f_j + f_{j−1}| / 8` over all axes.
    pub fn interpolation_error(&self, values: &[Complex64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            let idx = self.multi_index(j);
            for k in 0..self.dim() {
                let n = self.sizes[k];
                let mut up = idx.clone();
                up[k] = (idx[k] + 1) % n;
                let mut dn = idx.clone();
                dn[k] = (idx[k] + n - 1) % n;
                let d2 = values[self.flat_index(&up)] - values[j] * 2.0 + values[self.flat_index(&dn)];
                worst = worst.max(d2.norm() / 8.0);
            }
        }
        worst
    }
}

/// Trigonometric interpolant of grid data, `f(θ) = Σ_m c_m e^{i m·θ}` over
/// `|m_k| ≤ n_k/2`, with the Nyquist coefficients split evenly between `±n_k/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    modes: Vec<(Vec<i64>, Complex64)>,
}

impl TrigInterpolant {
    /// Naive DFT; cost `O(len²)`, intended for grids up to a few thousand points.
    pub fn fit(grid: &ThetaGrid, values: &[Complex64]) -> Result<Self, GridError> {
        grid.check_len(values.len())?;
        let points = grid.points();
        let scale = 1.0 / grid.len() as f64;
        let mut modes = Vec::new();
        let half: Vec<i64> = grid.sizes().iter().map(|&n| (n / 2) as i64).collect();
        let mut m: Vec<i64> = half.iter().map(|h| -h).collect();
        loop {
            let weight: f64 = m.iter().zip(&half).map(|(&mi, &h)| if mi.abs() == h { 0.5 } else { 1.0 }).product();
            let c: Complex64 =
                points.iter().zip(values).map(|(p, &v)| v * Complex64::from_polar(1.0, -phase(&m, p))).sum();
            modes.push((m.clone(), c * scale * weight));
            let mut k = 0;
            while k < m.len() && m[k] == half[k] {
                m[k] = -half[k];
                k += 1;
            }
            if k == m.len() {
                break;
            }
            m[k] += 1;
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[(Vec<i64>, Complex64)] {
        &self.modes
    }

    pub fn eval(&self, theta: &TorusPoint) -> Complex64 {
        self.modes.iter().map(|(m, c)| c * Complex64::from_polar(1.0, phase(m, theta))).sum()
    }

    /// Solves `χ(θ) − χ(Sθ) = f(θ) − f̂_0` mode by mode:
    /// `χ̂_m = f̂_m / (1 − e^{2πi m·α})`. Modes with divisor below `floor` are
    /// dropped.
    pub fn solve_coboundary(&self, alpha: &FrequencyVector, floor: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .filter(|(m, _)| m.iter().any(|&x| x != 0))
            .filter_map(|(m, c)| {
                let div = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * alpha.dot(m));
                (div.norm() >= floor).then(|| (m.clone(), c / div))
            })
            .collect();
        Self { modes }
    }
}

#[inline]
fn phase(m: &[i64], theta: &TorusPoint) -> f64 {
    m.iter().zip(theta.coords()).map(|(&mi, &t)| mi as f64 * t).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{shift, GOLDEN_MEAN};

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(ThetaGrid::uniform(1, 12), Err(GridError::NotPowerOfTwo(12)));
        assert!(ThetaGrid::uniform(2, 16).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = ThetaGrid::new(vec![4, 8]).unwrap();
        for j in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(j)), j);
        }
    }

    #[test]
    fn interpolation_is_exact_for_affine_data_between_nodes() {
        let g = ThetaGrid::uniform(1, 8).unwrap();
        let vals: Vec<Complex64> = (0..8).map(|j| Complex64::new(j as f64, 0.0)).collect();
        let v = g.interpolate(&vals, &TorusPoint::scalar(TAU * 2.5 / 8.0));
        assert!((v.re - 2.5).abs() < 1e-12);
    }

    #[test]
    fn trig_interpolant_reproduces_band_limited_data() {
        let g = ThetaGrid::uniform(1, 16).unwrap();
        let f = |t: f64| Complex64::new((3.0 * t).cos(), 0.5 * t.sin());
        let vals: Vec<Complex64> = g.points().iter().map(|p| f(p.coords()[0])).collect();
        let interp = TrigInterpolant::fit(&g, &vals).unwrap();
        for t in [0.1, 1.7, 4.0] {
            assert!((interp.eval(&TorusPoint::scalar(t)) - f(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn coboundary_solution_satisfies_shift_equation() {
        let g = ThetaGrid::uniform(1, 32).unwrap();
        let alpha = FrequencyVector::new(vec![GOLDEN_MEAN]).unwrap();
        let f = |t: f64| Complex64::new(0.3 * t.cos() + 0.1 * (2.0 * t).sin(), 0.0);
        let vals: Vec<Complex64> = g.points().iter().map(|p| f(p.coords()[0])).collect();
        let chi = TrigInterpolant::fit(&g, &vals).unwrap().solve_coboundary(&alpha, 1e-12);
        for t in [0.2, 2.2, 5.0] {
            let p = TorusPoint::scalar(t);
            let lhs = chi.eval(&p) - chi.eval(&shift(&p, &alpha));
            assert!((lhs - f(t)).norm() < 1e-12);
        }
    }
}
