//! Transfer-matrix cocycle of the one-dimensional operator
//! `(Hψ)_n = ψ_{n+1} + ψ_{n−1} + U(S^n θ) ψ_n`.
//!
//! One pass over the orbit yields both the Lyapunov exponent (log-norm of the
//! renormalized product) and the integrated density of states (Sturm counting
//! on the Dirichlet solution, which is the first column of the product).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::torus::{circle_distance, for_each_lattice_vector, FrequencyVector, Orbit, TorusPoint, TrigPotential};

/// Rescale the propagated product every this many steps.
pub const RENORM_CADENCE: u64 = 16;
pub const MIN_STEPS: u64 = 1_000;
pub const DEFAULT_STEPS: u64 = 100_000;
pub const DEFAULT_GAMMA_TOL: f64 = 5e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("at least {MIN_STEPS} steps are required, got {0}")]
    TooFewSteps(u64),
    #[error("non-finite transfer-matrix product at step {step}")]
    NonFinite { step: u64 },
    #[error("spectral grid is empty")]
    EmptyGrid,
    #[error("energies must be strictly increasing (index {0})")]
    UnsortedGrid(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// A real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Spectral (operator 2-) norm.
    pub fn norm(&self) -> f64 {
        let fro2 = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        ((fro2 + disc) / 2.0).sqrt()
    }

    /// Log of the spectral radius, `max(0, log|λ_max|)` for a unimodular matrix.
    pub fn log_spectral_radius(&self) -> f64 {
        let t = self.trace().abs() / 2.0;
        if t <= 1.0 {
            0.0
        } else {
            (t + (t * t - 1.0).sqrt()).ln()
        }
    }
}

/// `A(E, θ) = [[E − U(θ), −1], [1, 0]]`.
pub fn transfer_matrix(energy: f64, pot: &TrigPotential, theta: &TorusPoint) -> TransferMatrix {
    from_potential(energy, pot.eval(theta))
}

#[inline]
fn from_potential(energy: f64, v: f64) -> TransferMatrix {
    TransferMatrix { a: energy - v, b: -1.0, c: 1.0, d: 0.0 }
}

/// Lyapunov exponent and IDS from one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleEstimate {
    pub lyapunov: f64,
    pub ids: f64,
}

/// Propagates `A(E, S^{N−1}θ₀)⋯A(E, θ₀)` with renormalization, counting sign
/// changes of the Dirichlet solution `u` (`u_{−1} = 0`, `u_0 = 1`). The IDS is
/// `1 − changes/N`, the per-site Sturm count of eigenvalues below `E`.
pub fn estimate(
    energy: f64,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta0: &TorusPoint,
    steps: u64,
) -> Result<CocycleEstimate, CocycleError> {
    if steps < MIN_STEPS {
        return Err(CocycleError::TooFewSteps(steps));
    }
    let orbit = Orbit::new(pot, alpha, theta0);
    let mut p = TransferMatrix::IDENTITY;
    let mut log_scale = 0.0;
    // Sign of the previous non-zero u_j; u_0 = 1.
    let mut last_sign = 1.0f64;
    let mut changes = 0u64;
    for j in 0..steps {
        p = from_potential(energy, orbit.potential_at(j as i64)).mul(&p);
        // First column of p is (u_{j+1}, u_j); track u_{j+1}.
        let u = p.a;
        // An exact zero is skipped, so a sign change through it counts once.
        if u != 0.0 {
            let s = u.signum();
            if s != last_sign {
                changes += 1;
            }
            last_sign = s;
        }
        if (j + 1) % RENORM_CADENCE == 0 {
            let m = p.max_abs();
            if !m.is_finite() || m == 0.0 {
                return Err(CocycleError::NonFinite { step: j });
            }
            p = p.scale(1.0 / m);
            log_scale += m.ln();
        }
    }
    let norm = p.norm();
    if !norm.is_finite() {
        return Err(CocycleError::NonFinite { step: steps });
    }
    let lyapunov = ((log_scale + norm.ln()) / steps as f64).max(0.0);
    let ids = (1.0 - changes as f64 / steps as f64).clamp(0.0, 1.0);
    Ok(CocycleEstimate { lyapunov, ids })
}

/// `(1/N) log‖A(E, S^{N−1}θ₀)⋯A(E, θ₀)‖`.
pub fn lyapunov(
    energy: f64,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta0: &TorusPoint,
    steps: u64,
) -> Result<f64, CocycleError> {
    estimate(energy, pot, alpha, theta0, steps).map(|e| e.lyapunov)
}

/// Integrated density of states from Sturm counting on the Dirichlet solution.
pub fn ids(
    energy: f64,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta0: &TorusPoint,
    steps: u64,
) -> Result<f64, CocycleError> {
    estimate(energy, pot, alpha, theta0, steps).map(|e| e.ids)
}

/// `E_i = min + i·step`, inclusive of `max` up to rounding.
pub fn energy_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && max >= min, "invalid energy grid");
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + i as f64 * step).collect()
}

/// Diagnostics at one energy, averaged over several starting phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub energy: f64,
    pub lyapunov: f64,
    /// Max − min over starting phases.
    pub lyapunov_spread: f64,
    pub ids: f64,
    pub ids_spread: f64,
    /// `lyapunov ≤ γ_tol`.
    pub ac: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub gamma_tol: f64,
    pub rows: Vec<GridRow>,
}

impl SpectralGrid {
    /// Parallel sweep over `energies`; each row averages the estimates from
    /// every phase in `thetas`.
    pub fn sweep(
        energies: &[f64],
        pot: &TrigPotential,
        alpha: &FrequencyVector,
        thetas: &[TorusPoint],
        steps: u64,
        gamma_tol: f64,
    ) -> Result<Self, CocycleError> {
        if energies.is_empty() || thetas.is_empty() {
            return Err(CocycleError::EmptyGrid);
        }
        if !(gamma_tol > 0.0) {
            return Err(CocycleError::BadTolerance(gamma_tol));
        }
        if let Some(i) = energies.windows(2).position(|w| w[1] <= w[0]) {
            return Err(CocycleError::UnsortedGrid(i + 1));
        }
        let rows = energies
            .par_iter()
            .map(|&e| {
                let ests = thetas.iter().map(|t| estimate(e, pot, alpha, t, steps)).collect::<Result<Vec<_>, _>>()?;
                let n = ests.len() as f64;
                let spread = |f: fn(&CocycleEstimate) -> f64| {
                    let (lo, hi) =
                        ests.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
                    hi - lo
                };
                let lyapunov = ests.iter().map(|x| x.lyapunov).sum::<f64>() / n;
                Ok(GridRow {
                    energy: e,
                    lyapunov,
                    lyapunov_spread: spread(|x| x.lyapunov),
                    ids: ests.iter().map(|x| x.ids).sum::<f64>() / n,
                    ids_spread: spread(|x| x.ids),
                    ac: lyapunov <= gamma_tol,
                })
            })
            .collect::<Result<Vec<_>, CocycleError>>()?;
        Ok(Self { gamma_tol, rows })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    /// Cell owned by row `i`: bounded by midpoints to its neighbours, with
    /// the end cells mirrored.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let e = |k: usize| self.rows[k].energy;
        let n = self.rows.len();
        if n == 1 {
            return (e(0), e(0));
        }
        let lo = if i == 0 { e(0) - (e(1) - e(0)) / 2.0 } else { (e(i - 1) + e(i)) / 2.0 };
        let hi = if i == n - 1 { e(n - 1) + (e(n - 1) - e(n - 2)) / 2.0 } else { (e(i) + e(i + 1)) / 2.0 };
        (lo, hi)
    }

    /// Per-energy rows as CSV: `energy,lyapunov,ids,ac`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,lyapunov,lyapunov_spread,ids,ids_spread,ac\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.energy, r.lyapunov, r.lyapunov_spread, r.ids, r.ids_spread, r.ac as u8
            ));
        }
        out
    }
}

/// Numerical stand-in for the absolutely continuous spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcSpectrum {
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
}

/// Maximal unions of consecutive cells with `γ ≤ γ_tol`.
pub fn classify_ac(grid: &SpectralGrid, gamma_tol: f64) -> Result<AcSpectrum, CocycleError> {
    if grid.rows.is_empty() {
        return Err(CocycleError::EmptyGrid);
    }
    if !(gamma_tol > 0.0) {
        return Err(CocycleError::BadTolerance(gamma_tol));
    }
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for (i, row) in grid.rows.iter().enumerate() {
        if row.lyapunov <= gamma_tol {
            let (lo, hi) = grid.cell(i);
            open = Some(match open {
                Some((start, _)) => (start, hi),
                None => (lo, hi),
            });
        } else if let Some(iv) = open.take() {
            intervals.push(iv);
        }
    }
    intervals.extend(open);
    let measure = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(AcSpectrum { intervals, measure })
}

/// A maximal run of grid points with positive Lyapunov exponent on which the
/// IDS is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub lo: f64,
    pub hi: f64,
    pub ids: f64,
    pub points: usize,
}

/// Detects gaps: runs of `γ > γ_tol` split wherever the IDS moves by more than
/// `ids_flat_tol` from the run's first value. Runs touching either end of the
/// grid are not bounded by spectrum on both sides and are dropped.
pub fn spectral_gaps(grid: &SpectralGrid, gamma_tol: f64, ids_flat_tol: f64) -> Vec<SpectralGap> {
    let mut gaps = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    let flush = |run: &mut Vec<usize>, gaps: &mut Vec<SpectralGap>| {
        if let (Some(&first), Some(&last)) = (run.first(), run.last()) {
            if first == 0 || last + 1 == grid.rows.len() {
                run.clear();
                return;
            }
            let ids = run.iter().map(|&k| grid.rows[k].ids).sum::<f64>() / run.len() as f64;
            gaps.push(SpectralGap { lo: grid.rows[first].energy, hi: grid.rows[last].energy, ids, points: run.len() });
        }
        run.clear();
    };
    for (i, row) in grid.rows.iter().enumerate() {
        if row.lyapunov > gamma_tol {
            if let Some(&first) = run.first() {
                if (row.ids - grid.rows[first].ids).abs() > ids_flat_tol {
                    flush(&mut run, &mut gaps);
                }
            }
            run.push(i);
        } else {
            flush(&mut run, &mut gaps);
        }
    }
    flush(&mut run, &mut gaps);
    gaps
}

/// Best label `m` (‖m‖∞ ≤ bound) for an IDS value, with its circle distance
/// to `frac(m·α)`.
pub fn gap_label(ids: f64, alpha: &FrequencyVector, bound: i64) -> (Vec<i64>, f64) {
    let mut best = (vec![0; alpha.dim()], f64::INFINITY);
    for_each_lattice_vector(alpha.dim(), bound, |m| {
        let d = circle_distance(ids, alpha.dot(m));
        let better = d < best.1 - 1e-15 || ((d - best.1).abs() <= 1e-15 && l1(m) < l1(&best.0));
        if better {
            best = (m.to_vec(), d);
        }
    });
    best
}

fn l1(m: &[i64]) -> i64 {
    m.iter().map(|x| x.abs()).sum()
}
