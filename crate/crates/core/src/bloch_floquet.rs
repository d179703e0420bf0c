//! Bloch-Floquet diagnostics: Wronskian, Riccati ratio, reducibility of the
//! transfer-matrix cocycle, quasi-momentum and the resonance condition.
//!
//! A candidate stores `ψ_0(θ)` and `ψ_{−1}(θ)` on a grid together with a
//! quasi-momentum `k`. Values at shifted points `Sθ` come from a trigonometric
//! interpolant of the grid data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, ThetaGrid, TrigInterpolant};
use crate::riccati::{wrap_phase, CovariantField};
use crate::stats::circular_stats;
use crate::torus::{circle_distance, for_each_lattice_vector, shift, FrequencyVector, TrigPotential};

/// Default conditioning floor for `det Z`, relative to `max|ψ|²`.
pub const DET_FLOOR: f64 = 1e-8;
/// Default enumeration bound for resonances.
pub const RESONANCE_BOUND: i64 = 50;
/// Dispersion of `κ` below which a covariant state is treated as a BF pair.
pub const DISPERSION_GATE: f64 = 0.1;
/// Divisors `|1 − e^{2πi m·α}|` below this are dropped from the gauge solve.
const DIVISOR_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlochError {
    #[error("candidate vanishes at grid point {0}")]
    Vanishing(usize),
    #[error("ψ_{{-1}} = 0 at grid point {0}")]
    Pole(usize),
    #[error("det Z = {det:.3e} below the floor {floor:.3e} at θ = {theta:?}")]
    SingularConjugation { theta: Vec<f64>, det: f64, floor: f64 },
    #[error("grid must have at least 4 points per axis for gauge alignment")]
    GridTooSmall,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Grid data of a candidate Bloch-Floquet eigenfunction at energy `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfCandidate {
    pub grid: ThetaGrid,
    pub psi_zero: Vec<Complex64>,
    pub psi_minus: Vec<Complex64>,
    /// Quasi-momentum in `(−π, π]`.
    pub k: f64,
    pub energy: f64,
}

impl BfCandidate {
    pub fn new(
        grid: ThetaGrid,
        psi_zero: Vec<Complex64>,
        psi_minus: Vec<Complex64>,
        k: f64,
        energy: f64,
    ) -> Result<Self, BlochError> {
        for v in [&psi_zero, &psi_minus] {
            if v.len() != grid.len() {
                return Err(GridError::LengthMismatch { expected: grid.len(), got: v.len() }.into());
            }
        }
        if let Some(j) = (0..grid.len()).find(|&j| psi_zero[j].norm() + psi_minus[j].norm() == 0.0) {
            return Err(BlochError::Vanishing(j));
        }
        Ok(Self { grid, psi_zero, psi_minus, k: wrap_phase(k), energy })
    }

    /// `ψ_n = e^{ikn}` at `E = 2 cos k`.
    pub fn plane_wave(grid: ThetaGrid, k: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            psi_zero: vec![Complex64::new(1.0, 0.0); n],
            psi_minus: vec![Complex64::from_polar(1.0, -k); n],
            k: wrap_phase(k),
            energy: 2.0 * k.cos(),
        }
    }

    /// `ψ̄`, with reversed quasi-momentum.
    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            psi_zero: self.psi_zero.iter().map(|z| z.conj()).collect(),
            psi_minus: self.psi_minus.iter().map(|z| z.conj()).collect(),
            k: wrap_phase(-self.k),
            energy: self.energy,
        }
    }

    /// Multiplies both components by a constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            psi_zero: self.psi_zero.iter().map(|z| z * c).collect(),
            psi_minus: self.psi_minus.iter().map(|z| z * c).collect(),
            ..self.clone()
        }
    }

    fn interpolants(&self) -> Result<(TrigInterpolant, TrigInterpolant), BlochError> {
        Ok((TrigInterpolant::fit(&self.grid, &self.psi_zero)?, TrigInterpolant::fit(&self.grid, &self.psi_minus)?))
    }

    /// `max_θ` of `|ψ_0(θ) − e^{ik} ψ_{−1}(Sθ)|` and `|ψ_1(θ) − e^{ik} ψ_0(Sθ)|`,
    /// with `ψ_1 = (E − U)ψ_0 − ψ_{−1}`.
    pub fn covariance_defect(&self, pot: &TrigPotential, alpha: &FrequencyVector) -> Result<f64, BlochError> {
        let (i0, im) = self.interpolants()?;
        let phase = Complex64::from_polar(1.0, self.k);
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.len() {
            let theta = self.grid.point(j);
            let s = shift(&theta, alpha);
            let psi_one = (self.energy - pot.eval(&theta)) * self.psi_zero[j] - self.psi_minus[j];
            worst =
                worst.max((self.psi_zero[j] - phase * im.eval(&s)).norm()).max((psi_one - phase * i0.eval(&s)).norm());
        }
        Ok(worst)
    }
}

/// `[ψ, ψ̄](θ) = ψ_0 ψ̄_{−1} − ψ̄_0 ψ_{−1}`; purely imaginary.
pub fn wronskian(cand: &BfCandidate, index: usize) -> Complex64 {
    let (a, b) = (cand.psi_zero[index], cand.psi_minus[index]);
    a * b.conj() - a.conj() * b
}

/// `γ(θ) = −ψ_0(θ)/ψ_{−1}(θ)`.
pub fn riccati_ratio(cand: &BfCandidate, index: usize) -> Result<Complex64, BlochError> {
    let b = cand.psi_minus[index];
    if b == Complex64::new(0.0, 0.0) {
        return Err(BlochError::Pole(index));
    }
    Ok(-cand.psi_zero[index] / b)
}

/// `max_θ ‖Z(Sθ)⁻¹ A(E, θ) Z(θ) − diag(e^{−ik}, e^{ik})‖` (entrywise max),
/// with `Z = [[ψ̄_0, ψ_0], [ψ̄_{−1}, ψ_{−1}]]`. `det_floor` is relative to
/// `max|ψ|²` over the grid.
pub fn reducibility_residual(
    cand: &BfCandidate,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    det_floor: f64,
) -> Result<f64, BlochError> {
    let scale = cand.psi_zero.iter().chain(&cand.psi_minus).map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let floor = det_floor * scale;
    let det = |a: Complex64, b: Complex64| a.conj() * b - a * b.conj();
    for j in 0..cand.grid.len() {
        let d = det(cand.psi_zero[j], cand.psi_minus[j]).norm();
        if d < floor {
            return Err(BlochError::SingularConjugation { theta: cand.grid.point(j).coords().to_vec(), det: d, floor });
        }
    }
    let (i0, im) = cand.interpolants()?;
    let target = [Complex64::from_polar(1.0, -cand.k), Complex64::from_polar(1.0, cand.k)];
    let mut worst: f64 = 0.0;
    for j in 0..cand.grid.len() {
        let theta = cand.grid.point(j);
        let s = shift(&theta, alpha);
        let (a, b) = (cand.psi_zero[j], cand.psi_minus[j]);
        let (sa, sb) = (i0.eval(&s), im.eval(&s));
        let ds = det(sa, sb);
        if ds.norm() < floor {
            return Err(BlochError::SingularConjugation { theta: s.coords().to_vec(), det: ds.norm(), floor });
        }
        // A Z(θ): columns A·(ψ̄_0, ψ̄_{−1}) and A·(ψ_0, ψ_{−1}).
        let e = cand.energy - pot.eval(&theta);
        let az = [[e * a.conj() - b.conj(), e * a - b], [a.conj(), a]];
        // Z(Sθ)⁻¹ = [[sb, −sa], [−s̄b, s̄a]] / det.
        let inv = [[sb / ds, -sa / ds], [-sb.conj() / ds, sa.conj() / ds]];
        #[allow(clippy::needless_range_loop)]
        for r in 0..2 {
            for c in 0..2 {
                let m = inv[r][0] * az[0][c] + inv[r][1] * az[1][c];
                let want = if r == c { target[r] } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((m - want).norm());
            }
        }
    }
    Ok(worst)
}

/// Circular mean and dispersion of `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiMomentum {
    /// Circular mean of `κ` in `(−π, π]`.
    pub k: f64,
    /// Circular standard deviation (`∞` when the resultant vanishes).
    pub dispersion: f64,
    /// Mean resultant length `R ∈ [0, 1]`.
    pub resultant: f64,
}

impl QuasiMomentum {
    /// Momentum of the plane-wave convention `−ψ_0/ψ_{−1} = Γ`, i.e. `k − π`.
    pub fn plane_wave_k(&self) -> f64 {
        wrap_phase(self.k - PI)
    }
}

/// Circular statistics of `κ` over the grid.
pub fn quasimomentum(field: &CovariantField) -> QuasiMomentum {
    let c = circular_stats(&field.kappa);
    QuasiMomentum { k: wrap_phase(c.mean), dispersion: c.std_dev, resultant: c.resultant }
}

/// Continuous lift of a phase field along the grid: each point is unwrapped
/// against its neighbour with one index decremented along the last axis that
/// is nonzero.
pub fn lift_phase(grid: &ThetaGrid, phase: &[f64]) -> Vec<f64> {
    let mut lift = vec![0.0; phase.len()];
    for j in 0..phase.len() {
        let mut idx = grid.multi_index(j);
        match idx.iter().rposition(|&i| i > 0) {
            None => lift[j] = phase[j],
            Some(k) => {
                idx[k] -= 1;
                let prev = grid.flat_index(&idx);
                lift[j] = lift[prev] + wrap_phase(phase[j] - phase[prev]);
            }
        }
    }
    lift
}

/// Gauge `χ` with `χ(θ) − χ(Sθ) = −(κ(θ) − k)` for a lifted `κ` with mean `k`.
fn gauge_from(
    grid: &ThetaGrid,
    lifted: &[f64],
    k: f64,
    alpha: &FrequencyVector,
) -> Result<TrigInterpolant, BlochError> {
    let f: Vec<Complex64> = lifted.iter().map(|&x| Complex64::new(k - x, 0.0)).collect();
    Ok(TrigInterpolant::fit(grid, &f)?.solve_coboundary(alpha, DIVISOR_FLOOR))
}

/// Quasi-momentum after gauge alignment. `k` is the mean of the continuous
/// lift of `κ` (the zero mode of its Fourier series). The gauge is fitted on
/// the even sub-grid and the aligned phase `κ(θ) + χ(θ) − χ(Sθ)` is measured
/// on the held-out points, so a small dispersion certifies that `κ` is
/// cohomologous to the constant `k` through a well-resolved gauge.
pub fn aligned_quasimomentum(field: &CovariantField, alpha: &FrequencyVector) -> Result<QuasiMomentum, BlochError> {
    let (sub, map) = field.grid.even_subgrid().ok_or(BlochError::GridTooSmall)?;
    let lifted = lift_phase(&field.grid, &field.kappa);
    let k = lifted.iter().sum::<f64>() / lifted.len() as f64;
    let sub_lifted: Vec<f64> = map.iter().map(|&j| lifted[j]).collect();
    let chi = gauge_from(&sub, &sub_lifted, k, alpha)?;
    let mut held_out = vec![true; field.grid.len()];
    for &j in &map {
        held_out[j] = false;
    }
    let aligned: Vec<f64> = (0..field.grid.len())
        .filter(|&j| held_out[j])
        .map(|j| {
            let theta = field.grid.point(j);
            let d = chi.eval(&theta) - chi.eval(&shift(&theta, alpha));
            field.kappa[j] + d.re
        })
        .collect();
    let c = circular_stats(&aligned);
    Ok(QuasiMomentum { k: wrap_phase(k), dispersion: c.std_dev, resultant: c.resultant })
}

/// Bloch-Floquet candidate from a covariant field: `ψ_{−1} = e^{iχ} φ_{−1}`,
/// `ψ_0 = −e^{iχ} φ_0` with the gauge `χ` fitted on the full grid, so that
/// `−ψ_0/ψ_{−1} = Γ` and the quasi-momentum is the plane-wave `k`.
pub fn candidate_from_field(
    field: &CovariantField,
    alpha: &FrequencyVector,
    energy: f64,
) -> Result<BfCandidate, BlochError> {
    let lifted = lift_phase(&field.grid, &field.kappa);
    let k = lifted.iter().sum::<f64>() / lifted.len() as f64;
    let chi = gauge_from(&field.grid, &lifted, k, alpha)?;
    let mut psi_zero = Vec::with_capacity(field.len());
    let mut psi_minus = Vec::with_capacity(field.len());
    for j in 0..field.len() {
        let g = Complex64::from_polar(1.0, chi.eval(&field.grid.point(j)).re);
        psi_minus.push(g * field.phi_minus[j]);
        psi_zero.push(-g * field.phi_zero[j]);
    }
    BfCandidate::new(field.grid.clone(), psi_zero, psi_minus, k - PI, energy)
}

/// `min_{‖m‖∞ ≤ M}` of the circle distance between `|k|/π` and `frac(m·α)`.
pub fn resonance_distance(k: f64, alpha: &FrequencyVector, bound: i64) -> f64 {
    let x = k.abs() / PI;
    let mut best = f64::INFINITY;
    for_each_lattice_vector(alpha.dim(), bound, |m| {
        best = best.min(circle_distance(x, alpha.dot(m)));
    });
    best
}

/// Whether `|k|/2π ≡ ±n/2 + m·α (mod 1)` within `tol` for some `‖m‖∞ ≤ M`.
pub fn ids_momentum_check(k: f64, n: f64, alpha: &FrequencyVector, bound: i64, tol: f64) -> bool {
    ids_momentum_distance(k, n, alpha, bound) <= tol
}

/// Smallest distance realized in [`ids_momentum_check`].
pub fn ids_momentum_distance(k: f64, n: f64, alpha: &FrequencyVector, bound: i64) -> f64 {
    let x = k.abs() / (2.0 * PI);
    let mut best = f64::INFINITY;
    for_each_lattice_vector(alpha.dim(), bound, |m| {
        let ma = alpha.dot(m);
        best = best.min(circle_distance(x, n / 2.0 + ma)).min(circle_distance(x, -n / 2.0 + ma));
    });
    best
}

/// Per-energy diagnostic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfReport {
    pub energy: f64,
    pub coupling: f64,
    pub alpha: Vec<f64>,
    pub k: f64,
    pub dispersion: f64,
    pub raw_dispersion: f64,
    pub wronskian: WronskianSummary,
    pub reducibility_residual: f64,
    pub resonance_distance_at_m: f64,
    pub ids: f64,
    pub check_passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianSummary {
    pub re: f64,
    pub im: f64,
    /// Relative spread `max|W − mean| / |mean|` over the grid.
    pub relative_spread: f64,
}

pub fn wronskian_summary(cand: &BfCandidate) -> WronskianSummary {
    let ws: Vec<Complex64> = (0..cand.grid.len()).map(|j| wronskian(cand, j)).collect();
    let mean = ws.iter().sum::<Complex64>() / ws.len() as f64;
    let spread = ws.iter().map(|w| (w - mean).norm()).fold(0.0, f64::max);
    WronskianSummary { re: mean.re, im: mean.im, relative_spread: spread / mean.norm().max(f64::MIN_POSITIVE) }
}

/// Tolerances for [`diagnose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfThresholds {
    pub dispersion: f64,
    pub reducibility: f64,
    pub ids_tol: f64,
    pub resonance_bound: i64,
}

impl Default for BfThresholds {
    fn default() -> Self {
        Self { dispersion: DISPERSION_GATE, reducibility: 5e-2, ids_tol: 2e-2, resonance_bound: RESONANCE_BOUND }
    }
}

/// Full diagnostic from a covariant field and an IDS estimate.
pub fn diagnose(
    field: &CovariantField,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    energy: f64,
    coupling: f64,
    ids: f64,
    thresholds: &BfThresholds,
) -> Result<BfReport, BlochError> {
    let raw = quasimomentum(field);
    let aligned = aligned_quasimomentum(field, alpha)?;
    let cand = candidate_from_field(field, alpha, energy)?;
    let residual = reducibility_residual(&cand, pot, alpha, DET_FLOOR)?;
    let resonance = resonance_distance(aligned.k, alpha, thresholds.resonance_bound);
    let ids_ok = ids_momentum_check(aligned.k, ids, alpha, thresholds.resonance_bound, thresholds.ids_tol);
    let check_passed =
        aligned.dispersion < thresholds.dispersion && residual < thresholds.reducibility && ids_ok && resonance > 0.0;
    Ok(BfReport {
        energy,
        coupling,
        alpha: alpha.components().to_vec(),
        k: aligned.k,
        dispersion: aligned.dispersion,
        raw_dispersion: raw.dispersion,
        wronskian: wronskian_summary(&cand),
        reducibility_residual: residual,
        resonance_distance_at_m: resonance,
        ids,
        check_passed,
    })
}
