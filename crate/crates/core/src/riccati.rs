//! Projective (Möbius) cocycle, half-line Green functions and covariant states.
//!
//! The half-line Green function at the origin is the fixed point of the
//! backward Riccati recursion `γ_n = 1/(V_n − z − γ_{n+1})`, seeded at
//! `γ_depth = i`. For `Im z > 0` every step is a strict contraction of the
//! upper half plane, so the seed is forgotten at a rate `~ exp(−η Σ 1/Im γ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, ThetaGrid};
use crate::torus::{shift, FrequencyVector, Orbit, TorusPoint, TrigPotential};

/// Seed of the backward recursion.
pub const SEED: Complex64 = Complex64::new(0.0, 1.0);
/// Smallest depth used by the default depth rule.
pub const MIN_DEPTH: u64 = 10_000;
/// Depth-doubling tolerance of [`halfline_green`].
pub const DEPTH_TOL: f64 = 1e-10;
/// η-continuation used for boundary values.
pub const ETA_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Default multilinear-interpolation tolerance for residuals.
pub const DEFAULT_INTERP_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("imaginary part of the energy must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("Riccati value {0} is outside the closed upper half plane")]
    LowerHalfPlane(Complex64),
    #[error("pole: Möbius step applied to γ = 0")]
    Pole,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("recursion not converged: depth {depth} gives {shallow}, depth {} gives {deep}", 2 * depth)]
    NotConverged { depth: u64, shallow: Complex64, deep: Complex64 },
    #[error("boundary value at E = {energy} does not stabilize along the η schedule: {trend:?}")]
    UnstableBoundary { energy: f64, trend: Vec<(f64, Complex64)> },
    #[error("Im Γ = {im} ≤ 0 at θ = {theta:?}")]
    NonPositiveImaginary { theta: Vec<f64>, im: f64 },
    #[error(
        "grid too coarse: interpolation error {error:.3e} exceeds {tol:.3e}; use at least {required} points per axis"
    )]
    GridTooCoarse { error: f64, tol: f64, required: usize },
    #[error("seed {0} must lie in the open upper half plane")]
    BadSeed(Complex64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Spectral parameter `z = E + iη`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub energy: f64,
    pub eta: f64,
    /// `η = 0` requested as a boundary value `E + i0`.
    #[serde(default)]
    pub boundary: bool,
}

impl ComplexEnergy {
    pub fn new(energy: f64, eta: f64) -> Result<Self, RiccatiError> {
        if !(eta > 0.0) || !eta.is_finite() || !energy.is_finite() {
            return Err(RiccatiError::NonPositiveEta(eta));
        }
        Ok(Self { energy, eta, boundary: false })
    }

    /// `E + i0`.
    pub fn boundary(energy: f64) -> Self {
        Self { energy, eta: 0.0, boundary: true }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }

    /// `max(10⁴, ⌈20/η⌉)`.
    pub fn default_depth(&self) -> u64 {
        default_depth(self.eta)
    }
}

pub fn default_depth(eta: f64) -> u64 {
    if eta > 0.0 {
        MIN_DEPTH.max((20.0 / eta).ceil() as u64)
    } else {
        MIN_DEPTH
    }
}

/// A value of the closed upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct RiccatiValue(Complex64);

impl RiccatiValue {
    pub fn new(v: Complex64) -> Result<Self, RiccatiError> {
        if v.im >= 0.0 && v.re.is_finite() && v.im.is_finite() {
            Ok(Self(v))
        } else {
            Err(RiccatiError::LowerHalfPlane(v))
        }
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for RiccatiValue {
    type Error = RiccatiError;
    fn try_from(v: Complex64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<RiccatiValue> for Complex64 {
    fn from(v: RiccatiValue) -> Self {
        v.0
    }
}

/// `γ ↦ U(θ) − E + iη − 1/γ`: the Möbius map of the cocycle, regularized so
/// that `Im(result) = η + Im γ/|γ|²` and the upper half plane maps into itself.
pub fn mobius_step(
    z: &ComplexEnergy,
    pot: &TrigPotential,
    theta: &TorusPoint,
    gamma: RiccatiValue,
) -> Result<RiccatiValue, RiccatiError> {
    let g = gamma.value();
    if g == Complex64::new(0.0, 0.0) {
        return Err(RiccatiError::Pole);
    }
    let v = pot.eval(theta);
    RiccatiValue::new(Complex64::new(v - z.energy, z.eta) - g.inv())
}

/// One step of the backward recursion, `1/(v − z − next)`.
#[inline]
pub fn green_step(v: f64, z: Complex64, next: Complex64) -> Complex64 {
    (Complex64::new(v, 0.0) - z - next).inv()
}

/// Iterates `γ_n = 1/(V_n − z − γ_{n+1})` from `γ_depth = seed` down to `γ_0`.
pub fn backward_from(orbit: &Orbit<'_>, z: Complex64, seed: Complex64, depth: u64) -> Complex64 {
    (0..depth as i64).rev().fold(seed, |g, n| green_step(orbit.potential_at(n), z, g))
}

/// Same recursion over a precomputed potential sequence `V_0..V_{depth−1}`.
pub fn backward_from_values(values: &[f64], z: Complex64, seed: Complex64) -> Complex64 {
    values.iter().rev().fold(seed, |g, &v| green_step(v, z, g))
}

/// Solver for the half-line Green function with a depth-doubling check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSolver {
    /// `None` selects `max(10⁴, 20/η)`.
    pub depth: Option<u64>,
    /// Allowed change of `Γ` when the depth is doubled; `None` skips the check.
    pub tolerance: Option<f64>,
}

impl Default for GreenSolver {
    fn default() -> Self {
        Self { depth: None, tolerance: Some(DEPTH_TOL) }
    }
}

impl GreenSolver {
    pub fn with_depth(depth: u64) -> Self {
        Self { depth: Some(depth), ..Self::default() }
    }

    pub fn unchecked(depth: u64) -> Self {
        Self { depth: Some(depth), tolerance: None }
    }

    pub fn tolerance(mut self, tol: Option<f64>) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn solve(
        &self,
        z: &ComplexEnergy,
        pot: &TrigPotential,
        alpha: &FrequencyVector,
        theta: &TorusPoint,
    ) -> Result<RiccatiValue, RiccatiError> {
        if z.boundary {
            let trend = boundary_trend(z.energy, pot, alpha, theta, self)?;
            return match trend.stable_value() {
                Some(v) => RiccatiValue::new(v),
                None => Err(RiccatiError::UnstableBoundary { energy: z.energy, trend: trend.points }),
            };
        }
        if !(z.eta > 0.0) {
            return Err(RiccatiError::NonPositiveEta(z.eta));
        }
        let depth = self.depth.unwrap_or_else(|| z.default_depth());
        if depth == 0 {
            return Err(RiccatiError::ZeroDepth);
        }
        let orbit = Orbit::new(pot, alpha, theta);
        let zc = z.z();
        let shallow = backward_from(&orbit, zc, SEED, depth);
        if let Some(tol) = self.tolerance {
            let deep = backward_from(&orbit, zc, SEED, 2 * depth);
            if (deep - shallow).norm() > tol * deep.norm().max(1.0) {
                return Err(RiccatiError::NotConverged { depth, shallow, deep });
            }
            return RiccatiValue::new(deep);
        }
        RiccatiValue::new(shallow)
    }
}

/// `Γ(z, θ) = (H⁺(θ) − z)⁻¹(0, 0)` with the default depth rule and a
/// depth-doubling check at [`DEPTH_TOL`].
pub fn halfline_green(
    z: &ComplexEnergy,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta: &TorusPoint,
    depth: u64,
) -> Result<RiccatiValue, RiccatiError> {
    GreenSolver::with_depth(depth).solve(z, pot, alpha, theta)
}

/// Closed form for `U = 0`: the root of `Γ² + zΓ + 1 = 0` with `Im Γ > 0`.
pub fn free_green(z: Complex64) -> Complex64 {
    let disc = (z * z - 4.0).sqrt();
    let a = (-z + disc) / 2.0;
    let b = (-z - disc) / 2.0;
    if a.im >= b.im {
        a
    } else {
        b
    }
}

/// Values of `Γ` along the η schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrend {
    pub energy: f64,
    pub points: Vec<(f64, Complex64)>,
}

impl BoundaryTrend {
    /// Last value if successive changes shrink by at least half along the
    /// schedule.
    pub fn stable_value(&self) -> Option<Complex64> {
        let diffs: Vec<f64> = self.points.windows(2).map(|w| (w[1].1 - w[0].1).norm()).collect();
        let shrinking = diffs.windows(2).all(|d| d[1] <= 0.5 * d[0] + 1e-9);
        let last = self.points.last()?.1;
        (shrinking && last.im > 0.0).then_some(last)
    }
}

/// Green function along [`ETA_SCHEDULE`]; reports the trend without
/// extrapolating.
pub fn boundary_trend(
    energy: f64,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta: &TorusPoint,
    solver: &GreenSolver,
) -> Result<BoundaryTrend, RiccatiError> {
    let points = ETA_SCHEDULE
        .iter()
        .map(|&eta| {
            let z = ComplexEnergy::new(energy, eta)?;
            let s = GreenSolver { depth: None, tolerance: solver.tolerance };
            s.solve(&z, pot, alpha, theta).map(|g| (eta, g.value()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundaryTrend { energy, points })
}

/// `Γ(z, θ)` at every grid point, in parallel.
pub fn green_field(
    z: &ComplexEnergy,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    grid: &ThetaGrid,
    solver: &GreenSolver,
) -> Result<Vec<Complex64>, RiccatiError> {
    (0..grid.len()).into_par_iter().map(|j| solver.solve(z, pot, alpha, &grid.point(j)).map(|g| g.value())).collect()
}

/// Covariant eigenstate built from a solution `Γ` with `Im Γ > 0`:
/// `φ_{−1} = 1/√Im Γ`, `φ_0 = φ_{−1} Γ`, and the phase `κ` with
/// `φ_0(θ) = e^{iκ(θ)} φ_{−1}(Sθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariantField {
    pub grid: ThetaGrid,
    pub gamma: Vec<Complex64>,
    pub phi_minus: Vec<f64>,
    pub phi_zero: Vec<Complex64>,
    /// In `(−π, π]`.
    pub kappa: Vec<f64>,
}

impl CovariantField {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// CSV with columns `theta_1..theta_ν, re_gamma, im_gamma, re_phi_m1,
    /// re_phi_0, im_phi_0, kappa`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.grid.dim()).map(|k| format!("theta_{k}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",re_gamma,im_gamma,re_phi_m1,re_phi_0,im_phi_0,kappa\n");
        for j in 0..self.len() {
            for c in self.grid.point(j).coords() {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.gamma[j].re,
                self.gamma[j].im,
                self.phi_minus[j],
                self.phi_zero[j].re,
                self.phi_zero[j].im,
                self.kappa[j]
            ));
        }
        out
    }
}

/// Fills `φ_{−1}`, `φ_0` and `κ` from `Γ` on a grid.
pub fn covariant_state(
    grid: &ThetaGrid,
    gamma: Vec<Complex64>,
    alpha: &FrequencyVector,
) -> Result<CovariantField, RiccatiError> {
    if gamma.len() != grid.len() {
        return Err(GridError::LengthMismatch { expected: grid.len(), got: gamma.len() }.into());
    }
    if let Some(j) = gamma.iter().position(|g| !(g.im > 0.0)) {
        return Err(RiccatiError::NonPositiveImaginary { theta: grid.point(j).coords().to_vec(), im: gamma[j].im });
    }
    let phi_minus: Vec<f64> = gamma.iter().map(|g| 1.0 / g.im.sqrt()).collect();
    let phi_zero: Vec<Complex64> = gamma.iter().zip(&phi_minus).map(|(g, p)| g * *p).collect();
    let phi_minus_c: Vec<Complex64> = phi_minus.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let kappa = (0..grid.len())
        .map(|j| {
            let shifted = shift(&grid.point(j), alpha);
            // φ_{−1} > 0 everywhere, so only the phase of φ_0 survives.
            let denom = grid.interpolate(&phi_minus_c, &shifted);
            wrap_phase((phi_zero[j] / denom).arg())
        })
        .collect();
    Ok(CovariantField { grid: grid.clone(), gamma, phi_minus, phi_zero, kappa })
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// `max_θ |Γ(θ) − 1/(U(θ) − z − Γ(Sθ))|`, with `Γ(Sθ)` interpolated
/// multilinearly. Rejects grids whose interpolation error bound exceeds
/// `interp_tol`.
pub fn cocycle_residual(
    field: &CovariantField,
    z: &ComplexEnergy,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    interp_tol: f64,
) -> Result<f64, RiccatiError> {
    residual_of_values(&field.grid, &field.gamma, z, pot, alpha, interp_tol)
}

/// [`cocycle_residual`] on raw grid values.
pub fn residual_of_values(
    grid: &ThetaGrid,
    gamma: &[Complex64],
    z: &ComplexEnergy,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    interp_tol: f64,
) -> Result<f64, RiccatiError> {
    if gamma.len() != grid.len() {
        return Err(GridError::LengthMismatch { expected: grid.len(), got: gamma.len() }.into());
    }
    let error = grid.interpolation_error(gamma);
    if error > interp_tol {
        // Error scales like h², so the resolution grows like √(error/tol).
        let factor = (error / interp_tol).sqrt();
        let required =
            grid.sizes().iter().map(|&n| ((n as f64 * factor).ceil() as usize).next_power_of_two()).max().unwrap_or(0);
        return Err(RiccatiError::GridTooCoarse { error, tol: interp_tol, required });
    }
    let zc = z.z();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|j| {
            let theta = grid.point(j);
            let next = grid.interpolate(gamma, &shift(&theta, alpha));
            (gamma[j] - green_step(pot.eval(&theta), zc, next)).norm()
        })
        .reduce(|| 0.0, f64::max))
}

/// Iterates the backward recursion from each seed over the same potential
/// orbit and returns the largest pairwise distance of the results.
pub fn uniqueness_probe(
    z: &ComplexEnergy,
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta: &TorusPoint,
    seeds: &[RiccatiValue],
    depth: u64,
) -> Result<f64, RiccatiError> {
    if let Some(s) = seeds.iter().find(|s| !(s.value().im > 0.0)) {
        return Err(RiccatiError::BadSeed(s.value()));
    }
    let values = if depth == 0 {
        Vec::new()
    } else {
        crate::torus::orbit_sample(pot, alpha, theta, depth).expect("depth ≥ 1")
    };
    let zc = z.z();
    let ends: Vec<Complex64> = seeds.par_iter().map(|s| backward_from_values(&values, zc, s.value())).collect();
    Ok(max_pairwise(&ends))
}

fn max_pairwise(xs: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}
