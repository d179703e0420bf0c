//! Torus points, the irrational shift and trigonometric potentials.
//!
//! Angles live in radians on `[0, 2π)^ν`; frequencies are stored in cycles and
//! multiplied by `2π` only when a shift is applied. Long orbits are evaluated by
//! reducing `n·α` directly (with an exact two-product for the rounding error)
//! rather than by repeated addition, so the phase of the `n`-th iterate does not
//! drift with `n`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Golden-mean frequency `(√5 − 1)/2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Default bound on `‖m‖∞` for the ergodicity check.
pub const DEFAULT_M_CHECK: u64 = 10_000;

/// Upper bound on the number of integer vectors enumerated by the ergodicity
/// check for `ν ≥ 2`.
const MAX_CHECK_VECTORS: f64 = 1.0e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("torus dimension must be at least 1")]
    EmptyDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("frequency is not ergodic: m = {m:?} gives m·α ∈ ℤ")]
    Resonant { m: Vec<i64> },
    #[error("orbit length must be at least 1")]
    EmptyOrbit,
    #[error("orbit length {0} exceeds the supported range")]
    OrbitTooLong(u64),
}

/// Reduces an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two points of `ℝ/ℤ`.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// `frac(n·α)` with the rounding error of the product carried separately.
#[inline]
fn frac_product(n: f64, alpha: f64) -> f64 {
    let p = n * alpha;
    let err = n.mul_add(alpha, -p);
    frac(frac(p) + err)
}

/// A point `θ ∈ [0, 2π)^ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Builds a point, reducing every coordinate modulo `2π`.
    pub fn new(coords: Vec<f64>) -> Result<Self, TorusError> {
        if coords.is_empty() {
            return Err(TorusError::EmptyDimension);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(TorusError::NonFinite { index, value });
        }
        Ok(Self { coords: coords.into_iter().map(wrap_angle).collect() })
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "torus dimension must be at least 1");
        Self { coords: vec![0.0; dim] }
    }

    pub fn scalar(theta: f64) -> Self {
        Self::new(vec![theta]).expect("finite angle")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Adds `2π·turns` componentwise and reduces.
    pub fn rotate(&self, turns: &[f64]) -> Self {
        debug_assert_eq!(turns.len(), self.dim());
        Self { coords: self.coords.iter().zip(turns).map(|(&t, &f)| wrap_angle(t + TAU * f)).collect() }
    }
}

impl TryFrom<Vec<f64>> for TorusPoint {
    type Error = TorusError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TorusPoint> for Vec<f64> {
    fn from(p: TorusPoint) -> Self {
        p.coords
    }
}

/// Frequency vector `α`, in cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyVector {
    alpha: Vec<f64>,
}

impl FrequencyVector {
    /// Builds a frequency vector without the ergodicity check. Rational
    /// frequencies are accepted here; they are useful in tests.
    pub fn new(alpha: Vec<f64>) -> Result<Self, TorusError> {
        if alpha.is_empty() {
            return Err(TorusError::EmptyDimension);
        }
        if let Some((index, &value)) = alpha.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(TorusError::NonFinite { index, value });
        }
        Ok(Self { alpha })
    }

    /// Builds a frequency vector and rejects it if some `m ≠ 0` with
    /// `‖m‖∞ ≤ m_check` makes `m·α` an integer.
    pub fn ergodic(alpha: Vec<f64>, m_check: u64) -> Result<Self, TorusError> {
        let f = Self::new(alpha)?;
        f.check_ergodic(m_check)?;
        Ok(f)
    }

    pub fn golden() -> Self {
        Self { alpha: vec![GOLDEN_MEAN] }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.alpha
    }

    /// `m·α`.
    pub fn dot(&self, m: &[i64]) -> f64 {
        m.iter().zip(&self.alpha).map(|(&mi, &a)| mi as f64 * a).sum()
    }

    /// Effective enumeration bound for the ergodicity check. For `ν ≥ 2` the
    /// bound is capped so that at most ~10⁷ vectors are visited.
    pub fn effective_check_bound(&self, m_check: u64) -> u64 {
        if self.dim() == 1 {
            return m_check;
        }
        let per_axis = MAX_CHECK_VECTORS.powf(1.0 / self.dim() as f64);
        let cap = ((per_axis - 1.0) / 2.0).floor().max(1.0) as u64;
        m_check.min(cap)
    }

    pub fn check_ergodic(&self, m_check: u64) -> Result<(), TorusError> {
        let bound = self.effective_check_bound(m_check) as i64;
        if bound == 0 {
            return Ok(());
        }
        let mut found: Option<Vec<i64>> = None;
        let inf_norm = |m: &[i64]| m.iter().map(|x| x.abs()).max().unwrap_or(0);
        for_each_lattice_vector(self.dim(), bound, |m| {
            // Only one of ±m needs checking, and m = 0 is excluded.
            if !m.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                return;
            }
            if found.as_ref().is_some_and(|f| inf_norm(f) <= inf_norm(m)) {
                return;
            }
            let s = self.dot(m);
            let norm1: i64 = m.iter().map(|x| x.abs()).sum();
            if (s - s.round()).abs() <= 1e-10 * norm1.max(1) as f64 {
                found = Some(m.to_vec());
            }
        });
        match found {
            Some(m) => Err(TorusError::Resonant { m }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<f64>> for FrequencyVector {
    type Error = TorusError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<FrequencyVector> for Vec<f64> {
    fn from(f: FrequencyVector) -> Self {
        f.alpha
    }
}

/// Visits every `m ∈ ℤ^ν` with `‖m‖∞ ≤ bound`.
pub fn for_each_lattice_vector(dim: usize, bound: i64, mut visit: impl FnMut(&[i64])) {
    let mut m = vec![-bound; dim];
    loop {
        visit(&m);
        let mut i = 0;
        while i < dim && m[i] == bound {
            m[i] = -bound;
            i += 1;
        }
        if i == dim {
            return;
        }
        m[i] += 1;
    }
}

/// `S θ = (θ + 2πα) mod 2π`.
pub fn shift(theta: &TorusPoint, alpha: &FrequencyVector) -> TorusPoint {
    assert_eq!(theta.dim(), alpha.dim(), "dimension mismatch");
    theta.rotate(&alpha.alpha)
}

/// `S⁻¹ θ`.
pub fn shift_inverse(theta: &TorusPoint, alpha: &FrequencyVector) -> TorusPoint {
    assert_eq!(theta.dim(), alpha.dim(), "dimension mismatch");
    let neg: Vec<f64> = alpha.alpha.iter().map(|a| -a).collect();
    theta.rotate(&neg)
}

/// `S^n θ` evaluated directly from `frac(n·α)`; `n` may be negative.
pub fn shift_n(theta: &TorusPoint, alpha: &FrequencyVector, n: i64) -> TorusPoint {
    assert_eq!(theta.dim(), alpha.dim(), "dimension mismatch");
    let turns: Vec<f64> = alpha.alpha.iter().map(|&a| frac_product(n as f64, a)).collect();
    theta.rotate(&turns)
}

/// One cosine/sine pair `a cos(m·θ) + b sin(m·θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub m: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Finite trigonometric series on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPotential {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPotential {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self, TorusError> {
        if dim == 0 {
            return Err(TorusError::EmptyDimension);
        }
        for t in &terms {
            if t.m.len() != dim {
                return Err(TorusError::DimensionMismatch { expected: dim, got: t.m.len() });
            }
            for (index, value) in [(0, t.cos), (1, t.sin)] {
                if !value.is_finite() {
                    return Err(TorusError::NonFinite { index, value });
                }
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Vec::new()).expect("valid dimension")
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, vec![TrigTerm { m: vec![0; dim], cos: c, sin: 0.0 }]).expect("valid constant")
    }

    /// `U(θ) = u cos θ` on the circle.
    pub fn almost_mathieu(u: f64) -> Self {
        Self::new(1, vec![TrigTerm { m: vec![1], cos: u, sin: 0.0 }]).expect("valid coupling")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    /// Largest `‖m‖∞` with a non-zero coefficient.
    pub fn truncation_order(&self) -> i64 {
        self.terms
            .iter()
            .filter(|t| t.cos != 0.0 || t.sin != 0.0)
            .flat_map(|t| t.m.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Sum of absolute coefficients; bounds `|U|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum()
    }

    pub fn eval(&self, theta: &TorusPoint) -> f64 {
        assert_eq!(theta.dim(), self.dim, "dimension mismatch");
        self.eval_unwrapped(theta.coords())
    }

    /// `U` at raw coordinates, without reduction modulo `2π`.
    pub fn eval_unwrapped(&self, coords: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.m.iter().zip(coords).map(|(&m, &x)| m as f64 * x).sum();
                let (s, c) = phase.sin_cos();
                t.cos * c + t.sin * s
            })
            .sum()
    }
}

/// `U(θ)`.
pub fn eval_potential(pot: &TrigPotential, theta: &TorusPoint) -> f64 {
    pot.eval(theta)
}

/// Potential along an orbit, with random access to `V_j = U(S^j θ₀)`.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    pot: &'a TrigPotential,
    alpha: &'a FrequencyVector,
    theta0: &'a TorusPoint,
}

impl<'a> Orbit<'a> {
    pub fn new(pot: &'a TrigPotential, alpha: &'a FrequencyVector, theta0: &'a TorusPoint) -> Self {
        assert_eq!(pot.dim(), alpha.dim(), "dimension mismatch");
        assert_eq!(theta0.dim(), alpha.dim(), "dimension mismatch");
        Self { pot, alpha, theta0 }
    }

    /// `U(S^j θ₀)`.
    #[inline]
    pub fn potential_at(&self, j: i64) -> f64 {
        let coords: smallvec_coords::Coords = self
            .theta0
            .coords()
            .iter()
            .zip(self.alpha.components())
            .map(|(&t, &a)| wrap_angle(t + TAU * frac_product(j as f64, a)))
            .collect();
        self.pot.eval_unwrapped(coords.as_slice())
    }

    pub fn point_at(&self, j: i64) -> TorusPoint {
        shift_n(self.theta0, self.alpha, j)
    }
}

/// Stack storage for short coordinate vectors.
mod smallvec_coords {
    const INLINE: usize = 4;

    pub enum Coords {
        Inline([f64; INLINE], usize),
        Heap(Vec<f64>),
    }

    impl Coords {
        pub fn as_slice(&self) -> &[f64] {
            match self {
                Coords::Inline(buf, n) => &buf[..*n],
                Coords::Heap(v) => v,
            }
        }
    }

    impl FromIterator<f64> for Coords {
        fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
            let mut buf = [0.0; INLINE];
            let mut n = 0;
            let mut it = iter.into_iter();
            for x in it.by_ref() {
                if n == INLINE {
                    let mut v = buf.to_vec();
                    v.push(x);
                    v.extend(it);
                    return Coords::Heap(v);
                }
                buf[n] = x;
                n += 1;
            }
            Coords::Inline(buf, n)
        }
    }
}

/// `[U(S^j θ₀)]_{j = 0..n-1}`.
pub fn orbit_sample(
    pot: &TrigPotential,
    alpha: &FrequencyVector,
    theta0: &TorusPoint,
    n: u64,
) -> Result<Vec<f64>, TorusError> {
    if n == 0 {
        return Err(TorusError::EmptyOrbit);
    }
    if n > i64::MAX as u64 || usize::try_from(n).is_err() || n > (1 << 40) {
        return Err(TorusError::OrbitTooLong(n));
    }
    let orbit = Orbit::new(pot, alpha, theta0);
    Ok((0..n as i64).map(|j| orbit.potential_at(j)).collect())
}

/// Kolmogorov-Smirnov distance between the first coordinate of `n` orbit
/// points and the uniform law on `[0, 2π)`.
pub fn orbit_ks_distance(theta0: &TorusPoint, alpha: &FrequencyVector, n: u64) -> f64 {
    let mut xs: Vec<f64> = (0..n as i64).map(|j| shift_n(theta0, alpha, j).coords()[0] / TAU).collect();
    xs.sort_by(f64::total_cmp);
    let len = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / len;
            let hi = (i + 1) as f64 / len - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}
