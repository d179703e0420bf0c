//! Root Green function of the fanned-out tree operator
//! `Ĥ_λ ψ_x = Σ_{y∼x} ψ_y + (√K U(S^{|x|}θ) + λω_x) ψ_x` on the rooted
//! `K`-ary tree, by the branching recursion
//! `Γ̂_x = 1/(√K U(S^{|x|}θ) + λω_x − z − Σ_{y child of x} Γ̂_y)`.
//!
//! Generations are counted from the root, and every random draw is addressed
//! by `(seed, generation, slot)`. Deepening the tree therefore leaves the draws
//! of the shallow generations untouched.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::riccati::{default_depth, green_step, ComplexEnergy, RiccatiError, SEED};
use crate::rng::{mix64, stream_key, StreamRng};
use crate::stats::{bootstrap_ci, bootstrap_ci2, iqr, median, median_ci_sorted, sorted};
use crate::torus::{FrequencyVector, Orbit, TorusPoint, TrigPotential};

pub const DEFAULT_POOL: usize = 10_000;
/// Largest `K^depth` accepted by full-tree evaluation.
pub const MAX_FULL_TREE_LEAVES: u64 = 1 << 22;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const DEFAULT_IM_THRESHOLD: f64 = 0.05;
pub const THRESHOLD_SWEEP: [f64; 3] = [0.02, 0.05, 0.1];

const FULL_TAG: u64 = 0x6675_6c6c;
const RADIAL_TAG: u64 = 0x7261_6469;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("branching number must be at least 2, got {0}")]
    Branching(usize),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("disorder strength must be finite and non-negative, got {0}")]
    Lambda(f64),
    #[error("Cauchy scale must be positive, got {0}")]
    CauchyScale(f64),
    #[error("pool size must be at least 1")]
    EmptyPool,
    #[error("dimension mismatch: θ has {theta}, α has {alpha}, U has {pot}")]
    Dimension { theta: usize, alpha: usize, pot: usize },
    #[error("full tree needs K^depth = {leaves:.3e} leaves, above the limit {limit}; use the pool mode")]
    TreeTooLarge { leaves: f64, limit: u64 },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("sample {index} left the upper half plane: {value}")]
    NotHerglotz { index: usize, value: Complex64 },
    #[error("λ list must be sorted in decreasing order")]
    UnsortedLambdas,
    #[error("interval [{0}, {1}] must be bounded with lo < hi")]
    Interval(f64, f64),
    #[error("energy step {step} is coarser than the requested resolution {tolerance}")]
    GridTooCoarse { step: f64, tolerance: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
}

/// Distribution of the single-site disorder `ω_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disorder {
    /// Uniform on `[−1, 1]`.
    Uniform,
    /// `±1` with equal probability.
    Bernoulli,
    /// Symmetric Cauchy; `E log(1 + |ω|) < ∞` holds for every scale.
    Cauchy { scale: f64 },
}

impl Disorder {
    #[inline]
    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Disorder::Uniform => 2.0 * rng.next_f64() - 1.0,
            Disorder::Bernoulli => {
                if rng.next_u64() >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            Disorder::Cauchy { scale } => scale * (std::f64::consts::PI * (rng.next_f64() - 0.5)).tan(),
        }
    }
}

/// Evaluation strategy for the non-radial recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeMode {
    /// Population dynamics: each generation is a pool of `size` values, each
    /// built from `K` values drawn uniformly from the next generation's pool.
    Pool { size: usize },
    /// Exact evaluation of all `K^depth` leaves; the oracle for the pool.
    FullTree,
}

impl Default for TreeMode {
    fn default() -> Self {
        TreeMode::Pool { size: DEFAULT_POOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub branching: usize,
    /// Generation at which the forward values are seeded with `i`.
    pub depth: usize,
    pub lambda: f64,
    pub disorder: Disorder,
    /// One `ω` per generation instead of one per vertex.
    pub radial: bool,
    pub theta: TorusPoint,
    pub alpha: FrequencyVector,
    pub potential: TrigPotential,
    pub mode: TreeMode,
}

impl TreeConfig {
    /// `λ = 0`, uniform disorder, non-radial, default pool.
    pub fn new(
        branching: usize,
        depth: usize,
        potential: TrigPotential,
        alpha: FrequencyVector,
        theta: TorusPoint,
    ) -> Result<Self, TreeError> {
        let cfg = Self {
            branching,
            depth,
            lambda: 0.0,
            disorder: Disorder::Uniform,
            radial: false,
            theta,
            alpha,
            potential,
            mode: TreeMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `U = 0` on the circle, golden frequency, `θ = 0`.
    pub fn free(branching: usize, depth: usize) -> Result<Self, TreeError> {
        Self::new(branching, depth, TrigPotential::zero(1), FrequencyVector::golden(), TorusPoint::origin(1))
    }

    pub fn with_disorder(mut self, lambda: f64, disorder: Disorder) -> Self {
        self.lambda = lambda;
        self.disorder = disorder;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_radial(mut self, radial: bool) -> Self {
        self.radial = radial;
        self
    }

    pub fn with_mode(mut self, mode: TreeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.branching < 2 {
            return Err(TreeError::Branching(self.branching));
        }
        if self.depth == 0 {
            return Err(TreeError::ZeroDepth);
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(TreeError::Lambda(self.lambda));
        }
        if let Disorder::Cauchy { scale } = self.disorder {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(TreeError::CauchyScale(scale));
            }
        }
        let (t, a, p) = (self.theta.dim(), self.alpha.dim(), self.potential.dim());
        if t != a || a != p {
            return Err(TreeError::Dimension { theta: t, alpha: a, pot: p });
        }
        match self.mode {
            TreeMode::Pool { size: 0 } => Err(TreeError::EmptyPool),
            TreeMode::FullTree => {
                let leaves = (self.branching as f64).powi(self.depth as i32);
                if leaves > MAX_FULL_TREE_LEAVES as f64 {
                    Err(TreeError::TreeTooLarge { leaves, limit: MAX_FULL_TREE_LEAVES })
                } else {
                    Ok(())
                }
            }
            TreeMode::Pool { .. } => Ok(()),
        }
    }

    /// `√K U(S^g θ)` for generations `0..depth`.
    pub fn generation_potential(&self) -> Vec<f64> {
        let orbit = Orbit::new(&self.potential, &self.alpha, &self.theta);
        let sk = (self.branching as f64).sqrt();
        (0..self.depth as i64).map(|g| sk * orbit.potential_at(g)).collect()
    }
}

/// Depth matching the half-line default at `z/√K`: `max(10⁴, 20√K/η)`.
pub fn default_tree_depth(eta: f64, branching: usize) -> usize {
    default_depth(eta / (branching as f64).sqrt()) as usize
}

/// One vertex update, `1/(v + λω − z − Σ children)`.
#[inline]
pub fn vertex_update(v: f64, disorder_term: f64, z: Complex64, children: Complex64) -> Complex64 {
    green_step(v + disorder_term, z, children)
}

/// Root Green values with the seeds that address them.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenSampleBatch {
    pub z: ComplexEnergy,
    pub config: TreeConfig,
    pub seed: u64,
    pub samples: Vec<Complex64>,
    /// Stream key of the root draw of each sample.
    pub seeds: Vec<u64>,
}

impl GreenSampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn im(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.im).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.re).collect()
    }

    pub fn median_im(&self) -> f64 {
        median(&self.im())
    }

    /// JSON description of `z`, the seed and the configuration.
    pub fn header_json(&self) -> String {
        serde_json::json!({ "z": self.z, "seed": self.seed, "n_samples": self.len(), "config": self.config })
            .to_string()
    }

    /// `sample_index,re,im,seed`, preceded by a `#` line with the JSON header.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\nsample_index,re,im,seed\n", self.header_json());
        for (i, (s, k)) in self.samples.iter().zip(&self.seeds).enumerate() {
            out.push_str(&format!("{i},{},{},{k}\n", s.re, s.im));
        }
        out
    }
}

/// Samples the root Green function `Γ̂_λ(z, θ, ω)`.
///
/// `λ = 0` is deterministic: one chain `Γ̂_g = 1/(√K U_g − z − K Γ̂_{g+1})`
/// is evaluated and repeated. Radial disorder also reduces to independent
/// chains, one per sample. Otherwise the configured [`TreeMode`] is used.
pub fn tree_green(
    z: &ComplexEnergy,
    config: &TreeConfig,
    n_samples: usize,
    seed: u64,
) -> Result<GreenSampleBatch, TreeError> {
    config.validate()?;
    if !(z.eta > 0.0) {
        return Err(RiccatiError::NonPositiveEta(z.eta).into());
    }
    if n_samples == 0 {
        return Err(TreeError::NoSamples);
    }
    let pot = config.generation_potential();
    let zc = z.z();
    let (samples, seeds) = if config.lambda == 0.0 {
        let value = chain(&pot, zc, config.branching, |_| 0.0);
        (vec![value; n_samples], (0..n_samples as u64).map(|s| stream_key(seed, 0, s)).collect())
    } else if config.radial {
        radial_samples(&pot, zc, config, n_samples, seed)
    } else {
        match config.mode {
            TreeMode::Pool { size } => pool_samples(&pot, zc, config, size, n_samples, seed),
            TreeMode::FullTree => full_tree_samples(&pot, zc, config, n_samples, seed),
        }
    };
    if let Some(index) = samples.iter().position(|s| !(s.im >= 0.0) || !s.re.is_finite() || !s.im.is_finite()) {
        return Err(TreeError::NotHerglotz { index, value: samples[index] });
    }
    Ok(GreenSampleBatch { z: *z, config: config.clone(), seed, samples, seeds })
}

/// Radially symmetric recursion with disorder `ω(g)` per generation.
fn chain(pot: &[f64], z: Complex64, branching: usize, mut omega: impl FnMut(usize) -> f64) -> Complex64 {
    let k = branching as f64;
    (0..pot.len()).rev().fold(SEED, |next, g| vertex_update(pot[g], omega(g), z, next * k))
}

fn radial_samples(pot: &[f64], z: Complex64, config: &TreeConfig, n: usize, seed: u64) -> (Vec<Complex64>, Vec<u64>) {
    let base = mix64(seed ^ RADIAL_TAG);
    let samples = (0..n)
        .into_par_iter()
        .map(|s| {
            chain(pot, z, config.branching, |g| {
                config.lambda * config.disorder.sample(&mut StreamRng::new(base, s as u64, g as u64))
            })
        })
        .collect();
    (samples, (0..n as u64).map(|s| stream_key(base, s, 0)).collect())
}

fn pool_samples(
    pot: &[f64],
    z: Complex64,
    config: &TreeConfig,
    size: usize,
    n: usize,
    seed: u64,
) -> (Vec<Complex64>, Vec<u64>) {
    let update = |pool: &[Complex64], g: usize, slot: usize| {
        let mut rng = StreamRng::new(seed, g as u64, slot as u64);
        let mut sum = Complex64::new(0.0, 0.0);
        for _ in 0..config.branching {
            sum += pool[rng.index(pool.len())];
        }
        let omega = config.disorder.sample(&mut rng);
        vertex_update(pot[g], config.lambda * omega, z, sum)
    };
    let mut prev = vec![SEED; size];
    let mut next = vec![SEED; size];
    for g in (1..pot.len()).rev() {
        next.par_iter_mut().enumerate().for_each(|(slot, v)| *v = update(&prev, g, slot));
        std::mem::swap(&mut prev, &mut next);
    }
    let samples = (0..n).into_par_iter().map(|s| update(&prev, 0, s)).collect();
    (samples, (0..n as u64).map(|s| stream_key(seed, 0, s)).collect())
}

fn full_tree_samples(
    pot: &[f64],
    z: Complex64,
    config: &TreeConfig,
    n: usize,
    seed: u64,
) -> (Vec<Complex64>, Vec<u64>) {
    let base = mix64(seed ^ FULL_TAG);
    let k = config.branching;
    let depth = pot.len();
    let samples = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut level = vec![SEED; k.pow(depth as u32)];
            // Breadth-first label of the first vertex of generation g.
            let mut offset = (k.pow(depth as u32) - 1) / (k - 1);
            for g in (0..depth).rev() {
                let width = k.pow(g as u32);
                offset -= width;
                let up: Vec<Complex64> = (0..width)
                    .map(|v| {
                        let children: Complex64 = level[v * k..(v + 1) * k].iter().sum();
                        let mut rng = StreamRng::new(base, s as u64, (offset + v) as u64);
                        vertex_update(pot[g], config.lambda * config.disorder.sample(&mut rng), z, children)
                    })
                    .collect();
                level = up;
            }
            level[0]
        })
        .collect();
    (samples, (0..n as u64).map(|s| stream_key(base, s, 0)).collect())
}

/// `IQR(Im Γ̂) + IQR(Re Γ̂)` with linearly interpolated quartiles.
pub fn distribution_width(batch: &GreenSampleBatch) -> f64 {
    width_of(&batch.samples)
}

fn width_of(samples: &[Complex64]) -> f64 {
    let re: Vec<f64> = samples.iter().map(|s| s.re).collect();
    let im: Vec<f64> = samples.iter().map(|s| s.im).collect();
    iqr(&im) + iqr(&re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthPoint {
    pub lambda: f64,
    pub width: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub median_im: f64,
}

/// Distribution width against `λ` with 95% bootstrap intervals.
pub fn width_curve(
    z: &ComplexEnergy,
    base: &TreeConfig,
    lambdas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<WidthPoint>, TreeError> {
    if lambdas.windows(2).any(|w| !(w[0] >= w[1])) {
        return Err(TreeError::UnsortedLambdas);
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let batch = tree_green(z, &base.clone().with_lambda(lambda), n_samples, seed)?;
            let width = distribution_width(&batch);
            let (ci_lo, ci_hi) = sample_bootstrap(&batch.samples, width_of, seed);
            Ok(WidthPoint { lambda, width, ci_lo, ci_hi, median_im: batch.median_im() })
        })
        .collect()
}

/// Percentile bootstrap of a statistic of complex samples, resampling indices.
fn sample_bootstrap(samples: &[Complex64], stat: impl Fn(&[Complex64]) -> f64, seed: u64) -> (f64, f64) {
    let idx: Vec<f64> = (0..samples.len()).map(|i| i as f64).collect();
    bootstrap_ci(
        &idx,
        |r| {
            let picked: Vec<Complex64> = r.iter().map(|&i| samples[i as usize]).collect();
            stat(&picked)
        },
        BOOTSTRAP_RESAMPLES,
        0.95,
        seed,
    )
}

/// `λ, width, ci_lo, ci_hi` with a `#` JSON header line.
pub fn width_curve_csv(header_json: &str, points: &[WidthPoint]) -> String {
    let mut out = format!("# {header_json}\nlambda,width,ci_lo,ci_hi\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.lambda, p.width, p.ci_lo, p.ci_hi));
    }
    out
}

/// Parameters of [`ac_mass`]; the energy grid covers `√K·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcMassSpec {
    pub interval: (f64, f64),
    pub eta: f64,
    pub n_samples: usize,
    pub threshold: f64,
    /// Energy step on `√K·I`.
    pub step: f64,
    /// Requested resolution; a coarser step is rejected.
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcMassRow {
    pub energy: f64,
    pub median_im: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcMassReport {
    pub mass: f64,
    /// Mass counted with the lower / upper end of the median interval.
    pub mass_lo: f64,
    pub mass_hi: f64,
    pub threshold: f64,
    /// `(threshold, mass)` over [`THRESHOLD_SWEEP`].
    pub sensitivity: Vec<(f64, f64)>,
    /// Number of threshold crossings times the step.
    pub quadrature_error: f64,
    pub step: f64,
    pub rows: Vec<AcMassRow>,
}

/// Lebesgue measure of `{E ∈ √K·I : median Im Γ̂_λ(E + iη) > threshold}` by
/// midpoint quadrature.
pub fn ac_mass(spec: &AcMassSpec, config: &TreeConfig) -> Result<AcMassReport, TreeError> {
    let (lo, hi) = spec.interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(TreeError::Interval(lo, hi));
    }
    if !(spec.step > 0.0) || spec.step > spec.tolerance {
        return Err(TreeError::GridTooCoarse { step: spec.step, tolerance: spec.tolerance });
    }
    let sk = (config.branching as f64).sqrt();
    let (a, b) = (sk * lo, sk * hi);
    let cells = ((b - a) / spec.step).ceil() as usize;
    let step = (b - a) / cells as f64;
    let rows = (0..cells)
        .into_par_iter()
        .map(|c| {
            let energy = a + (c as f64 + 0.5) * step;
            let z = ComplexEnergy::new(energy, spec.eta)?;
            let batch = tree_green(&z, config, spec.n_samples, spec.seed)?;
            let im = sorted(&batch.im());
            let (ci_lo, ci_hi) = median_ci_sorted(&im);
            Ok(AcMassRow { energy, median_im: median(&im), ci_lo, ci_hi })
        })
        .collect::<Result<Vec<_>, TreeError>>()?;
    let measure = |f: &dyn Fn(&AcMassRow) -> f64, t: f64| rows.iter().filter(|r| f(r) > t).count() as f64 * step;
    let crossings =
        rows.windows(2).filter(|w| (w[0].median_im > spec.threshold) != (w[1].median_im > spec.threshold)).count();
    Ok(AcMassReport {
        mass: measure(&|r| r.median_im, spec.threshold),
        mass_lo: measure(&|r| r.ci_lo, spec.threshold),
        mass_hi: measure(&|r| r.ci_hi, spec.threshold),
        threshold: spec.threshold,
        sensitivity: THRESHOLD_SWEEP.iter().map(|&t| (t, measure(&|r| r.median_im, t))).collect(),
        quadrature_error: crossings as f64 * step,
        step,
        rows,
    })
}

/// Full-tree against pool estimate of the median of `Im Γ̂` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolComparison {
    pub energy: f64,
    pub eta: f64,
    pub lambda: f64,
    pub full_median: f64,
    pub pool_median: f64,
    /// 95% bootstrap interval of `full_median − pool_median`.
    pub diff_ci: (f64, f64),
    pub agree: bool,
}

/// Runs `config` in full-tree mode and with a pool of `pool_size`, same depth.
pub fn compare_pool_full(
    z: &ComplexEnergy,
    config: &TreeConfig,
    pool_size: usize,
    n_samples: usize,
    seed: u64,
) -> Result<PoolComparison, TreeError> {
    let full = tree_green(z, &config.clone().with_mode(TreeMode::FullTree), n_samples, seed)?;
    let pool = tree_green(z, &config.clone().with_mode(TreeMode::Pool { size: pool_size }), n_samples, seed)?;
    let (fi, pi) = (full.im(), pool.im());
    let diff_ci = bootstrap_ci2(&fi, &pi, |a, b| median(a) - median(b), BOOTSTRAP_RESAMPLES, 0.95, seed);
    Ok(PoolComparison {
        energy: z.energy,
        eta: z.eta,
        lambda: config.lambda,
        full_median: median(&fi),
        pool_median: median(&pi),
        diff_ci,
        agree: diff_ci.0 <= 0.0 && 0.0 <= diff_ci.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::free_green;

    #[test]
    fn free_binary_tree_at_i() {
        let z = ComplexEnergy::new(0.0, 1.0).unwrap();
        let cfg = TreeConfig::free(2, 200).unwrap();
        let b = tree_green(&z, &cfg, 3, 1).unwrap();
        let want = free_green(Complex64::new(0.0, 1.0) / 2f64.sqrt()) / 2f64.sqrt();
        assert!((b.samples[0] - want).norm() < 1e-12);
        assert!(b.samples.iter().all(|s| *s == b.samples[0]));
        assert_eq!(distribution_width(&b), 0.0);
    }

    #[test]
    fn full_tree_limit() {
        let err = TreeConfig::free(2, 23).unwrap().with_mode(TreeMode::FullTree).validate().unwrap_err();
        assert!(matches!(err, TreeError::TreeTooLarge { .. }));
        assert!(err.to_string().contains("pool"));
        assert!(TreeConfig::free(2, 22).unwrap().with_mode(TreeMode::FullTree).validate().is_ok());
    }

    #[test]
    fn full_tree_without_disorder_matches_chain() {
        let z = ComplexEnergy::new(0.3, 0.1).unwrap();
        let cfg = TreeConfig::free(3, 6).unwrap().with_mode(TreeMode::FullTree);
        let deterministic = tree_green(&z, &cfg, 1, 0).unwrap().samples[0];
        let tiny = tree_green(&z, &cfg.clone().with_lambda(1e-300), 1, 0).unwrap().samples[0];
        assert!((deterministic - tiny).norm() < 1e-14);
    }

    #[test]
    fn zero_lambda_width_curve() {
        let z = ComplexEnergy::new(0.5, 0.01).unwrap();
        let pts = width_curve(&z, &TreeConfig::free(2, 50).unwrap(), &[0.0], 10, 3).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!((pts[0].lambda, pts[0].width, pts[0].ci_lo, pts[0].ci_hi), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(
            width_curve(&z, &TreeConfig::free(2, 50).unwrap(), &[0.1, 0.2], 10, 3),
            Err(TreeError::UnsortedLambdas)
        );
    }

    #[test]
    fn csv_layout() {
        let z = ComplexEnergy::new(0.0, 0.5).unwrap();
        let b = tree_green(&z, &TreeConfig::free(2, 10).unwrap().with_lambda(0.3), 4, 7).unwrap();
        let csv = b.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "sample_index,re,im,seed");
        assert_eq!(lines.len(), 6);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn mass_outside_spectrum_vanishes() {
        let spec = AcMassSpec {
            interval: (5.0, 6.0),
            eta: 1e-3,
            n_samples: 1,
            threshold: DEFAULT_IM_THRESHOLD,
            step: 0.05,
            tolerance: 0.05,
            seed: 0,
        };
        let r = ac_mass(&spec, &TreeConfig::free(2, 1000).unwrap()).unwrap();
        assert_eq!(r.mass, 0.0);
        let coarse = AcMassSpec { step: 0.1, ..spec };
        assert!(matches!(ac_mass(&coarse, &TreeConfig::free(2, 10).unwrap()), Err(TreeError::GridTooCoarse { .. })));
    }

    #[test]
    fn disorder_ranges() {
        let mut rng = StreamRng::new(1, 2, 3);
        for _ in 0..1000 {
            let u = Disorder::Uniform.sample(&mut rng);
            assert!((-1.0..1.0).contains(&u));
            assert!(Disorder::Bernoulli.sample(&mut rng).abs() == 1.0);
            assert!(Disorder::Cauchy { scale: 0.5 }.sample(&mut rng).is_finite());
        }
    }
}
