//! Experiment configuration: strict TOML parsing and validation.
//!
//! A document names its `kind`, the potential, the torus data and an energy
//! grid; kind-specific parameters live under `[params]`. Every validation
//! problem is collected before reporting.

use std::fmt;

use qpspectra_core::cocycle::{energy_grid, MIN_STEPS};
use qpspectra_core::torus::{FrequencyVector, TorusPoint, TrigPotential, TrigTerm, DEFAULT_M_CHECK, GOLDEN_MEAN};
use qpspectra_core::tree::{Disorder, TreeConfig, TreeMode, DEFAULT_IM_THRESHOLD, DEFAULT_POOL};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{}", format_invalid(.0))]
    Invalid(Vec<String>),
}

fn format_invalid(errors: &[String]) -> String {
    let mut out = format!("{} validation error(s):", errors.len());
    for e in errors {
        out.push_str("\n  - ");
        out.push_str(e);
    }
    out
}

/// The document as written, kept for the report echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub torus: TorusSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySpec>,
    #[serde(default)]
    pub params: toml::Table,
}

/// Either `coupling = u` for `u cos θ`, or an explicit list of terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub m: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    /// Frequencies in cycles; golden mean when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_check: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    LyapunovSweep,
    IdsSweep,
    AcClassify,
    GreenProbe,
    BfDiagnostics,
    TreeWidth,
    AcMass,
    GapLabels,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::LyapunovSweep,
        Kind::IdsSweep,
        Kind::AcClassify,
        Kind::GreenProbe,
        Kind::BfDiagnostics,
        Kind::TreeWidth,
        Kind::AcMass,
        Kind::GapLabels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::LyapunovSweep => "lyapunov_sweep",
            Kind::IdsSweep => "ids_sweep",
            Kind::AcClassify => "ac_classify",
            Kind::GreenProbe => "green_probe",
            Kind::BfDiagnostics => "bf_diagnostics",
            Kind::TreeWidth => "tree_width",
            Kind::AcMass => "ac_mass",
            Kind::GapLabels => "gap_labels",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn uses_energy_grid(self) -> bool {
        !matches!(self, Kind::TreeWidth | Kind::AcMass)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    /// Orbit length per starting phase.
    pub steps: u64,
    /// Starting phases `θ0 + j/phases` turns, `j < phases`.
    pub phases: usize,
    pub gamma_tol: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self { steps: 100_000, phases: 4, gamma_tol: 5e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapParams {
    pub steps: u64,
    pub phases: usize,
    pub gamma_tol: f64,
    pub ids_flat_tol: f64,
    pub label_bound: i64,
    pub label_tol: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        Self { steps: 100_000, phases: 1, gamma_tol: 5e-3, ids_flat_tol: 2e-3, label_bound: 50, label_tol: 1e-2 }
    }
}

impl GapParams {
    pub fn sweep(&self) -> SweepParams {
        SweepParams { steps: self.steps, phases: self.phases, gamma_tol: self.gamma_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeParams {
    pub eta: f64,
    /// Recursion depth; `max(10⁴, 20/η)` when absent.
    pub depth: Option<u64>,
    /// Number of random upper-half-plane seeds for the uniqueness probe.
    pub probe_seeds: usize,
}

impl Default for ProbeParams {
    fn default() -> Self {
        Self { eta: 1e-2, depth: None, probe_seeds: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfParams {
    pub eta: f64,
    pub grid_size: usize,
    /// Orbit length of the IDS estimate.
    pub steps: u64,
    pub dispersion: f64,
    pub reducibility: f64,
    pub ids_tol: f64,
    pub resonance_bound: i64,
}

impl Default for BfParams {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            grid_size: 512,
            steps: 100_000,
            dispersion: 0.1,
            reducibility: 5e-2,
            ids_tol: 2e-2,
            resonance_bound: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeWidthParams {
    pub energy: f64,
    pub eta: f64,
    /// Disorder strengths, non-increasing.
    pub lambdas: Vec<f64>,
    pub n_samples: usize,
    pub branching: usize,
    pub depth: Option<usize>,
    pub disorder: Disorder,
    pub radial: bool,
    pub pool_size: usize,
    pub full_tree: bool,
}

impl Default for TreeWidthParams {
    fn default() -> Self {
        Self {
            energy: 0.5,
            eta: 1e-2,
            lambdas: vec![0.5, 0.25, 0.1, 0.05],
            n_samples: 2000,
            branching: 2,
            depth: None,
            disorder: Disorder::Uniform,
            radial: false,
            pool_size: DEFAULT_POOL,
            full_tree: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcMassParams {
    /// Interval `I`; the energies scanned cover `√K·I`.
    pub interval: [f64; 2],
    pub eta: f64,
    pub lambda: f64,
    pub n_samples: usize,
    pub threshold: f64,
    pub step: f64,
    /// Coarsest accepted step.
    pub tolerance: f64,
    pub branching: usize,
    pub depth: Option<usize>,
    pub disorder: Disorder,
    pub radial: bool,
    pub pool_size: usize,
    pub full_tree: bool,
}

impl Default for AcMassParams {
    fn default() -> Self {
        Self {
            interval: [-2.0, 2.0],
            eta: 1e-2,
            lambda: 0.0,
            n_samples: 500,
            threshold: DEFAULT_IM_THRESHOLD,
            step: 0.05,
            tolerance: 0.05,
            branching: 2,
            depth: None,
            disorder: Disorder::Uniform,
            radial: false,
            pool_size: DEFAULT_POOL,
            full_tree: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    LyapunovSweep(SweepParams),
    IdsSweep(SweepParams),
    AcClassify(SweepParams),
    GreenProbe(ProbeParams),
    BfDiagnostics(BfParams),
    TreeWidth(TreeWidthParams),
    AcMass(AcMassParams),
    GapLabels(GapParams),
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub kind: Kind,
    pub seed: u64,
    pub potential: TrigPotential,
    pub alpha: FrequencyVector,
    pub theta0: TorusPoint,
    /// Empty for the tree kinds.
    pub energies: Vec<f64>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    /// Replaces the RNG seed, in the echo as well.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.raw.seed = Some(seed);
        self
    }

    /// The effective document: re-parsing it reproduces this config.
    pub fn echo(&self) -> String {
        let mut raw = self.raw.clone();
        raw.seed = Some(self.seed);
        toml::to_string(&raw).expect("config serializes")
    }

    /// Tree configuration for the tree kinds.
    pub fn tree_config(&self) -> Option<TreeConfig> {
        let (k, depth, eta, lambda, disorder, radial, pool, full) = match &self.experiment {
            Experiment::TreeWidth(p) => {
                (p.branching, p.depth, p.eta, 0.0, p.disorder, p.radial, p.pool_size, p.full_tree)
            }
            Experiment::AcMass(p) => {
                (p.branching, p.depth, p.eta, p.lambda, p.disorder, p.radial, p.pool_size, p.full_tree)
            }
            _ => return None,
        };
        let depth = depth.unwrap_or_else(|| qpspectra_core::tree::default_tree_depth(eta, k.max(1)));
        let mode = if full { TreeMode::FullTree } else { TreeMode::Pool { size: pool } };
        let cfg = TreeConfig {
            branching: k,
            depth,
            lambda,
            disorder,
            radial,
            theta: self.theta0.clone(),
            alpha: self.alpha.clone(),
            potential: self.potential.clone(),
            mode,
        };
        Some(cfg)
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;
    validate(raw)
}

struct Errors(Vec<String>);

impl Errors {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }
}

fn params<T: DeserializeOwned + Default>(table: &toml::Table, errors: &mut Errors) -> T {
    match toml::Value::Table(table.clone()).try_into() {
        Ok(p) => p,
        Err(e) => {
            errors.0.push(format!("params: {}", e.message().trim()));
            T::default()
        }
    }
}

pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut errors = Errors(Vec::new());
    let kind = Kind::parse(&raw.kind);
    if kind.is_none() {
        let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
        errors.0.push(format!("unknown experiment kind \"{}\" (expected one of {})", raw.kind, names.join(", ")));
    }

    let alpha_values = raw.torus.alpha.clone().unwrap_or_else(|| vec![GOLDEN_MEAN]);
    let dim = alpha_values.len();
    let m_check = raw.torus.m_check.unwrap_or(DEFAULT_M_CHECK);
    let alpha = match FrequencyVector::new(alpha_values) {
        Ok(a) => match a.check_ergodic(m_check) {
            Ok(()) => Some(a),
            Err(e) => {
                errors.0.push(format!("alpha fails the ergodicity check with m_check = {m_check}: {e}"));
                None
            }
        },
        Err(e) => {
            errors.0.push(format!("alpha: {e}"));
            None
        }
    };

    let theta0 = match &raw.torus.theta0 {
        None if dim > 0 => Some(TorusPoint::origin(dim)),
        None => None,
        Some(t) => {
            errors.check(t.len() == dim, || format!("theta0 has {} coordinates but alpha has {dim}", t.len()));
            TorusPoint::new(t.clone()).map_err(|e| errors.0.push(format!("theta0: {e}"))).ok()
        }
    };

    let potential = match (&raw.potential.coupling, &raw.potential.terms) {
        (Some(u), None) => {
            errors.check(u.is_finite(), || format!("potential coupling must be finite, got {u}"));
            errors.check(dim == 1, || {
                format!("potential coupling describes u·cos θ on the circle; alpha has dimension {dim}")
            });
            Some(TrigPotential::almost_mathieu(*u))
        }
        (None, Some(terms)) => {
            let terms = terms.iter().map(|t| TrigTerm { m: t.m.clone(), cos: t.cos, sin: t.sin }).collect();
            TrigPotential::new(dim.max(1), terms).map_err(|e| errors.0.push(format!("potential: {e}"))).ok()
        }
        _ => {
            errors.0.push("potential needs exactly one of `coupling` or `terms`".into());
            None
        }
    };

    let mut energies = Vec::new();
    if let Some(kind) = kind {
        match (&raw.energy, kind.uses_energy_grid()) {
            (None, true) => errors.0.push(format!("{kind} needs an [energy] grid")),
            (Some(_), false) => errors.0.push(format!("{kind} does not use an [energy] grid")),
            (Some(e), true) => {
                let finite = e.min.is_finite() && e.max.is_finite() && e.step.is_finite();
                errors.check(finite, || "energy bounds and step must be finite".into());
                errors.check(e.step > 0.0, || "step must be positive".into());
                errors.check(e.max >= e.min, || format!("energy max {} is below min {}", e.max, e.min));
                if finite && e.step > 0.0 && e.max >= e.min {
                    energies = energy_grid(e.min, e.max, e.step);
                }
            }
            (None, false) => {}
        }
    }

    let experiment = kind.map(|kind| kind_params(kind, &raw.params, &mut errors));
    if let Some(exp) = &experiment {
        check_params(exp, &mut errors);
    }

    if !errors.0.is_empty() {
        return Err(ConfigError::Invalid(errors.0));
    }
    let cfg = ExperimentConfig {
        seed: raw.seed.unwrap_or(0),
        kind: kind.expect("checked"),
        potential: potential.expect("checked"),
        alpha: alpha.expect("checked"),
        theta0: theta0.expect("checked"),
        energies,
        experiment: experiment.expect("checked"),
        raw,
    };
    if let Some(tree) = cfg.tree_config() {
        tree.validate().map_err(|e| ConfigError::Invalid(vec![format!("tree: {e}")]))?;
    }
    Ok(cfg)
}

fn kind_params(kind: Kind, table: &toml::Table, errors: &mut Errors) -> Experiment {
    match kind {
        Kind::LyapunovSweep => Experiment::LyapunovSweep(params(table, errors)),
        Kind::IdsSweep => Experiment::IdsSweep(params(table, errors)),
        Kind::AcClassify => Experiment::AcClassify(params(table, errors)),
        Kind::GreenProbe => Experiment::GreenProbe(params(table, errors)),
        Kind::BfDiagnostics => Experiment::BfDiagnostics(params(table, errors)),
        Kind::TreeWidth => Experiment::TreeWidth(params(table, errors)),
        Kind::AcMass => Experiment::AcMass(params(table, errors)),
        Kind::GapLabels => Experiment::GapLabels(params(table, errors)),
    }
}

fn check_sweep(p: &SweepParams, e: &mut Errors) {
    e.check(p.steps >= MIN_STEPS, || format!("steps must be at least {MIN_STEPS}, got {}", p.steps));
    e.check(p.phases >= 1, || "phases must be at least 1".into());
    e.check(p.gamma_tol > 0.0, || format!("gamma_tol must be positive, got {}", p.gamma_tol));
}

fn check_eta(eta: f64, e: &mut Errors) {
    e.check(eta > 0.0 && eta.is_finite(), || format!("eta must be positive, got {eta}"));
}

fn check_tree(k: usize, depth: Option<usize>, n: usize, pool: usize, e: &mut Errors) {
    e.check(k >= 2, || format!("branching must be at least 2, got {k}"));
    e.check(depth != Some(0), || "depth must be at least 1".into());
    e.check(n >= 2, || format!("n_samples must be at least 2, got {n}"));
    e.check(pool >= 1, || "pool_size must be at least 1".into());
}

fn check_params(exp: &Experiment, e: &mut Errors) {
    match exp {
        Experiment::LyapunovSweep(p) | Experiment::IdsSweep(p) | Experiment::AcClassify(p) => check_sweep(p, e),
        Experiment::GapLabels(p) => {
            check_sweep(&p.sweep(), e);
            e.check(p.ids_flat_tol > 0.0, || "ids_flat_tol must be positive".into());
            e.check(p.label_bound >= 1, || "label_bound must be at least 1".into());
            e.check(p.label_tol > 0.0, || "label_tol must be positive".into());
        }
        Experiment::GreenProbe(p) => {
            check_eta(p.eta, e);
            e.check(p.depth != Some(0), || "depth must be at least 1".into());
            e.check(p.probe_seeds >= 2, || "probe_seeds must be at least 2".into());
        }
        Experiment::BfDiagnostics(p) => {
            check_eta(p.eta, e);
            e.check(p.grid_size >= 4 && p.grid_size.is_power_of_two(), || {
                format!("grid_size must be a power of two ≥ 4, got {}", p.grid_size)
            });
            e.check(p.steps >= MIN_STEPS, || format!("steps must be at least {MIN_STEPS}, got {}", p.steps));
            e.check(p.resonance_bound >= 1, || "resonance_bound must be at least 1".into());
            for (name, v) in [("dispersion", p.dispersion), ("reducibility", p.reducibility), ("ids_tol", p.ids_tol)] {
                e.check(v > 0.0, || format!("{name} must be positive, got {v}"));
            }
        }
        Experiment::TreeWidth(p) => {
            check_eta(p.eta, e);
            check_tree(p.branching, p.depth, p.n_samples, p.pool_size, e);
            e.check(p.energy.is_finite(), || "energy must be finite".into());
            e.check(!p.lambdas.is_empty(), || "lambdas must not be empty".into());
            e.check(p.lambdas.iter().all(|&l| l >= 0.0 && l.is_finite()), || "lambdas must be finite and ≥ 0".into());
            e.check(p.lambdas.windows(2).all(|w| w[0] >= w[1]), || "lambdas must be non-increasing".into());
        }
        Experiment::AcMass(p) => {
            check_eta(p.eta, e);
            check_tree(p.branching, p.depth, p.n_samples, p.pool_size, e);
            let [lo, hi] = p.interval;
            e.check(lo < hi && lo.is_finite() && hi.is_finite(), || format!("interval [{lo}, {hi}] is empty"));
            e.check(p.lambda >= 0.0 && p.lambda.is_finite(), || format!("lambda must be ≥ 0, got {}", p.lambda));
            e.check(p.step > 0.0, || "step must be positive".into());
            e.check(p.step <= p.tolerance, || format!("step {} is coarser than tolerance {}", p.step, p.tolerance));
            e.check(p.threshold > 0.0, || "threshold must be positive".into());
        }
    }
}
