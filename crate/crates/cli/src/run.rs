//! Dispatch of a validated experiment to the toolkit.
//!
//! Rows are independent and computed in parallel on the current rayon pool;
//! a failing row is recorded and the remaining rows are kept.

use std::time::Instant;

use qpspectra_core::bloch_floquet::{diagnose, BfThresholds};
use qpspectra_core::cocycle::{classify_ac, estimate, gap_label, spectral_gaps, GridRow, SpectralGrid};
use qpspectra_core::grid::ThetaGrid;
use qpspectra_core::riccati::{
    covariant_state, green_field, uniqueness_probe, ComplexEnergy, GreenSolver, RiccatiValue, DEPTH_TOL,
};
use qpspectra_core::rng::StreamRng;
use qpspectra_core::torus::TorusPoint;
use qpspectra_core::tree::{ac_mass, width_curve, AcMassSpec};
use qpspectra_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, Kind, SweepParams};

/// A CSV table; `plot` names the x column and the y columns for gnuplot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plot: (usize, Vec<usize>),
}

impl Table {
    fn new(name: &str, header: &[&str], plot: (usize, Vec<usize>)) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), plot }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated columns with a commented header.
    pub fn to_dat(&self) -> String {
        let mut out = format!("# {}\n", self.header.join(" "));
        for r in &self.rows {
            out.push_str(&r.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub row: usize,
    /// Energy or disorder strength of the failed row.
    pub at: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    /// Recursion or transfer-matrix steps, summed over rows.
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub toolkit: String,
    pub version: String,
    pub kind: Kind,
    pub seed: u64,
    /// Effective TOML document; re-running it reproduces the tables.
    pub config: String,
    pub rows: Vec<Value>,
    pub summary: Value,
    pub errors: Vec<RowError>,
    pub timing: Timing,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }
}

struct Outcome {
    rows: Vec<Value>,
    summary: Value,
    errors: Vec<RowError>,
    iterations: u64,
    tables: Vec<Table>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunReport {
    let start = Instant::now();
    let out = match &cfg.experiment {
        Experiment::LyapunovSweep(p) | Experiment::IdsSweep(p) | Experiment::AcClassify(p) => sweep_kind(cfg, p),
        Experiment::GapLabels(_) => gap_labels(cfg),
        Experiment::GreenProbe(_) => green_probe(cfg),
        Experiment::BfDiagnostics(_) => bf_diagnostics(cfg),
        Experiment::TreeWidth(_) => tree_width(cfg),
        Experiment::AcMass(_) => ac_mass_run(cfg),
    };
    RunReport {
        toolkit: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind,
        seed: cfg.seed,
        config: cfg.echo(),
        rows: out.rows,
        summary: out.summary,
        errors: out.errors,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), iterations: out.iterations },
        tables: out.tables,
    }
}

fn phases(theta0: &TorusPoint, n: usize) -> Vec<TorusPoint> {
    (0..n).map(|j| theta0.rotate(&vec![j as f64 / n as f64; theta0.dim()])).collect()
}

/// Per-energy cocycle rows; failed energies are reported and skipped.
fn sweep_rows(cfg: &ExperimentConfig, p: &SweepParams) -> (Vec<GridRow>, Vec<RowError>) {
    let thetas = phases(&cfg.theta0, p.phases);
    let results: Vec<_> = cfg
        .energies
        .par_iter()
        .map(|&e| SpectralGrid::sweep(&[e], &cfg.potential, &cfg.alpha, &thetas, p.steps, p.gamma_tol))
        .collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(g) => rows.extend(g.rows),
            Err(e) => errors.push(RowError { row: i, at: cfg.energies[i], message: e.to_string() }),
        }
    }
    (rows, errors)
}

fn sweep_kind(cfg: &ExperimentConfig, p: &SweepParams) -> Outcome {
    let (rows, errors) = sweep_rows(cfg, p);
    let iterations = rows.len() as u64 * p.phases as u64 * p.steps;
    let grid = SpectralGrid { gamma_tol: p.gamma_tol, rows };
    let json_rows = grid.rows.iter().map(|r| json!(r)).collect();
    let mut tables = Vec::new();
    let summary = match cfg.kind {
        Kind::LyapunovSweep => {
            let mut t = Table::new("lyapunov", &["energy", "lyapunov", "lyapunov_spread", "ac"], (0, vec![1]));
            for r in &grid.rows {
                t.push(vec![num(r.energy), num(r.lyapunov), num(r.lyapunov_spread), (r.ac as u8).to_string()]);
            }
            tables.push(t);
            let max = grid.rows.iter().map(|r| r.lyapunov).fold(f64::NAN, f64::max);
            let min = grid.rows.iter().map(|r| r.lyapunov).fold(f64::NAN, f64::min);
            json!({ "min_lyapunov": min, "max_lyapunov": max, "ac_points": grid.rows.iter().filter(|r| r.ac).count() })
        }
        Kind::IdsSweep => {
            let mut t = Table::new("ids", &["energy", "ids", "ids_spread"], (0, vec![1]));
            for r in &grid.rows {
                t.push(vec![num(r.energy), num(r.ids), num(r.ids_spread)]);
            }
            tables.push(t);
            let drops: Vec<f64> = grid.rows.windows(2).map(|w| w[0].ids - w[1].ids).filter(|&d| d > 0.0).collect();
            json!({
                "monotonicity_violations": drops.len(),
                "largest_violation": drops.iter().copied().fold(0.0, f64::max),
            })
        }
        _ => {
            tables.push(grid_table(&grid));
            let mut iv = Table::new("intervals", &["lo", "hi"], (0, vec![]));
            let summary = match classify_ac(&grid, p.gamma_tol) {
                Ok(ac) => {
                    for (lo, hi) in &ac.intervals {
                        iv.push(vec![num(*lo), num(*hi)]);
                    }
                    json!({ "intervals": ac.intervals, "measure": ac.measure })
                }
                Err(e) => json!({ "error": e.to_string() }),
            };
            tables.push(iv);
            summary
        }
    };
    Outcome { rows: json_rows, summary, errors, iterations, tables }
}

fn grid_table(grid: &SpectralGrid) -> Table {
    let mut t =
        Table::new("grid", &["energy", "lyapunov", "lyapunov_spread", "ids", "ids_spread", "ac"], (0, vec![1, 3]));
    for r in &grid.rows {
        t.push(vec![
            num(r.energy),
            num(r.lyapunov),
            num(r.lyapunov_spread),
            num(r.ids),
            num(r.ids_spread),
            (r.ac as u8).to_string(),
        ]);
    }
    t
}

fn gap_labels(cfg: &ExperimentConfig) -> Outcome {
    let Experiment::GapLabels(p) = &cfg.experiment else { unreachable!() };
    let (rows, errors) = sweep_rows(cfg, &p.sweep());
    let iterations = rows.len() as u64 * p.phases as u64 * p.steps;
    let grid = SpectralGrid { gamma_tol: p.gamma_tol, rows };
    let gaps = spectral_gaps(&grid, p.gamma_tol, p.ids_flat_tol);
    let mut t = Table::new("gaps", &["lo", "hi", "ids", "points", "m", "distance", "labeled"], (0, vec![2]));
    let mut json_rows = Vec::new();
    let (mut worst, mut largest_m) = (0.0f64, 0i64);
    for g in &gaps {
        let (m, d) = gap_label(g.ids, &cfg.alpha, p.label_bound);
        let labeled = d <= p.label_tol;
        worst = worst.max(d);
        if labeled {
            largest_m = largest_m.max(m.iter().map(|x| x.abs()).max().unwrap_or(0));
        }
        let m_text: Vec<String> = m.iter().map(|x| x.to_string()).collect();
        t.push(vec![
            num(g.lo),
            num(g.hi),
            num(g.ids),
            g.points.to_string(),
            m_text.join(";"),
            num(d),
            (labeled as u8).to_string(),
        ]);
        json_rows.push(json!({ "gap": g, "m": m, "distance": d, "labeled": labeled }));
    }
    let summary = json!({
        "gaps": gaps.len(),
        "all_labeled": gaps.iter().zip(&json_rows).all(|(_, r)| r["labeled"] == true),
        "max_distance": worst,
        "largest_label": largest_m,
        "label_bound": p.label_bound,
    });
    Outcome { rows: json_rows, summary, errors, iterations, tables: vec![t, grid_table(&grid)] }
}

fn green_probe(cfg: &ExperimentConfig) -> Outcome {
    let Experiment::GreenProbe(p) = &cfg.experiment else { unreachable!() };
    let results: Vec<_> = cfg
        .energies
        .par_iter()
        .enumerate()
        .map(|(i, &e)| {
            let z = ComplexEnergy::new(e, p.eta).map_err(|e| e.to_string())?;
            let depth = p.depth.unwrap_or_else(|| z.default_depth());
            let solver = GreenSolver { depth: Some(depth), tolerance: Some(DEPTH_TOL) };
            let g = solver.solve(&z, &cfg.potential, &cfg.alpha, &cfg.theta0).map_err(|e| e.to_string())?.value();
            let mut rng = StreamRng::new(cfg.seed, i as u64, 0);
            let seeds: Vec<RiccatiValue> = (0..p.probe_seeds)
                .map(|_| {
                    let re = 4.0 * rng.next_f64() - 2.0;
                    let im = 0.05 + 2.0 * rng.next_f64();
                    RiccatiValue::new(Complex64::new(re, im)).expect("upper half plane")
                })
                .collect();
            let probe = uniqueness_probe(&z, &cfg.potential, &cfg.alpha, &cfg.theta0, &seeds, depth)
                .map_err(|e| e.to_string())?;
            Ok::<_, String>((g, probe, depth * (3 + p.probe_seeds as u64)))
        })
        .collect();
    let mut t = Table::new("green", &["energy", "re_gamma", "im_gamma", "probe"], (0, vec![1, 2]));
    let (mut rows, mut errors, mut iterations) = (Vec::new(), Vec::new(), 0);
    let mut worst_probe: f64 = 0.0;
    for (i, r) in results.into_iter().enumerate() {
        let e = cfg.energies[i];
        match r {
            Ok((g, probe, it)) => {
                iterations += it;
                worst_probe = worst_probe.max(probe);
                t.push(vec![num(e), num(g.re), num(g.im), num(probe)]);
                rows.push(json!({ "energy": e, "gamma": [g.re, g.im], "probe": probe }));
            }
            Err(message) => errors.push(RowError { row: i, at: e, message }),
        }
    }
    let summary = json!({ "max_probe": worst_probe, "eta": p.eta });
    Outcome { rows, summary, errors, iterations, tables: vec![t] }
}

fn bf_diagnostics(cfg: &ExperimentConfig) -> Outcome {
    let Experiment::BfDiagnostics(p) = &cfg.experiment else { unreachable!() };
    let grid = match ThetaGrid::uniform(cfg.alpha.dim(), p.grid_size) {
        Ok(g) => g,
        Err(e) => {
            let errors = vec![RowError { row: 0, at: f64::NAN, message: e.to_string() }];
            return Outcome { rows: vec![], summary: json!({}), errors, iterations: 0, tables: vec![] };
        }
    };
    let thresholds = BfThresholds {
        dispersion: p.dispersion,
        reducibility: p.reducibility,
        ids_tol: p.ids_tol,
        resonance_bound: p.resonance_bound,
    };
    let coupling = cfg.raw.potential.coupling.unwrap_or_else(|| cfg.potential.sup_bound());
    let solver = GreenSolver::default().tolerance(None);
    let results: Vec<_> = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let ids = estimate(e, &cfg.potential, &cfg.alpha, &cfg.theta0, p.steps).map_err(|e| e.to_string())?.ids;
            let z = ComplexEnergy::new(e, p.eta).map_err(|e| e.to_string())?;
            let gamma = green_field(&z, &cfg.potential, &cfg.alpha, &grid, &solver).map_err(|e| e.to_string())?;
            let field = covariant_state(&grid, gamma, &cfg.alpha).map_err(|e| e.to_string())?;
            diagnose(&field, &cfg.potential, &cfg.alpha, e, coupling, ids, &thresholds).map_err(|e| e.to_string())
        })
        .collect();
    let header = [
        "energy",
        "k",
        "dispersion",
        "raw_dispersion",
        "wronskian_re",
        "wronskian_im",
        "wronskian_spread",
        "reducibility_residual",
        "resonance_distance",
        "ids",
        "check_passed",
    ];
    let mut t = Table::new("bloch_floquet", &header, (0, vec![1, 7]));
    let (mut rows, mut errors) = (Vec::new(), Vec::new());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(b) => {
                t.push(vec![
                    num(b.energy),
                    num(b.k),
                    num(b.dispersion),
                    num(b.raw_dispersion),
                    num(b.wronskian.re),
                    num(b.wronskian.im),
                    num(b.wronskian.relative_spread),
                    num(b.reducibility_residual),
                    num(b.resonance_distance_at_m),
                    num(b.ids),
                    (b.check_passed as u8).to_string(),
                ]);
                rows.push(json!(b));
            }
            Err(message) => errors.push(RowError { row: i, at: cfg.energies[i], message }),
        }
    }
    let passed = rows.iter().filter(|r| r["check_passed"] == true).count();
    let depth = ComplexEnergy::new(0.0, p.eta).map(|z| z.default_depth()).unwrap_or(0);
    let iterations = rows.len() as u64 * (p.steps + grid.len() as u64 * depth);
    let summary = json!({ "energies": rows.len(), "check_passed": passed, "thresholds": thresholds });
    Outcome { rows, summary, errors, iterations, tables: vec![t] }
}

fn tree_width(cfg: &ExperimentConfig) -> Outcome {
    let Experiment::TreeWidth(p) = &cfg.experiment else { unreachable!() };
    let base = cfg.tree_config().expect("tree kind");
    let fail = |message: String| Outcome {
        rows: vec![],
        summary: json!({}),
        errors: vec![RowError { row: 0, at: p.lambdas[0], message }],
        iterations: 0,
        tables: vec![],
    };
    let z = match ComplexEnergy::new(p.energy, p.eta) {
        Ok(z) => z,
        Err(e) => return fail(e.to_string()),
    };
    let points = match width_curve(&z, &base, &p.lambdas, p.n_samples, cfg.seed) {
        Ok(points) => points,
        Err(e) => return fail(e.to_string()),
    };
    let mut t = Table::new("width", &["lambda", "width", "ci_lo", "ci_hi", "median_im"], (0, vec![1, 4]));
    for w in &points {
        t.push(vec![num(w.lambda), num(w.width), num(w.ci_lo), num(w.ci_hi), num(w.median_im)]);
    }
    let decreasing = points.windows(2).all(|w| w[1].width <= w[0].width);
    let summary = json!({
        "energy": p.energy,
        "eta": p.eta,
        "depth": base.depth,
        "width_decreasing": decreasing,
        "smallest_lambda_width": points.last().map(|w| w.width),
    });
    let iterations = (points.len() * p.n_samples * base.depth) as u64;
    Outcome { rows: points.iter().map(|w| json!(w)).collect(), summary, errors: vec![], iterations, tables: vec![t] }
}

fn ac_mass_run(cfg: &ExperimentConfig) -> Outcome {
    let Experiment::AcMass(p) = &cfg.experiment else { unreachable!() };
    let config = cfg.tree_config().expect("tree kind");
    let spec = AcMassSpec {
        interval: (p.interval[0], p.interval[1]),
        eta: p.eta,
        n_samples: p.n_samples,
        threshold: p.threshold,
        step: p.step,
        tolerance: p.tolerance,
        seed: cfg.seed,
    };
    match ac_mass(&spec, &config) {
        Ok(r) => {
            let mut t = Table::new("ac_mass", &["energy", "median_im", "ci_lo", "ci_hi"], (0, vec![1]));
            for row in &r.rows {
                t.push(vec![num(row.energy), num(row.median_im), num(row.ci_lo), num(row.ci_hi)]);
            }
            let summary = json!({
                "mass": r.mass,
                "mass_lo": r.mass_lo,
                "mass_hi": r.mass_hi,
                "threshold": r.threshold,
                "sensitivity": r.sensitivity,
                "quadrature_error": r.quadrature_error,
                "step": r.step,
                "depth": config.depth,
            });
            let iterations = (r.rows.len() * p.n_samples * config.depth) as u64;
            Outcome {
                rows: r.rows.iter().map(|x| json!(x)).collect(),
                summary,
                errors: vec![],
                iterations,
                tables: vec![t],
            }
        }
        Err(e) => Outcome {
            rows: vec![],
            summary: json!({}),
            errors: vec![RowError { row: 0, at: p.lambda, message: e.to_string() }],
            iterations: 0,
            tables: vec![],
        },
    }
}
