//! Built-in brute-force cross-checks.

use clap::ValueEnum;
use qpspectra_core::cocycle::estimate;
use qpspectra_core::oracle::{counting_ids, spectrum_measure, thouless_lyapunov, truncated_eigenvalues};
use qpspectra_core::riccati::{free_green, halfline_green, ComplexEnergy};
use qpspectra_core::torus::{FrequencyVector, TorusPoint, TrigPotential};
use qpspectra_core::tree::{compare_pool_full, Disorder, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleName {
    /// Cocycle IDS against eigenvalue counts of a 4000-site truncation.
    TruncatedIds,
    /// Cocycle Lyapunov exponent against the Thouless formula.
    Thouless,
    /// Pool estimate against exhaustive depth-10 binary trees.
    PoolVsFull,
    /// Riccati recursion against the closed-form free Green function.
    FreeGreen,
}

/// Printed table and overall verdict.
pub struct OracleOutput {
    pub text: String,
    pub passed: bool,
}

const SIZE: usize = 4000;
const STEPS: u64 = 100_000;

pub fn run_oracle(name: OracleName, seed: u64) -> OracleOutput {
    match name {
        OracleName::TruncatedIds => truncated_ids(),
        OracleName::Thouless => thouless(),
        OracleName::PoolVsFull => pool_vs_full(seed),
        OracleName::FreeGreen => free(),
    }
}

fn energies() -> Vec<f64> {
    (0..=10).map(|j| -2.5 + 0.5 * j as f64).collect()
}

fn truncated_ids() -> OracleOutput {
    let (pot, alpha, theta) = (TrigPotential::almost_mathieu(1.0), FrequencyVector::golden(), TorusPoint::origin(1));
    let eigs = truncated_eigenvalues(&pot, &alpha, &theta, SIZE);
    let mut text = String::from("energy,matrix_ids,cocycle_ids,difference\n");
    let mut passed = true;
    for e in energies() {
        let m = counting_ids(&eigs, e);
        let c = estimate(e, &pot, &alpha, &theta, STEPS).map(|x| x.ids).unwrap_or(f64::NAN);
        passed &= (m - c).abs() < 2e-3;
        text.push_str(&format!("{e},{m},{c},{}\n", m - c));
    }
    let measure = spectrum_measure(&eigs, 10.0 / SIZE as f64);
    text.push_str(&format!("# u=1, N={SIZE}: spectrum measure from spacings below 10/N = {measure}\n"));
    OracleOutput { text, passed }
}

fn thouless() -> OracleOutput {
    let (pot, alpha, theta) = (TrigPotential::almost_mathieu(4.0), FrequencyVector::golden(), TorusPoint::origin(1));
    let eigs = truncated_eigenvalues(&pot, &alpha, &theta, SIZE);
    let mut text = String::from("energy,thouless,cocycle,difference\n");
    let mut passed = true;
    for e in energies() {
        let t = thouless_lyapunov(&eigs, e);
        let c = estimate(e, &pot, &alpha, &theta, STEPS).map(|x| x.lyapunov).unwrap_or(f64::NAN);
        passed &= (t - c).abs() < 1e-2;
        text.push_str(&format!("{e},{t},{c},{}\n", t - c));
    }
    OracleOutput { text, passed }
}

fn pool_vs_full(seed: u64) -> OracleOutput {
    let points = [
        (0.5, 0.01, 0.5, 0.0, Disorder::Uniform),
        (0.0, 0.05, 0.3, 1.0, Disorder::Uniform),
        (1.0, 0.1, 1.0, 0.0, Disorder::Bernoulli),
        (-1.5, 0.02, 0.25, 1.0, Disorder::Uniform),
        (2.5, 0.1, 0.5, 0.0, Disorder::Cauchy { scale: 0.5 }),
    ];
    let mut text = String::from("energy,eta,lambda,coupling,full_median,pool_median,diff_ci_lo,diff_ci_hi,agree\n");
    let mut passed = true;
    for (e, eta, lambda, u, dis) in points {
        let cfg =
            TreeConfig::new(2, 10, TrigPotential::almost_mathieu(u), FrequencyVector::golden(), TorusPoint::origin(1))
                .expect("valid tree")
                .with_disorder(lambda, dis);
        let z = ComplexEnergy::new(e, eta).expect("positive eta");
        match compare_pool_full(&z, &cfg, 10_000, 2000, seed) {
            Ok(c) => {
                passed &= c.agree;
                text.push_str(&format!(
                    "{e},{eta},{lambda},{u},{},{},{},{},{}\n",
                    c.full_median, c.pool_median, c.diff_ci.0, c.diff_ci.1, c.agree as u8
                ));
            }
            Err(err) => {
                passed = false;
                text.push_str(&format!("# {e},{eta}: {err}\n"));
            }
        }
    }
    OracleOutput { text, passed }
}

fn free() -> OracleOutput {
    let (pot, alpha, theta) = (TrigPotential::zero(1), FrequencyVector::golden(), TorusPoint::origin(1));
    let mut text = String::from("energy,eta,re_recursion,im_recursion,re_closed,im_closed,error\n");
    let mut passed = true;
    for e in energies() {
        for eta in [1e-1, 1e-2] {
            let z = ComplexEnergy::new(e, eta).expect("positive eta");
            let exact = free_green(z.z());
            match halfline_green(&z, &pot, &alpha, &theta, z.default_depth()) {
                Ok(g) => {
                    let err = (g.value() - exact).norm();
                    passed &= err < 1e-8;
                    text.push_str(&format!(
                        "{e},{eta},{},{},{},{},{err}\n",
                        g.value().re,
                        g.value().im,
                        exact.re,
                        exact.im
                    ));
                }
                Err(err) => {
                    passed = false;
                    text.push_str(&format!("# {e},{eta}: {err}\n"));
                }
            }
        }
    }
    OracleOutput { text, passed }
}
