use proptest::prelude::*;
use qpspectra_core::cocycle::estimate;
use qpspectra_core::oracle::{counting_ids, thouless_lyapunov, truncated_eigenvalues};
use qpspectra_core::torus::{FrequencyVector, Orbit, TorusPoint, TrigPotential};
use std::f64::consts::TAU;

fn sturm_count(diag: &[f64], energy: f64) -> usize {
    // Negative pivots of H − E in the LDLᵀ factorization.
    let mut d = 1.0f64;
    let mut count = 0;
    for (j, &v) in diag.iter().enumerate() {
        d = v - energy - if j == 0 { 0.0 } else { 1.0 / d };
        if d == 0.0 {
            d = f64::EPSILON;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvalue_count_matches_sturm_sequence(u in 0.0..4.0f64, theta in 0.0..TAU, e in -5.0..5.0f64) {
        let (pot, alpha) = (TrigPotential::almost_mathieu(u), FrequencyVector::golden());
        let th = TorusPoint::scalar(theta);
        let n = 300;
        let eigs = truncated_eigenvalues(&pot, &alpha, &th, n);
        let orbit = Orbit::new(&pot, &alpha, &th);
        let v: Vec<f64> = (0..n as i64).map(|j| orbit.potential_at(j)).collect();
        prop_assume!(eigs.iter().all(|x| (x - e).abs() > 1e-9));
        prop_assert_eq!(eigs.partition_point(|&x| x <= e), sturm_count(&v, e));
    }
}

#[test]
fn cocycle_ids_matches_truncated_matrix() {
    let alpha = FrequencyVector::golden();
    let th = TorusPoint::scalar(0.4);
    for u in [0.5, 1.0, 3.0] {
        let pot = TrigPotential::almost_mathieu(u);
        let eigs = truncated_eigenvalues(&pot, &alpha, &th, 3000);
        for e in [-2.1, -0.7, 0.0, 0.3, 1.4, 2.6] {
            let c = estimate(e, &pot, &alpha, &th, 100_000).unwrap().ids;
            let o = counting_ids(&eigs, e);
            assert!((c - o).abs() < 2e-3, "u={u} E={e}: cocycle {c} vs matrix {o}");
        }
    }
}

#[test]
fn thouless_formula_matches_cocycle_off_spectrum() {
    let alpha = FrequencyVector::golden();
    let th = TorusPoint::scalar(1.1);
    for u in [0.5, 2.0] {
        let pot = TrigPotential::almost_mathieu(u);
        let eigs = truncated_eigenvalues(&pot, &alpha, &th, 3000);
        let bound = pot.sup_bound() + 2.0;
        for e in [-bound - 0.5, bound + 1.0] {
            let g = estimate(e, &pot, &alpha, &th, 100_000).unwrap().lyapunov;
            let t = thouless_lyapunov(&eigs, e);
            assert!((g - t).abs() < 1e-3, "u={u} E={e}: {g} vs {t}");
        }
    }
}
