use proptest::prelude::*;
use qpspectra_core::cocycle::{energy_grid, estimate, lyapunov, transfer_matrix, SpectralGrid};
use qpspectra_core::rng::StreamRng;
use qpspectra_core::torus::{FrequencyVector, TorusPoint, TrigPotential};
use std::f64::consts::TAU;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn transfer_matrix_is_unimodular(e in -10.0..10.0f64, theta in 0.0..TAU, u in 0.0..10.0f64) {
        let a = transfer_matrix(e, &TrigPotential::almost_mathieu(u), &TorusPoint::scalar(theta));
        prop_assert!((a.det() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_is_non_negative(e in -6.0..6.0f64, theta in 0.0..TAU, u in 0.0..6.0f64, a in 0.05..0.95f64) {
        let alpha = FrequencyVector::new(vec![a]).unwrap();
        let g = lyapunov(e, &TrigPotential::almost_mathieu(u), &alpha, &TorusPoint::scalar(theta), 5_000).unwrap();
        prop_assert!(g >= -1e-6);
    }

    #[test]
    fn free_lyapunov_outside_band(e in 2.05..8.0f64, sign in prop::bool::ANY) {
        let e = if sign { e } else { -e };
        let g = lyapunov(e, &TrigPotential::zero(1), &FrequencyVector::golden(), &TorusPoint::origin(1), 100_000).unwrap();
        prop_assert!((g - (e.abs() / 2.0).acosh()).abs() < 1e-3);
    }
}

#[test]
fn ids_is_monotone_over_the_grid() {
    let pot = TrigPotential::almost_mathieu(1.0);
    let alpha = FrequencyVector::golden();
    let n = 20_000u64;
    let grid =
        SpectralGrid::sweep(&energy_grid(-3.0, 3.0, 0.02), &pot, &alpha, &[TorusPoint::origin(1)], n, 5e-3).unwrap();
    // Counting error of the sign-change estimate is at most 2/N per row.
    let se = 2.0 / n as f64;
    for w in grid.rows.windows(2) {
        assert!(w[1].ids >= w[0].ids - 2.0 * se, "{} → {}", w[0].ids, w[1].ids);
    }
    assert_eq!(grid.rows.first().unwrap().ids, 0.0);
    assert_eq!(grid.rows.last().unwrap().ids, 1.0);
}

#[test]
fn phase_independence_for_subcritical_coupling() {
    let pot = TrigPotential::almost_mathieu(1.0);
    let alpha = FrequencyVector::golden();
    for e in [-1.9, 0.0, 0.3, 1.5] {
        let ests: Vec<_> = (0..8)
            .map(|j| {
                let theta = TorusPoint::scalar(TAU * StreamRng::new(11, 0, j).next_f64());
                estimate(e, &pot, &alpha, &theta, 100_000).unwrap()
            })
            .collect();
        let spread = |f: &dyn Fn(usize) -> f64| {
            let v: Vec<f64> = (0..8).map(f).collect();
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(&|j| ests[j].lyapunov) < 3e-3, "γ spread at E = {e}");
        assert!(spread(&|j| ests[j].ids) < 3e-3, "ids spread at E = {e}");
    }
}
