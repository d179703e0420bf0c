use proptest::prelude::*;
use qpspectra_core::cocycle::ids;
use qpspectra_core::grid::ThetaGrid;
use qpspectra_core::riccati::{
    cocycle_residual, covariant_state, free_green, green_field, halfline_green, mobius_step, uniqueness_probe,
    ComplexEnergy, GreenSolver, RiccatiValue,
};
use qpspectra_core::torus::{FrequencyVector, Orbit, TorusPoint, TrigPotential};
use qpspectra_core::Complex64;
use std::f64::consts::TAU;

fn upper(max: f64) -> impl Strategy<Value = RiccatiValue> {
    (-max..max, 0.0..max).prop_map(|(re, im)| RiccatiValue::new(Complex64::new(re, im)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn mobius_step_lifts_by_eta(
        e in -6.0..6.0f64,
        log_eta in -10.0..1.0f64,
        u in 0.0..6.0f64,
        theta in 0.0..TAU,
        g in upper(5.0),
    ) {
        prop_assume!(g.value().norm() > 1e-12);
        let eta = 10f64.powf(log_eta);
        let z = ComplexEnergy::new(e, eta).unwrap();
        let next = mobius_step(&z, &TrigPotential::almost_mathieu(u), &TorusPoint::scalar(theta), g).unwrap();
        prop_assert!(next.value().im >= eta * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn probe_contracts_under_depth_doubling(
        e in -3.0..3.0f64,
        log_eta in -2.0..0.0f64,
        u in 0.0..4.0f64,
        theta in 0.0..TAU,
        seeds in prop::collection::vec(upper(3.0), 2..6),
        stretch in 1.0..2.0f64,
    ) {
        // Contraction regime: depth of order 20/η, as in the default depth rule.
        let depth = (stretch * 20.0 / 10f64.powf(log_eta)).ceil() as u64;
        prop_assume!(seeds.iter().all(|s| s.value().im > 1e-6));
        let z = ComplexEnergy::new(e, 10f64.powf(log_eta)).unwrap();
        let pot = TrigPotential::almost_mathieu(u);
        let alpha = FrequencyVector::golden();
        let th = TorusPoint::scalar(theta);
        let a = uniqueness_probe(&z, &pot, &alpha, &th, &seeds, depth).unwrap();
        let b = uniqueness_probe(&z, &pot, &alpha, &th, &seeds, 2 * depth).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-9) + 1e-14, "depth {depth}: {a:e} -> {b:e}");
    }

    #[test]
    fn covariant_state_reconstructs_gamma(values in prop::collection::vec(upper(4.0), 16)) {
        prop_assume!(values.iter().all(|v| v.value().im > 1e-3));
        let grid = ThetaGrid::uniform(1, 16).unwrap();
        let gamma: Vec<Complex64> = values.iter().map(|v| v.value()).collect();
        let field = covariant_state(&grid, gamma.clone(), &FrequencyVector::golden()).unwrap();
        for (j, g) in gamma.iter().enumerate() {
            let (p0, pm) = (field.phi_zero[j], field.phi_minus[j]);
            prop_assert!((p0 - pm * g).norm() <= 1e-12 * g.norm().max(1.0) * pm);
            prop_assert!((-p0 / pm + g).norm() <= 1e-12 * g.norm().max(1.0));
        }
    }
}

#[test]
fn million_step_chains_stay_in_upper_half_plane() {
    let alpha = FrequencyVector::golden();
    for (e, eta, u) in [(0.3, 1e-8, 1.0), (-2.2, 1e-6, 3.0), (4.5, 1e-4, 5.0)] {
        let pot = TrigPotential::almost_mathieu(u);
        let theta = TorusPoint::origin(1);
        let orbit = Orbit::new(&pot, &alpha, &theta);
        let z = Complex64::new(e, eta);
        let mut g = Complex64::new(0.0, 1.0);
        for n in 0..1_000_000 {
            g = Complex64::new(orbit.potential_at(n), 0.0) - z.conj() - g.inv();
            assert!(g.im >= eta * (1.0 - 1e-12), "step {n}: {g}");
        }
    }
}

#[test]
fn free_green_approaches_one_monotonically() {
    // Closed form Im Γ(iη) = (√(η² + 4) − η)/2 rises towards 1 as η ↓ 0.
    let zero = TrigPotential::zero(1);
    let alpha = FrequencyVector::golden();
    let mut prev = 0.0;
    for eta in [1.0, 0.1, 0.01, 1e-3] {
        let z = ComplexEnergy::new(0.0, eta).unwrap();
        let g = halfline_green(&z, &zero, &alpha, &TorusPoint::origin(1), z.default_depth()).unwrap().value();
        assert!(g.im > prev && g.im < 1.0);
        if eta >= 0.01 {
            assert!((g - free_green(z.z())).norm() < 1e-3);
        }
        prev = g.im;
    }
    assert!(1.0 - prev < 1e-3);
}

#[test]
fn green_field_solves_cocycle_equation() {
    let pot = TrigPotential::almost_mathieu(1.0);
    let alpha = FrequencyVector::golden();
    let grid = ThetaGrid::uniform(1, 512).unwrap();
    for e in [0.0, 1.5, -1.8] {
        assert!(ids(e, &pot, &alpha, &TorusPoint::origin(1), 10_000).is_ok());
        let z = ComplexEnergy::new(e, 1e-3).unwrap();
        let gamma = green_field(&z, &pot, &alpha, &grid, &GreenSolver::default().tolerance(None)).unwrap();
        let field = covariant_state(&grid, gamma, &alpha).unwrap();
        let r = cocycle_residual(&field, &z, &pot, &alpha, 1e-3).unwrap();
        assert!(r < 5e-3, "E = {e}: residual {r}");
    }
}
