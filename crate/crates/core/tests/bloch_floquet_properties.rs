use proptest::prelude::*;
use qpspectra_core::bloch_floquet::{
    reducibility_residual, resonance_distance, riccati_ratio, wronskian, BfCandidate, DET_FLOOR,
};
use qpspectra_core::grid::ThetaGrid;
use qpspectra_core::rng::StreamRng;
use qpspectra_core::torus::{FrequencyVector, TrigPotential};
use qpspectra_core::Complex64;
use std::f64::consts::PI;

fn grid() -> ThetaGrid {
    ThetaGrid::uniform(1, 16).unwrap()
}

fn random_candidate(seed: u64, k: f64) -> BfCandidate {
    let mut rng = StreamRng::new(seed, 0, 0);
    let mut draw = || Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0);
    let psi_zero: Vec<Complex64> = (0..16).map(|_| draw()).collect();
    let psi_minus: Vec<Complex64> = (0..16).map(|_| draw()).collect();
    BfCandidate::new(grid(), psi_zero, psi_minus, k, 2.0 * k.cos()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wronskian_is_imaginary(seed in any::<u64>(), j in 0usize..16) {
        let w = wronskian(&random_candidate(seed, 0.3), j);
        prop_assert!(w.re.abs() <= 1e-12 * w.im.abs() + 1e-15);
    }

    #[test]
    fn covariant_candidates_have_constant_wronskian(k in -3.1..3.1f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let c = Complex64::new(re, im);
        prop_assume!(c.norm() > 1e-3);
        let cand = BfCandidate::plane_wave(grid(), k).scaled(c);
        let alpha = FrequencyVector::golden();
        prop_assume!(cand.covariance_defect(&TrigPotential::zero(1), &alpha).unwrap() < 1e-8);
        let ws: Vec<Complex64> = (0..16).map(|j| wronskian(&cand, j)).collect();
        let mean = ws.iter().sum::<Complex64>() / 16.0;
        let var = ws.iter().map(|w| (w - mean).norm_sqr()).sum::<f64>() / 16.0;
        prop_assert!(var <= 1e-6 * mean.norm_sqr() + 1e-30);
    }

    #[test]
    fn ratio_has_constant_half_plane(k in -3.1..3.1f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        prop_assume!(k.sin().abs() > 1e-3);
        let c = Complex64::new(re, im);
        prop_assume!(c.norm() > 1e-3);
        let cand = BfCandidate::plane_wave(grid(), k).scaled(c);
        let signs: Vec<bool> = (0..16).map(|j| riccati_ratio(&cand, j).unwrap().im > 0.0).collect();
        prop_assert!(signs.iter().all(|&s| s == signs[0]));
    }

    #[test]
    fn residual_ignores_phase_and_real_scale(seed in any::<u64>(), phase in 0.0..(2.0 * PI), scale in 0.1..10.0f64, neg in any::<bool>()) {
        let alpha = FrequencyVector::golden();
        let pot = TrigPotential::almost_mathieu(1.0);
        let cand = random_candidate(seed, 1.1);
        let Ok(r0) = reducibility_residual(&cand, &pot, &alpha, DET_FLOOR) else { return Ok(()) };
        let s = if neg { -scale } else { scale };
        for c in [Complex64::from_polar(1.0, phase), Complex64::new(s, 0.0)] {
            let r1 = reducibility_residual(&cand.scaled(c), &pot, &alpha, DET_FLOOR).unwrap();
            prop_assert!((r1 - r0).abs() <= 1e-9 * r0.max(1.0));
        }
    }

    #[test]
    fn resonance_distance_non_increasing(k in -PI..PI, m in 1i64..60) {
        let alpha = FrequencyVector::golden();
        prop_assert!(resonance_distance(k, &alpha, m + 1) <= resonance_distance(k, &alpha, m));
    }
}

#[test]
fn random_candidates_are_not_reducible() {
    let alpha = FrequencyVector::golden();
    let zero = TrigPotential::zero(1);
    let mut smallest = f64::INFINITY;
    for seed in 0..100 {
        if let Ok(r) = reducibility_residual(&random_candidate(seed, 0.9), &zero, &alpha, DET_FLOOR) {
            smallest = smallest.min(r);
        }
    }
    assert!(smallest > 0.1, "smallest residual {smallest}");
}

#[test]
fn resonance_positive_for_generic_momenta() {
    let alpha = FrequencyVector::golden();
    for j in 1..100 {
        let k = PI * (j as f64 * 0.754_877_666).fract();
        assert!(resonance_distance(k, &alpha, 50) > 0.0);
    }
}
