use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use collarflow_core::geometry::{
    delta_thin_half_length, dz2_l2_sq_series, dz2_norms, half_length, symmetric_rho_sq_rate,
    CollarGrid, CollarParams, ELL_LIMIT,
};
use collarflow_core::Complex64;
use proptest::prelude::*;

// Reference values from a 30-digit quadrature of the defining integrals.
const X_REF: [(f64, f64); 4] = [
    (0.05, 194.250_822_566_308_7),
    (0.1, 95.555_759_536_713_35),
    (0.2, 46.211_652_287_547_33),
    (1.0, 6.851_281_062_829_236),
];
const L2_SQ_REF: [(f64, f64); 4] = [
    (0.05, 78_340_520.017_087_81),
    (0.1, 9_792_111.305_850_527),
    (0.2, 1_223_562.840_228_641),
    (1.0, 9_352.703_292_765_5),
];

#[test]
fn half_length_matches_reference() {
    for (ell, x) in X_REF {
        assert!((half_length(ell).unwrap() - x).abs() < 1e-12 * x, "{ell}");
    }
}

#[test]
fn rho_and_thin_part_match_reference() {
    let p = CollarParams::new(0.1).unwrap();
    assert!((p.rho(50.0).unwrap() - 0.022_745_144_349_099_4).abs() < 1e-16);
    assert!((delta_thin_half_length(0.1, 0.3).unwrap() - 88.328_230_203_966_92).abs() < 1e-10);
    assert_eq!(delta_thin_half_length(0.4, 0.2).unwrap(), 0.0);
}

#[test]
fn dz2_l2_matches_reference_and_series() {
    for (ell, v) in L2_SQ_REF {
        let n = dz2_norms(ell).unwrap();
        assert!(((n.l2_sq - v) / v).abs() < 1e-12, "{ell}");
    }
    for ell in [0.05f64, 0.1, 0.2] {
        let r = dz2_norms(ell).unwrap().l2_sq - dz2_l2_sq_series(ell);
        assert!((r / (ell * ell) - 14.0 * PI.powi(4) / 15.0).abs() < 1.0, "{ell}");
    }
}

#[test]
fn out_of_range_lengths_rejected() {
    for ell in [0.0, -0.1, ELL_LIMIT, 3.0, f64::NAN] {
        assert!(CollarParams::new(ell).is_err());
    }
    let p = CollarParams::new(0.5).unwrap();
    assert!(p.rho(p.half_length()).is_err());
}

fn bisect_thin(p: &CollarParams, delta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, p.half_length() * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p.injectivity_radius(mid).unwrap() < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn injectivity_identity(ell in 0.01..1.7f64, t in -0.999..0.999f64) {
        let p = CollarParams::new(ell).unwrap();
        let s = t * p.half_length();
        let inj = p.injectivity_radius(s).unwrap();
        prop_assert!((inj.sinh() * (ell * s / TAU).cos() - (ell / 2.0).sinh()).abs() < 1e-12);
    }

    #[test]
    fn thin_part_is_bisection_root(delta in 0.05..0.85f64, frac in 0.05..0.95f64) {
        let ell = frac * 2.0 * delta;
        prop_assume!(ell < ELL_LIMIT);
        let p = CollarParams::new(ell).unwrap();
        let xd = p.delta_thin_half_length(delta).unwrap();
        prop_assert!((xd - bisect_thin(&p, delta)).abs() < 1e-9 * (1.0 + xd));
        prop_assert!(p.half_length() - xd <= PI * PI / (2.0 * delta) * (1.0 + 1e-12));
    }

    #[test]
    fn rho_equivalence_on_windows(ell in 0.02..1.7f64, lambda in 0.05..3.0f64, t in -1.0..1.0f64) {
        let p = CollarParams::new(ell).unwrap();
        let x = p.half_length();
        let lambda = lambda.min(0.45 * x);
        let s0 = t * (x - lambda) * (1.0 - 1e-9);
        let r0 = p.rho(s0).unwrap();
        for i in 0..=32 {
            let s = (s0 - lambda + 2.0 * lambda * i as f64 / 32.0).clamp(-x * (1.0 - 1e-12), x * (1.0 - 1e-12));
            prop_assert!((p.rho(s).unwrap() / r0).ln().abs() <= lambda / PI * (1.0 + 1e-10));
        }
    }

    #[test]
    fn log_slope_bounded(ell in 0.01..1.7f64, t in -0.999..0.999f64) {
        let p = CollarParams::new(ell).unwrap();
        let s = t * p.half_length();
        prop_assert!(p.log_rho_slope(s).unwrap().abs() <= p.log_rho_slope_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn symmetric_rate_is_minus_re_b0(ell in 0.05..1.5f64, t in -0.9..0.9f64, re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let p = CollarParams::new(ell).unwrap();
        let s0 = t * p.half_length();
        let rho = p.rho(s0).unwrap();
        let rate = symmetric_rho_sq_rate(p, s0, Complex64::new(re, im), 1e-3 * rho * rho).unwrap();
        prop_assert!((rate + re).abs() < 1e-6);
    }
}

#[test]
fn quadrature_of_dz2_converges() {
    for ell in [0.05, 0.3, 1.2] {
        let g = Arc::new(CollarGrid::full_collar(CollarParams::new(ell).unwrap(), 40_000, 4).unwrap());
        let l2: f64 = g.s_weights().iter().zip(g.rho()).map(|(w, r)| TAU * w * 4.0 / (r * r)).sum();
        let exact = dz2_norms(ell).unwrap().l2_sq;
        assert!(((l2 - exact) / exact).abs() < 1e-8, "{ell}");
    }
}
