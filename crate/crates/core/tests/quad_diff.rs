use std::f64::consts::TAU;
use std::sync::Arc;

use collarflow_core::fields::{energies, jet, Cutoff, MapField, TargetSpec};
use collarflow_core::geometry::{CollarGrid, CollarParams};
use collarflow_core::quad_diff::{
    hopf_differential, inner_product, lp_norm, principal_split, project_holomorphic, synthesize,
    FourierQD, Norm, QuadDiffField,
};
use collarflow_core::Complex64;
use proptest::prelude::*;

fn grid(ell: f64, n_s: usize, n_t: usize) -> Arc<CollarGrid> {
    Arc::new(CollarGrid::full_collar(CollarParams::new(ell).unwrap(), n_s, n_t).unwrap())
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

#[test]
fn dz2_norms_on_grid() {
    let g = grid(0.5, 4000, 8);
    let dz2 = QuadDiffField::dz2(g.clone());
    let x = g.s_max();
    // |dz²|_g = 2ρ⁻², dv_g = ρ² ds dθ.
    assert!((lp_norm(&dz2, Norm::L1) - 8.0 * std::f64::consts::PI * x).abs() < 1e-9 * x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pythagoras(ell in 0.1..1.0f64, b0 in cplx(), c1 in cplx(), noise in proptest::collection::vec(cplx(), 64 * 8)) {
        let g = grid(ell, 64, 8);
        let psi: Vec<Complex64> = (0..g.n_s())
            .flat_map(|i| (0..g.n_theta()).map(move |j| (i, j)))
            .map(|(i, j)| b0 + c1 * Complex64::from_polar(1.0, 2.0 * g.theta_nodes()[j]) + noise[i * 8 + j] * 0.1)
            .collect();
        let f = QuadDiffField::new(g.clone(), psi).unwrap();
        let split = principal_split(&f);
        let dz2 = lp_norm(&QuadDiffField::dz2(g), Norm::L2);
        let total = lp_norm(&f, Norm::L2).powi(2);
        let parts = split.b0.norm_sqr() * dz2 * dz2 + lp_norm(&split.decay, Norm::L2).powi(2);
        prop_assert!((total - parts).abs() <= 1e-10 * total);
    }

    #[test]
    fn holder(ell in 0.1..1.0f64, b0 in cplx(), c1 in cplx()) {
        let g = grid(ell, 200, 16);
        let f = QuadDiffField::from_fn(g.clone(), |s, t| b0 + c1 * Complex64::from_polar((-s * s / 20.0).exp(), t)).unwrap();
        let dz2 = QuadDiffField::dz2(g);
        let lhs = inner_product(&f, &dz2).unwrap().norm();
        prop_assert!(lhs <= lp_norm(&f, Norm::L1) * lp_norm(&dz2, Norm::Inf) * (1.0 + 1e-12));
    }

    #[test]
    fn projection_recovers_modes(ell in 0.2..1.0f64, cs in proptest::collection::vec(cplx(), 7)) {
        let g = grid(ell, 800, 16);
        let c = FourierQD::from_scaled(3, g.s_max(), cs.clone()).unwrap();
        let f = synthesize(&c, g);
        let p = project_holomorphic(&f, 3).unwrap();
        for n in -3..=3i64 {
            prop_assert!((p.coeffs.scaled(n) - c.scaled(n)).norm() < 1e-8, "mode {n}");
        }
        prop_assert!((p.split.b0 - c.scaled(0)).norm() < 1e-8);
    }

    #[test]
    fn energy_bounds_hopf(ell in 0.1..1.5f64, a in -1.0..1.0f64, b in -1.0..1.0f64, w in 1.0..10.0f64) {
        let g = grid(ell, 48, 16);
        let u = MapField::from_fn(g, TargetSpec::flat_torus(vec![None, None]), vec![0.0, 0.0], |s, t| {
            vec![a * s / 10.0 + (t + b).sin() * (-(s / w).powi(2)).exp(), b * (2.0 * t).cos()]
        })
        .unwrap();
        let phi = hopf_differential(&jet(&u).unwrap());
        let e = energies(&u, Cutoff::default()).unwrap().energy;
        prop_assert!(lp_norm(&phi, Norm::L1) <= 4.0 * e * (1.0 + 1e-12));
    }
}

#[test]
fn conformal_map_has_zero_hopf_differential() {
    let g = grid(0.5, 32, 16);
    let u = MapField::from_fn(g, TargetSpec::flat_torus(vec![None, Some(TAU)]), vec![0.0, TAU], |s, t| vec![s, t]).unwrap();
    let phi = hopf_differential(&jet(&u).unwrap());
    assert!(phi.psi().iter().all(|z| z.norm() < 1e-10));
}
