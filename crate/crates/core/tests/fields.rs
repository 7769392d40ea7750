use std::sync::Arc;

use collarflow_core::fields::{energies, jet, theta_profile, Cutoff, MapField, TargetSpec};
use collarflow_core::geometry::{CollarGrid, CollarParams};
use proptest::prelude::*;

fn grid(ell: f64, n_s: usize, n_t: usize) -> Arc<CollarGrid> {
    Arc::new(CollarGrid::full_collar(CollarParams::new(ell).unwrap(), n_s, n_t).unwrap())
}

fn flat_map(g: Arc<CollarGrid>, a: f64, b: f64, m: f64, w: f64) -> MapField {
    let x = g.s_max();
    MapField::from_fn(g, TargetSpec::flat_torus(vec![None, None]), vec![0.0, 0.0], move |s, t| {
        let env = (-(s / (w * x)).powi(2)).exp();
        vec![a * s / x + (m * t + b).cos() * env, b * (t - a).sin() * env]
    })
    .unwrap()
}

fn sphere_map(g: Arc<CollarGrid>, a: f64, w: f64) -> MapField {
    let x = g.s_max();
    MapField::from_fn(g, TargetSpec::round_sphere(3), vec![0.0; 3], move |s, t| {
        let z = a * (-(s / (w * x)).powi(2)).exp() * t.cos();
        let r = (1.0 + z * z).sqrt();
        vec![t.cos() / r, t.sin() / r, z / r]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wirtinger_on_circles(ell in 0.1..1.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64, m in 1u8..4, w in 0.2..0.8f64) {
        let u = flat_map(grid(ell, 40, 32), a, b, m as f64, w);
        let j = jet(&u).unwrap();
        let stride = 32 * 2;
        for i in 0..40 {
            let r = i * stride..(i + 1) * stride;
            let t1: f64 = j.u_theta()[r.clone()].iter().map(|x| x * x).sum();
            let t2: f64 = j.u_theta_theta()[r].iter().map(|x| x * x).sum();
            prop_assert!(t2 >= t1 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn cutoff_sandwich(ell in 0.1..1.5f64, a in -1.0..1.0f64, w in 0.2..0.8f64) {
        let r = energies(&sphere_map(grid(ell, 48, 16), a, w), Cutoff::default()).unwrap();
        prop_assert!(r.i_smooth <= r.weighted * (1.0 + 1e-12));
        let delta = Cutoff::default().delta;
        prop_assert!(r.weighted - r.i_smooth <= r.energy / (delta * delta));
    }

    #[test]
    fn theta_profile_below_twice_energy(ell in 0.1..1.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64, t0 in -1.0..1.0f64) {
        let u = flat_map(grid(ell, 200, 16), a, b, 2.0, 0.4);
        let e = energies(&u, Cutoff::default()).unwrap().energy;
        let s0 = t0 * (u.grid().s_max() - 1.0);
        prop_assert!(theta_profile(&u, s0).unwrap() <= 2.0 * e);
    }
}

#[test]
fn energy_is_conformally_invariant() {
    // Scaling ℓ changes ρ but not the conformal energy of fixed (s, θ) data.
    let a = flat_map(grid(0.6, 64, 16), 0.5, 0.2, 1.0, 0.4);
    let b = a.with_grid(Arc::new(a.grid().with_ell(0.3).unwrap())).unwrap();
    let ea = energies(&a, Cutoff::default()).unwrap();
    let eb = energies(&b, Cutoff::default()).unwrap();
    assert!((ea.energy - eb.energy).abs() < 1e-12 * ea.energy);
    assert!(ea.weighted != eb.weighted);
}

#[test]
fn constant_map_has_no_energy() {
    let u = MapField::constant(grid(0.5, 16, 8), TargetSpec::round_sphere(3), &[0.0, 0.0, 1.0]).unwrap();
    let r = energies(&u, Cutoff::default()).unwrap();
    assert_eq!((r.energy, r.weighted, r.i_theta), (0.0, 0.0, 0.0));
}

#[test]
fn off_target_values_rejected() {
    let g = grid(0.5, 8, 8);
    let bad = MapField::from_fn(g, TargetSpec::round_sphere(3), vec![0.0; 3], |_, _| vec![1.0, 1.0, 0.0]);
    assert!(bad.is_err());
}
