use std::f64::consts::{PI, TAU};

use collarflow_core::fields::{MapField, TargetSpec};
use collarflow_core::flow::{
    dlogell_bound_check, energy_identity_residual, run, FlowConfig, RunStatus, Stepper,
};
use collarflow_core::geometry::half_length;
use proptest::prelude::*;

const A: f64 = 0.5;

fn wrap(cfg: &FlowConfig) -> MapField {
    MapField::from_fn(
        cfg.grid().unwrap(),
        TargetSpec::flat_torus(vec![Some(TAU * A), None]),
        vec![TAU * A, 0.0],
        |_, th| vec![A * th, 0.0],
    )
    .unwrap()
}

fn wrap_cfg(dt: f64, stepper: Stepper) -> FlowConfig {
    let mut cfg = FlowConfig::new(0.3, dt, 0.02, 32, 8);
    cfg.ell_max = 0.6;
    cfg.stepper = stepper;
    cfg
}

/// `dℓ/dt` for the harmonic wrap `u = aθ`, whose Hopf differential is
/// `−a² dz²`: the pairing over `|s| ≤ S` divided by the full-collar norm.
fn wrap_rate(ell: f64, s: f64) -> f64 {
    let part = |x: f64| x + PI / ell * (ell * x / PI).sin();
    let ratio = part(s) / part(half_length(ell).unwrap());
    (2.0 * PI * PI / ell) * 0.25 * A * A * ratio
}

fn rk4_length(ell0: f64, s: f64, t: f64, n: usize) -> f64 {
    let h = t / n as f64;
    let mut l = ell0;
    for _ in 0..n {
        let k1 = wrap_rate(l, s);
        let k2 = wrap_rate(l + 0.5 * h * k1, s);
        let k3 = wrap_rate(l + 0.5 * h * k2, s);
        let k4 = wrap_rate(l + h * k3, s);
        l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    l
}

#[test]
fn harmonic_wrap_follows_length_ode() {
    let mut cfg = wrap_cfg(2e-5, Stepper::Rk2);
    cfg.n_s = 64;
    let tr = run(&cfg, &wrap(&cfg)).unwrap();
    assert_eq!(tr.status, RunStatus::Completed);
    let s = cfg.grid().unwrap().s_max();
    let oracle = rk4_length(0.3, s, 0.02, 2000);
    let got = tr.final_state.ell;
    assert!(((got - oracle) / (oracle - 0.3)).abs() < 1e-3, "{got} {oracle}");
    // The map does not move.
    let moved = tr.final_state.u.values().iter().zip(wrap(&cfg).values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(moved < 1e-12);
}

#[test]
fn steppers_converge_at_their_orders() {
    let reference = {
        let cfg = wrap_cfg(1e-5, Stepper::Rk2);
        run(&cfg, &wrap(&cfg)).unwrap().final_state.ell
    };
    let err = |dt: f64, st: Stepper| {
        let cfg = wrap_cfg(dt, st);
        (run(&cfg, &wrap(&cfg)).unwrap().final_state.ell - reference).abs()
    };
    let euler = (err(2e-4, Stepper::ExplicitEuler) / err(1e-4, Stepper::ExplicitEuler)).log2();
    let rk2 = (err(2e-4, Stepper::Rk2) / err(1e-4, Stepper::Rk2)).log2();
    assert!((euler - 1.0).abs() < 0.1, "{euler}");
    assert!(rk2 > 1.8, "{rk2}");
}

#[test]
fn oversized_step_reports_stability_limit() {
    let cfg = wrap_cfg(1e-2, Stepper::Rk2);
    let tr = run(&cfg, &wrap(&cfg)).unwrap();
    assert_eq!(tr.status, RunStatus::StabilityLimit);
    assert_eq!(tr.steps, 0);
}

#[test]
fn growing_length_stops_at_ell_max() {
    let mut cfg = wrap_cfg(1e-4, Stepper::Rk2);
    cfg.ell_max = 0.31;
    cfg.t_end = 1.0;
    let tr = run(&cfg, &wrap(&cfg)).unwrap();
    assert_eq!(tr.status, RunStatus::EllMaxExceeded);
    assert!(tr.final_state.ell <= 0.31);
}

fn bumpy(cfg: &FlowConfig, a: f64, b: f64, m: f64) -> MapField {
    let x = cfg.grid().unwrap().s_max();
    MapField::from_fn(cfg.grid().unwrap(), TargetSpec::flat_torus(vec![None, None]), vec![0.0, 0.0], move |s, t| {
        let env = (-(s / (0.4 * x)).powi(2)).exp();
        vec![a * s / x + (m * t + b).cos() * env, b * (2.0 * t).sin() * env]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frozen_flow_dissipates_energy(a in -1.0..1.0f64, b in -1.0..1.0f64, m in 1u8..4) {
        let mut cfg = FlowConfig::new(0.3, 1.0, 1.0, 24, 8);
        cfg.freeze_ell = true;
        cfg.stepper = Stepper::ExplicitEuler;
        cfg.dt = 0.9 * cfg.grid().unwrap().parabolic_dt_limit();
        cfg.t_end = 15.0 * cfg.dt;
        let u = bumpy(&cfg, a, b, m as f64);
        let tr = run(&cfg, &u).unwrap();
        prop_assert!(tr.rows.windows(2).all(|w| w[1].energy <= w[0].energy));
        prop_assert!(tr.rows.iter().all(|r| r.ell == 0.3));
        // Boundary rows never move.
        let n = u.values().len();
        let w = cfg.n_theta * 2;
        for k in (0..w).chain(n - w..n) {
            prop_assert_eq!(tr.final_state.u.values()[k], u.values()[k]);
        }
    }

    #[test]
    fn energy_residual_is_first_order(a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let worst = |dt_frac: f64| {
            let mut cfg = FlowConfig::new(0.3, 1.0, 1.0, 24, 8);
            cfg.freeze_ell = true;
            cfg.stepper = Stepper::ExplicitEuler;
            let lim = cfg.grid().unwrap().parabolic_dt_limit();
            cfg.dt = dt_frac * lim;
            cfg.t_end = 8.0 * lim;
            let tr = run(&cfg, &bumpy(&cfg, a, b, 2.0)).unwrap();
            energy_identity_residual(&tr).iter().map(|r| r.abs()).fold(0.0, f64::max)
        };
        let order = (worst(0.4) / worst(0.2)).log2();
        prop_assert!((order - 1.0).abs() < 0.1, "order {}", order);
    }
}

#[test]
fn bound_constants_finite_on_wrap() {
    let cfg = wrap_cfg(2e-4, Stepper::Rk2);
    let tr = run(&cfg, &wrap(&cfg)).unwrap();
    let b = dlogell_bound_check(&tr, tr.rows[0].energy);
    assert!(b.c1.is_finite() && b.c1 > 0.0);
    // The map is stationary, so 𝓘 changes only through ℓ.
    assert!(b.c2.is_finite());
}
