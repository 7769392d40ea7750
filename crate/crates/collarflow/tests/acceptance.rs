//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Each criterion is also held to its wall-clock budget. The test profile
//! builds with optimisations, so the budgets apply to `cargo test` as is.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use collarflow::samples::{random_decay_modes, random_flat_map};
use collarflow::trials::{comparison_trials, TrialSettings};
use collarflow::verify::{check_rng, kernel_residual_orders, length_rate_error};
use collarflow_core::fields::{MapField, TargetSpec};
use collarflow_core::flow::{
    dlogell_bound_check, energy_identity_residual, metric_speed, run, weighted_energy_speed,
    FlowConfig, FlowState, Stepper,
};
use collarflow_core::geometry::{
    dz2_l2_sq_series, dz2_norms, symmetric_rho_sq_rate, CollarGrid, CollarParams,
};
use collarflow_core::quad_diff::{decay_slope, principal_split, synthesize, DecayProbe};
use collarflow_core::wp::{correction_coefficient, integrate_to_pinch, leading_distance, CORRECTION_COEFFICIENT};
use collarflow_core::Complex64;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Criterion = fn() -> Result<Verdict, String>;

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn full_grid(ell: f64, n_s: usize, n_theta: usize) -> Arc<CollarGrid> {
    let p = CollarParams::new(ell).expect("valid length");
    Arc::new(CollarGrid::full_collar(p, n_s, n_theta).expect("valid grid"))
}

/// Midpoint quadrature of `‖dz²‖²` with `|dz²|_g = 2ρ⁻²`.
fn dz2_l2_sq_quadrature(ell: f64, n: usize) -> f64 {
    let g = full_grid(ell, n, 1);
    g.s_nodes()
        .iter()
        .zip(g.s_weights())
        .zip(g.rho())
        .map(|((_, &w), &rho)| TAU * w * 4.0 / (rho * rho))
        .sum()
}

fn c1_dz2_norms() -> Result<Verdict, String> {
    // Next term of the small-ℓ expansion, worked out by hand from the
    // Taylor series of gd and tanh·sech: ‖dz²‖² − series → (14π⁴/15)ℓ².
    let k_limit = 14.0 * PI.powi(4) / 15.0;
    let k = 1.05 * k_limit;
    let mut worst_rel = 0.0f64;
    let mut ks = Vec::new();
    for ell in [0.05, 0.1, 0.2] {
        let q = dz2_l2_sq_quadrature(ell, 200_000);
        let exact = dz2_norms(ell).map_err(e2s)?.l2_sq;
        worst_rel = worst_rel.max(((q - exact) / exact).abs());
        ks.push((q - dz2_l2_sq_series(ell)) / (ell * ell));
    }
    let within = ks.iter().all(|&r| r > 0.0 && r <= k);
    Ok(verdict(
        worst_rel <= 1e-8 && within,
        format!("max rel quadrature err {worst_rel:.2e} (tol 1e-8); residual/l^2 = {ks:.3?} <= K = {k:.3}"),
    ))
}

fn c2_wp_incompleteness() -> Result<Verdict, String> {
    let ells = [0.02, 0.05, 0.1];
    let fit = correction_coefficient(&ells).map_err(e2s)?;
    let rel = (fit.c / CORRECTION_COEFFICIENT - 1.0).abs();
    let mut worst = 0.0f64;
    for ell in ells.iter().copied().chain([0.2, 0.5, 1.0]) {
        let d = integrate_to_pinch(ell, 1e-12).map_err(e2s)?.distance;
        worst = worst.max(d / leading_distance(ell));
    }
    Ok(verdict(
        rel <= 0.05 && worst <= 1.0,
        format!(
            "fitted c = {:.8e} vs 1/(84pi) = {:.8e} (rel {rel:.2e}, tol 5e-2); max dist/(2pi l0)^1/2 = {worst:.8}",
            fit.c, CORRECTION_COEFFICIENT
        ),
    ))
}

fn wrap_run(dt: f64) -> (FlowConfig, MapField) {
    let mut cfg = FlowConfig::new(0.3, dt, 0.02, 32, 8);
    cfg.ell_max = 0.6;
    cfg.stepper = Stepper::Rk2;
    let a = 0.5;
    let u = MapField::from_fn(
        cfg.grid().expect("valid config"),
        TargetSpec::flat_torus(vec![Some(TAU * a), None]),
        vec![TAU * a, 0.0],
        |_, th| vec![a * th, 0.0],
    )
    .expect("wrap map");
    (cfg, u)
}

fn c3_length_law() -> Result<Verdict, String> {
    let mut errs = Vec::new();
    for dt in [2e-4, 1e-4, 5e-5] {
        let (cfg, u) = wrap_run(dt);
        errs.push(length_rate_error(&cfg, &u)?);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    Ok(verdict(min >= 0.9, format!("max |fd - law| = [{}]; halving orders {orders:.3?} (tol >= 0.9)", shown.join(", "))))
}

fn c4_metric_speed_gap() -> Result<Verdict, String> {
    let ell: f64 = 0.1;
    let mut rng = check_rng(4, "acceptance.metric_speed_gap");
    let g = full_grid(ell, 400, 16);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = random_flat_map(&mut rng, g.clone(), 2, 1.0);
        let st = FlowState::new(u, 0.0);
        let v = metric_speed(&st, 1.0).map_err(e2s)?;
        let w = weighted_energy_speed(&st, 1.0).map_err(e2s)?;
        worst = worst.max(((v - w) / w).abs());
    }
    let tol = 2.0 * ell.powi(3);
    Ok(verdict(
        worst < tol,
        format!("max relative gap {worst:.4e} (tol {tol:.1e}; l^3/6pi = {:.4e})", ell.powi(3) / (6.0 * PI)),
    ))
}

fn frozen_run(u: &MapField, dt: f64, t_end: f64) -> Result<(f64, bool), String> {
    let mut cfg = FlowConfig::new(0.3, dt, t_end, 24, 8);
    cfg.freeze_ell = true;
    cfg.stepper = Stepper::ExplicitEuler;
    let tr = run(&cfg, u).map_err(e2s)?;
    let res = energy_identity_residual(&tr);
    let worst = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let monotone = tr.rows.windows(2).all(|w| w[1].energy <= w[0].energy);
    Ok((worst, monotone))
}

fn c5_energy_identity() -> Result<Verdict, String> {
    let mut rng = check_rng(5, "acceptance.energy_identity");
    let g = full_grid(0.3, 24, 8);
    let dt = 0.4 * g.parabolic_dt_limit();
    let t_end = 20.0 * dt;
    let mut monotone = true;
    let mut min_order = f64::INFINITY;
    let mut max_order = f64::NEG_INFINITY;
    for _ in 0..10 {
        let u = random_flat_map(&mut rng, g.clone(), 2, 1.0);
        let (r1, m1) = frozen_run(&u, dt, t_end)?;
        let (r2, m2) = frozen_run(&u, dt / 2.0, t_end)?;
        monotone &= m1 && m2;
        let order = (r1 / r2).log2();
        min_order = min_order.min(order);
        max_order = max_order.max(order);
    }
    Ok(verdict(
        monotone && min_order >= 0.9 && max_order <= 1.1,
        format!("E non-increasing: {monotone}; residual orders in [{min_order:.3}, {max_order:.3}] (tol 1 +- 0.1)"),
    ))
}

fn c6_decay() -> Result<Verdict, String> {
    let mut rng = check_rng(6, "acceptance.decay");
    let mut slopes = Vec::new();
    for ell in [0.05, 0.1] {
        let g = full_grid(ell, 4000, 16);
        for _ in 0..4 {
            let c = random_decay_modes(&mut rng, 4, g.s_max());
            let b0 = principal_split(&synthesize(&c, g.clone())).b0;
            if b0.norm() > 1e-10 {
                return Ok(verdict(false, format!("synthesised principal part {b0}")));
            }
            let probe = DecayProbe::new(&c, g.clone(), 0.2).map_err(e2s)?;
            let mut ms = Vec::new();
            for d in [0.05, 0.1, 0.2] {
                if let Some(m) = probe.measure(d).map_err(e2s)? {
                    ms.push(m);
                }
            }
            slopes.push(decay_slope(&ms).ok_or("fewer than two admissible deltas")?.slope);
        }
    }
    let worst = slopes.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    Ok(verdict(worst <= 0.1, format!("mixture slopes {slopes:.5?} (tol |slope - 1| <= 0.1)")))
}

fn c7_symmetric_rate() -> Result<Verdict, String> {
    let mut rng = check_rng(7, "acceptance.symmetric_rate");
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = CollarParams::new(rng.gen_range(0.05..1.5)).map_err(e2s)?;
        let s0 = rng.gen_range(-0.9..0.9) * p.half_length();
        let b0 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rho = p.rho(s0).map_err(e2s)?;
        let rate = symmetric_rho_sq_rate(p, s0, b0, 1e-3 * rho * rho).map_err(e2s)?;
        worst = worst.max((rate + b0.re).abs());
    }
    Ok(verdict(worst <= 1e-6, format!("max |rate + Re b0| = {worst:.3e} (tol 1e-6)")))
}

fn c8_comparison() -> Result<Verdict, String> {
    let mut rng = check_rng(8, "acceptance.comparison");
    let rep = comparison_trials(&mut rng, TrialSettings::default()).map_err(e2s)?;
    let orders = kernel_residual_orders(&mut rng, 4.0, 81, 4)?;
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(verdict(
        rep.accepted == 10_000 && rep.violations == 0 && min >= 1.9,
        format!(
            "{} accepted ({} attempts, {} with interior dips), {} violations; kernel orders {orders:.3?} (tol >= 1.9)",
            rep.accepted, rep.attempted, rep.nontrivial, rep.violations
        ),
    ))
}

fn demo_constants(name: &str, refine: usize) -> Result<(f64, f64, &'static str), String> {
    let cfg = collarflow::demos::demo(name).ok_or("unknown demo")?;
    let mut fb = cfg.flow.clone();
    fb.n_s *= refine;
    fb.n_theta *= refine;
    let fc = fb.flow_config().map_err(e2s)?;
    let u = collarflow::initial::build_initial(fc.grid().map_err(e2s)?, &fb.target.spec(), &fb.initial, cfg.seed)
        .map_err(e2s)?;
    let tr = run(&fc, &u).map_err(e2s)?;
    let b = dlogell_bound_check(&tr, tr.rows[0].energy);
    Ok((b.c1, b.c2, tr.status.as_str()))
}

fn c9_demo_constants() -> Result<Verdict, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in collarflow::demos::names() {
        let (a1, a2, sa) = demo_constants(name, 1)?;
        let (b1, b2, sb) = demo_constants(name, 2)?;
        let ch1 = (b1 / a1 - 1.0).abs();
        let ch2 = (b2 / a2 - 1.0).abs();
        let ok = [a1, a2, b1, b2].iter().all(|x| x.is_finite()) && ch1 < 0.1 && ch2 < 0.1;
        pass &= ok;
        parts.push(format!(
            "{name} [{sa}/{sb}]: C_l {a1:.4e}->{b1:.4e} ({:.1}%), C_I {a2:.4e}->{b2:.4e} ({:.1}%)",
            100.0 * ch1,
            100.0 * ch2
        ));
    }
    Ok(verdict(pass, parts.join("; ")))
}

fn main() {
    let criteria: [(&str, Criterion, u64); 9] = [
        ("1 dz2 norms", c1_dz2_norms, 1),
        ("2 wp incompleteness", c2_wp_incompleteness, 5),
        ("3 holomorphic length law", c3_length_law, 10),
        ("4 metric speed gap", c4_metric_speed_gap, 2),
        ("5 energy identity", c5_energy_identity, 30),
        ("6 decay estimate", c6_decay, 2),
        ("7 symmetric deformation rate", c7_symmetric_rate, 1),
        ("8 comparison principle", c8_comparison, 30),
        ("9 demo constants", c9_demo_constants, 60),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let v = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (pass, detail) = match v {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.2}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
