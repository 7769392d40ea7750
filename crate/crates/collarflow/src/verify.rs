//! Registry of invariant checks behind `collarflow verify`.
//!
//! Each check draws from its own ChaCha stream (keyed by the check name), so
//! results do not depend on which checks run or in what order.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use collarflow_core::angular::{
    angular_bound_audit, kernel_residual, kernel_solution, snapshot_c1, ProfileFn,
};
use collarflow_core::fields::{energies, jet, theta_profile, Cutoff, MapField, TargetSpec};
use collarflow_core::flow::{
    metric_speed, run, weighted_energy_speed, FlowConfig, FlowState, Stepper,
};
use collarflow_core::geometry::{dz2_norms, CollarGrid, CollarParams, ELL_LIMIT};
use collarflow_core::quad_diff::{
    decay_slope, hopf_differential, inner_product, inner_product_on, lp_norm, lp_norm_on,
    principal_split, synthesize, DecayProbe, FourierQD, Norm, QuadDiffField, Region,
};
use collarflow_core::wp::{fixed_step_distance, integrate_to_pinch, leading_distance};
use collarflow_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::samples::{random_decay_modes, random_flat_map, random_qd, random_sphere_map};
use crate::trials::{comparison_trials, NaturalSpline, TrialSettings};

/// Test hooks. `rho_perturbation = κ` replaces `ρ(s)` by `ρ(s)e^{κs}` in the
/// geometry checks only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Hooks {
    pub rho_perturbation: f64,
}

impl Hooks {
    fn rho(&self, p: &CollarParams, s: f64) -> f64 {
        p.rho(s).expect("s inside the collar") * (self.rho_perturbation * s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Outcome {
    fn le(measured: f64, tolerance: f64, note: impl Into<String>) -> Self {
        Self { pass: measured <= tolerance, measured, tolerance, note: note.into() }
    }
    fn ge(measured: f64, tolerance: f64, note: impl Into<String>) -> Self {
        Self { pass: measured >= tolerance, measured, tolerance, note: note.into() }
    }
    fn failed(note: impl Into<String>) -> Self {
        Self { pass: false, measured: f64::NAN, tolerance: f64::NAN, note: note.into() }
    }
}

type CheckFn = fn(&mut ChaCha8Rng, &Hooks) -> Result<Outcome, String>;

pub struct Check {
    pub name: &'static str,
    pub suite: &'static str,
    run: CheckFn,
}

pub const SUITES: [&str; 6] = ["geometry", "qd", "fields", "flow", "angular", "wp"];

pub fn registry() -> Vec<Check> {
    macro_rules! c {
        ($suite:literal, $name:literal, $f:ident) => {
            Check { name: concat!($suite, ".", $name), suite: $suite, run: $f }
        };
    }
    vec![
        c!("geometry", "inj_identity", geometry_inj_identity),
        c!("geometry", "dz2_quadrature", geometry_dz2_quadrature),
        c!("geometry", "rho_equivalence", geometry_rho_equivalence),
        c!("geometry", "x_delta_sandwich", geometry_x_delta_sandwich),
        c!("qd", "mode_orthogonality", qd_mode_orthogonality),
        c!("qd", "pythagoras", qd_pythagoras),
        c!("qd", "decay_estimate", qd_decay_estimate),
        c!("qd", "holder", qd_holder),
        c!("fields", "wirtinger", fields_wirtinger),
        c!("fields", "conformal_invariance", fields_conformal_invariance),
        c!("fields", "cutoff_sandwich", fields_cutoff_sandwich),
        c!("fields", "energy_hopf_bound", fields_energy_hopf_bound),
        c!("flow", "frozen_energy_monotone", flow_frozen_energy_monotone),
        c!("flow", "metric_speed_identity", flow_metric_speed_identity),
        c!("flow", "fd_length_rate", flow_fd_length_rate),
        c!("flow", "boundary_fixed", flow_boundary_fixed),
        c!("angular", "comparison_principle", angular_comparison_principle),
        c!("angular", "kernel_order", angular_kernel_order),
        c!("angular", "theta_below_2e", angular_theta_below_2e),
        c!("angular", "kernel_bound_audit", angular_kernel_bound_audit),
        c!("wp", "upper_bound", wp_upper_bound),
        c!("wp", "monotone_distance", wp_monotone_distance),
        c!("wp", "integrator_order", wp_integrator_order),
    ]
}

/// FNV-1a, used to key per-check streams.
fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn check_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name));
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub status: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub checks: BTreeMap<String, CheckRecord>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Runs the selected suites (all when `suite` is `None`) on up to `threads`
/// worker threads. Returns the report and per-check wall times in seconds.
pub fn verify(
    seed: u64,
    suite: Option<&str>,
    hooks: Hooks,
    threads: usize,
) -> (VerifyReport, BTreeMap<String, f64>) {
    let checks: Vec<Check> = registry().into_iter().filter(|c| suite.map_or(true, |s| s == c.suite)).collect();
    let threads = threads.clamp(1, checks.len().max(1));
    let results: Vec<(String, CheckRecord, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let mine: Vec<&Check> = checks.iter().skip(t).step_by(threads).collect();
                scope.spawn(move || mine.into_iter().map(|c| run_one(c, seed, &hooks)).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("check thread")).collect()
    });
    let mut map = BTreeMap::new();
    let mut timings = BTreeMap::new();
    for (name, rec, secs) in results {
        timings.insert(name.clone(), secs);
        map.insert(name, rec);
    }
    let passed = map.values().filter(|r| r.status == "pass").count();
    let failed = map.len() - passed;
    (VerifyReport { seed, passed, failed, checks: map }, timings)
}

fn run_one(c: &Check, seed: u64, hooks: &Hooks) -> (String, CheckRecord, f64) {
    let mut rng = check_rng(seed, c.name);
    let start = Instant::now();
    let out = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (c.run)(&mut rng, hooks))) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::failed(e),
        Err(_) => Outcome::failed("check panicked"),
    };
    let secs = start.elapsed().as_secs_f64();
    let rec = CheckRecord {
        suite: c.suite.to_string(),
        status: if out.pass { "pass" } else { "fail" },
        measured: out.measured,
        tolerance: out.tolerance,
        note: out.note,
    };
    (c.name.to_string(), rec, secs)
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn params(ell: f64) -> Result<CollarParams, String> {
    CollarParams::new(ell).map_err(e2s)
}

fn full_grid(ell: f64, n_s: usize, n_theta: usize) -> Result<Arc<CollarGrid>, String> {
    Ok(Arc::new(CollarGrid::full_collar(params(ell)?, n_s, n_theta).map_err(e2s)?))
}

// ---- geometry ----

fn geometry_inj_identity(rng: &mut ChaCha8Rng, hooks: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let ell = rng.gen_range(0.01..ELL_LIMIT * 0.999);
        let p = params(ell)?;
        let s = rng.gen_range(-1.0..1.0) * p.half_length() * 0.999_999;
        let inj = p.injectivity_radius(s).map_err(e2s)?;
        // cos(ℓs/2π) recovered from ρ.
        let cos = ell / (TAU * hooks.rho(&p, s));
        worst = worst.max((inj.sinh() * cos - (ell / 2.0).sinh()).abs());
    }
    Ok(Outcome::le(worst, 1e-12, "max |sinh(inj) cos(ls/2pi) - sinh(l/2)|"))
}

fn geometry_dz2_quadrature(rng: &mut ChaCha8Rng, hooks: &Hooks) -> Result<Outcome, String> {
    let mut ells = vec![0.05, 0.1, 0.3, 0.8, 1.5];
    ells.extend((0..3).map(|_| rng.gen_range(0.05..1.7)));
    let mut worst = 0.0f64;
    for ell in ells {
        let g = full_grid(ell, 40_000, 4)?;
        let p = g.params();
        let (mut l1, mut l2) = (0.0, 0.0);
        for (&s, &w) in g.s_nodes().iter().zip(g.s_weights()) {
            let rho = hooks.rho(&p, s);
            let mag = 2.0 / (rho * rho);
            l1 += TAU * w * mag * rho * rho;
            l2 += TAU * w * mag * mag * rho * rho;
        }
        let n = dz2_norms(ell).map_err(e2s)?;
        worst = worst.max(((l1 - n.l1) / n.l1).abs()).max(((l2 - n.l2_sq) / n.l2_sq).abs());
    }
    Ok(Outcome::le(worst, 1e-8, "max relative quadrature error of |dz2| L1 and L2^2"))
}

fn geometry_rho_equivalence(rng: &mut ChaCha8Rng, hooks: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for k in 0..200 {
        let ell = rng.gen_range(0.02..ELL_LIMIT * 0.999);
        let p = params(ell)?;
        let x = p.half_length();
        let lambda = rng.gen_range(0.05..3.0f64).min(0.45 * x);
        let s0 = if k % 2 == 0 {
            (x - lambda) * (1.0 - 1e-9)
        } else {
            rng.gen_range(-1.0..1.0) * (x - lambda) * (1.0 - 1e-9)
        };
        let r0 = hooks.rho(&p, s0);
        for i in 0..=64 {
            let s = s0 - lambda + 2.0 * lambda * i as f64 / 64.0;
            let s = s.clamp(-x * (1.0 - 1e-12), x * (1.0 - 1e-12));
            let r = hooks.rho(&p, s) / r0;
            worst = worst.max(r.ln().abs() / (lambda / PI));
        }
    }
    Ok(Outcome::le(worst, 1.0 + 1e-10, "max |log(rho(s)/rho(s0))| / (Lambda/pi) over windows"))
}

/// Root of `inj(s) = δ` on `(0, X)`, with `inj` recovered from `ρ`.
fn bisect_x_delta(p: &CollarParams, delta: f64, hooks: &Hooks) -> f64 {
    let ell = p.ell();
    let inj = |s: f64| ((ell / 2.0).sinh() * TAU * hooks.rho(p, s) / ell).asinh();
    let (mut lo, mut hi) = (0.0, p.half_length() * (1.0 - 1e-15));
    if inj(hi) < delta {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inj(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn geometry_x_delta_sandwich(rng: &mut ChaCha8Rng, hooks: &Hooks) -> Result<Outcome, String> {
    let mut worst_root = 0.0f64;
    let mut upper_ok = true;
    let mut c_lower = f64::NEG_INFINITY;
    for _ in 0..100 {
        let delta = rng.gen_range(0.02..1.0f64.asinh() * 0.999);
        let ell = rng.gen_range(0.01..(2.0 * delta).min(ELL_LIMIT * 0.999));
        let p = params(ell)?;
        let x = p.half_length();
        let xd = p.delta_thin_half_length(delta).map_err(e2s)?;
        let gap = x - xd;
        upper_ok &= gap <= PI * PI / (2.0 * delta) * (1.0 + 1e-12);
        c_lower = c_lower.max(PI / delta - gap);
        let root = bisect_x_delta(&p, delta, hooks);
        worst_root = worst_root.max((root - xd).abs() / (1.0 + x));
    }
    if !upper_ok {
        return Ok(Outcome::failed("X - X_delta exceeded pi^2/(2 delta)"));
    }
    Ok(Outcome::le(
        worst_root,
        1e-10,
        format!("bisection root vs closed form; fitted lower-bound constant C = {c_lower:.6}"),
    ))
}

// ---- quadratic differentials ----

fn basis_field(grid: &Arc<CollarGrid>, n: i64) -> QuadDiffField {
    let mut c = FourierQD::zeros(n.unsigned_abs() as usize, grid.s_max());
    c.set_scaled(n, Complex64::new(1.0, 0.0));
    synthesize(&c, grid.clone())
}

fn qd_mode_orthogonality(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let g = full_grid(0.2, 1000, 16)?;
    let modes: Vec<QuadDiffField> = (-4..=4).map(|n| basis_field(&g, n)).collect();
    let x = g.s_max();
    let mut regions = vec![Region::All];
    for _ in 0..3 {
        let a = rng.gen_range(-x..x);
        let b = rng.gen_range(-x..x);
        regions.push(Region::Band { lo: a.min(b), hi: a.max(b) + 1.0 });
    }
    let mut worst = 0.0f64;
    for r in regions {
        let norms: Vec<f64> = modes.iter().map(|m| lp_norm_on(m, Norm::L2, r)).collect::<Result<_, _>>().map_err(e2s)?;
        for a in 0..modes.len() {
            for b in 0..a {
                if norms[a] == 0.0 || norms[b] == 0.0 {
                    continue;
                }
                let ip = inner_product_on(&modes[a], &modes[b], r).map_err(e2s)?;
                worst = worst.max(ip.norm() / (norms[a] * norms[b]));
            }
        }
    }
    Ok(Outcome::le(worst, 1e-12, "max normalised <phi_n, phi_m> over full collar and subcylinders"))
}

fn qd_pythagoras(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let g = full_grid(rng.gen_range(0.1..1.0), 400, 16)?;
        let f = random_qd(rng, g.clone());
        let split = principal_split(&f);
        let dz2 = lp_norm(&QuadDiffField::dz2(g), Norm::L2);
        let total = lp_norm(&f, Norm::L2).powi(2);
        let parts = split.b0.norm_sqr() * dz2 * dz2 + lp_norm(&split.decay, Norm::L2).powi(2);
        worst = worst.max((total - parts).abs() / total);
    }
    Ok(Outcome::le(worst, 1e-8, "relative Pythagoras defect"))
}

fn qd_decay_estimate(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut c_fit = 0.0f64;
    let mut monotone = true;
    let mut slopes = Vec::new();
    for ell in [0.05, 0.1, 0.2] {
        let g = full_grid(ell, 4000, 16)?;
        for _ in 0..3 {
            let c = random_decay_modes(rng, 4, g.s_max());
            let b0 = principal_split(&synthesize(&c, g.clone())).b0;
            if b0.norm() > 1e-10 {
                return Ok(Outcome::failed(format!("synthesised field has b0 = {b0}")));
            }
            let probe = DecayProbe::new(&c, g.clone(), 0.2).map_err(e2s)?;
            let mut ms = Vec::new();
            for d in [0.05, 0.1, 0.2] {
                if let Some(m) = probe.measure(d).map_err(e2s)? {
                    ms.push(m);
                }
            }
            monotone &= ms.windows(2).all(|w| w[0].ratio() < w[1].ratio());
            for m in &ms {
                c_fit = c_fit.max(m.constant());
            }
            if let Some(fit) = decay_slope(&ms) {
                slopes.push(fit.slope);
            }
        }
    }
    if !monotone || !c_fit.is_finite() {
        return Ok(Outcome::failed("decay ratio not monotone in delta or constant not finite"));
    }
    let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::ge(min_slope, 0.9, format!("fitted C = {c_fit:.6e}; min slope of log ratio vs -pi/delta")))
}

fn qd_holder(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let g = full_grid(rng.gen_range(0.1..1.0), 400, 16)?;
        let f = random_qd(rng, g.clone());
        let dz2 = QuadDiffField::dz2(g);
        let lhs = inner_product(&f, &dz2).map_err(e2s)?.norm();
        worst = worst.max(lhs / (lp_norm(&f, Norm::L1) * lp_norm(&dz2, Norm::Inf)));
    }
    Ok(Outcome::le(worst, 1.0, "|<Psi,dz2>| / (|Psi|_L1 |dz2|_Linf)"))
}

// ---- fields ----

fn fields_wirtinger(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let g = full_grid(0.3, 64, 32)?;
    let mut worst = f64::INFINITY;
    for _ in 0..5 {
        let u = random_flat_map(rng, g.clone(), 2, 1.0);
        let j = jet(&u).map_err(e2s)?;
        let stride = g.n_theta() * 2;
        for i in 0..g.n_s() {
            let r = i * stride..(i + 1) * stride;
            let a: f64 = j.u_theta()[r.clone()].iter().map(|x| x * x).sum();
            let b: f64 = j.u_theta_theta()[r].iter().map(|x| x * x).sum();
            if a > 1e-20 {
                worst = worst.min(b / a);
            }
        }
    }
    Ok(Outcome::ge(worst, 1.0 - 1e-12, "min over circles of |u_tt|^2 / |u_t|^2"))
}

fn fields_conformal_invariance(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for k in 0..6 {
        let g = full_grid(rng.gen_range(0.1..1.0), 48, 16)?;
        let u = if k % 2 == 0 { random_flat_map(rng, g.clone(), 2, 1.0) } else { random_sphere_map(rng, g.clone(), 0.4) };
        let e = energies(&u, Cutoff::default()).map_err(e2s)?.energy;
        let j = jet(&u).map_err(e2s)?;
        let grad = j.grad_sq();
        let nt = g.n_theta();
        let mut e_g = 0.0;
        for i in 0..g.n_s() {
            let rho2 = g.rho()[i].powi(2);
            let row: f64 = grad[i * nt..(i + 1) * nt].iter().map(|x| 0.5 * x / rho2).sum();
            e_g += g.weight(i) * rho2 * row;
        }
        worst = worst.max((e - e_g).abs() / e);
    }
    Ok(Outcome::le(worst, 1e-12, "relative gap between conformal E and integral of e(u,g) dv_g"))
}

fn fields_cutoff_sandwich(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for k in 0..6 {
        let g = full_grid(rng.gen_range(0.1..1.5), 48, 16)?;
        let u = if k % 2 == 0 { random_flat_map(rng, g.clone(), 2, 1.0) } else { random_sphere_map(rng, g.clone(), 0.4) };
        let r = energies(&u, Cutoff::default()).map_err(e2s)?;
        let gap = r.weighted - r.i_smooth;
        if gap < -1e-12 * r.weighted {
            return Ok(Outcome::failed("I_smooth exceeds I"));
        }
        worst = worst.max(gap / (TAU * TAU * r.energy));
    }
    Ok(Outcome::le(worst, 1.0, "(I - I_smooth) / (delta^-2 E), delta = 1/2pi"))
}

fn fields_energy_hopf_bound(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for k in 0..6 {
        let g = full_grid(rng.gen_range(0.1..1.5), 48, 16)?;
        let u = if k % 2 == 0 { random_flat_map(rng, g.clone(), 2, 1.0) } else { random_sphere_map(rng, g.clone(), 0.4) };
        let j = jet(&u).map_err(e2s)?;
        let phi = hopf_differential(&j);
        let e = energies(&u, Cutoff::default()).map_err(e2s)?.energy;
        worst = worst.max(lp_norm(&phi, Norm::L1) / (4.0 * e));
    }
    Ok(Outcome::le(worst, 1.0 + 1e-12, "|Phi|_L1 / 4E"))
}

// ---- flow ----

fn flow_frozen_energy_monotone(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut cfg = FlowConfig::new(0.3, 1.0, 1.0, 24, 8);
    cfg.freeze_ell = true;
    let g = cfg.grid().map_err(e2s)?;
    cfg.dt = 0.9 * g.parabolic_dt_limit();
    cfg.t_end = 20.0 * cfg.dt;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..3 {
        let u = random_flat_map(rng, g.clone(), 2, 1.0);
        let tr = run(&cfg, &u).map_err(e2s)?;
        let e0 = tr.rows[0].energy;
        for w in tr.rows.windows(2) {
            worst = worst.max((w[1].energy - w[0].energy) / e0);
        }
    }
    Ok(Outcome::le(worst, 1e-14, "max relative energy increase per step (frozen ell, Euler)"))
}

fn flow_metric_speed_identity(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let ell = rng.gen_range(0.05..0.5);
        let eta = rng.gen_range(0.5..2.0);
        let g = full_grid(ell, 400, 16)?;
        let u = random_flat_map(rng, g, 2, 1.0);
        let st = FlowState::new(u, 0.0);
        let v = metric_speed(&st, eta).map_err(e2s)?;
        let w = weighted_energy_speed(&st, eta).map_err(e2s)?;
        let l2 = dz2_norms(ell).map_err(e2s)?.l2_sq;
        let rescaled = v * ell.powi(3) * l2 / (32.0 * PI.powi(5));
        worst = worst.max((rescaled - w).abs() / w.abs());
    }
    Ok(Outcome::le(worst, 1e-10, "metric_speed * l^3|dz2|^2/32pi^5 vs weighted-energy form"))
}

fn wrap_config(dt: f64, t_end: f64) -> (FlowConfig, MapField) {
    let mut cfg = FlowConfig::new(0.3, dt, t_end, 32, 8);
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

/// Max over a run of `|Δℓ/Δt − dℓ/dt(row)|`.
pub fn length_rate_error(cfg: &FlowConfig, u: &MapField) -> Result<f64, String> {
    let tr = run(cfg, u).map_err(e2s)?;
    let mut err = 0.0f64;
    for w in tr.rows.windows(2) {
        let fd = (w[1].ell - w[0].ell) / (w[1].t - w[0].t);
        let law = -(2.0 * PI * PI / w[0].ell) * (cfg.eta * cfg.eta / 4.0) * w[0].re_b0;
        err = err.max((fd - law).abs());
    }
    Ok(err)
}

fn flow_fd_length_rate(_: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let (c1, u1) = wrap_config(2e-4, 0.02);
    let (c2, u2) = wrap_config(1e-4, 0.02);
    let e1 = length_rate_error(&c1, &u1)?;
    let e2 = length_rate_error(&c2, &u2)?;
    Ok(Outcome::ge((e1 / e2).log2(), 0.9, "observed order of fd dl/dt against the length law (RK2)"))
}

fn flow_boundary_fixed(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let (mut cfg, _) = wrap_config(2e-4, 0.01);
    cfg.ell_max = 0.6;
    let g = cfg.grid().map_err(e2s)?;
    let u = random_flat_map(rng, g.clone(), 2, 0.5);
    let tr = run(&cfg, &u).map_err(e2s)?;
    let v = tr.final_state.u.values();
    let w = g.n_theta() * 2;
    let n = v.len();
    let mut moved = 0.0f64;
    for k in (0..w).chain(n - w..n) {
        moved = moved.max((v[k] - u.values()[k]).abs());
    }
    let interior_moved = v.iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if interior_moved == 0.0 {
        return Ok(Outcome::failed("flow did not move the map"));
    }
    Ok(Outcome::le(moved, 0.0, "largest change of a boundary value"))
}

// ---- angular ----

fn angular_comparison_principle(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let rep = comparison_trials(rng, TrialSettings { accepted_target: 2000, ..Default::default() }).map_err(e2s)?;
    Ok(Outcome::le(
        rep.violations as f64,
        0.0,
        format!("{} accepted of {} attempts, {} with interior dips", rep.accepted, rep.attempted, rep.nontrivial),
    ))
}

/// Kernel residual orders for a random source under successive halving.
pub fn kernel_residual_orders(rng: &mut impl Rng, x: f64, n0: usize, levels: usize) -> Result<Vec<f64>, String> {
    let knots = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
    let spline = NaturalSpline::new(-x, x, knots);
    let (a, b, c1) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.1..2.0));
    let mut res = Vec::new();
    for l in 0..levels {
        let n = (n0 - 1) * (1 << l) + 1;
        let g = ProfileFn::from_fn(-x, x, n, |s| spline.eval(s)).map_err(e2s)?;
        let f = kernel_solution(a, b, c1, &g, x).map_err(e2s)?;
        res.push(kernel_residual(&f, c1, &g).map_err(e2s)?);
    }
    Ok(res.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

fn angular_kernel_order(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let orders = kernel_residual_orders(rng, 4.0, 81, 4)?;
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::ge(min, 1.9, format!("residual orders {orders:.3?}")))
}

fn angular_theta_below_2e(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for k in 0..4 {
        let g = full_grid(rng.gen_range(0.2..1.0), 96, 16)?;
        let u = if k % 2 == 0 { random_flat_map(rng, g.clone(), 2, 1.0) } else { random_sphere_map(rng, g.clone(), 0.4) };
        let e = energies(&u, Cutoff::default()).map_err(e2s)?.energy;
        let lim = g.s_max() - 1.0;
        for &s0 in g.s_nodes().iter().filter(|s| s.abs() <= lim) {
            worst = worst.max(theta_profile(&u, s0).map_err(e2s)? / (2.0 * e));
        }
    }
    Ok(Outcome::le(worst, 1.0, "max Theta(s0) / 2E"))
}

fn angular_kernel_bound_audit(_: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let cfg = crate::demos::demo("radial-pinch").expect("radial-pinch demo");
    let mut fb = cfg.flow.clone();
    fb.t_end = 0.01;
    let fc = fb.flow_config().map_err(e2s)?;
    let u0 = crate::initial::build_initial(fc.grid().map_err(e2s)?, &fb.target.spec(), &fb.initial, cfg.seed)
        .map_err(e2s)?;
    let tr = run(&fc, &u0).map_err(e2s)?;
    let st = &tr.final_state;
    let u = st.u.with_grid(Arc::new(st.u.grid().with_ell(st.ell).map_err(e2s)?)).map_err(e2s)?;
    let c1 = snapshot_c1(&u, 1.0, 4).map_err(e2s)?;
    let audit = angular_bound_audit(&u, c1, 1.0, 0.3, 201).map_err(e2s)?;
    if audit.kernel_checked == 0 {
        return Ok(Outcome::failed("no admissible kernel nodes"));
    }
    Ok(Outcome::le(
        audit.kernel_violations as f64,
        0.0,
        format!("C1 = {c1:.4e}, fitted C = {:.4e}, {} nodes checked", audit.fitted_c, audit.kernel_checked),
    ))
}

// ---- Weil–Petersson ----

fn wp_upper_bound(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let ell = rng.gen_range(0.005..1.5);
        let d = integrate_to_pinch(ell, 1e-12).map_err(e2s)?.distance;
        worst = worst.max(d / leading_distance(ell));
    }
    Ok(Outcome::le(worst, 1.0, "max dist / (2 pi l)^(1/2)"))
}

fn wp_monotone_distance(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let mut ells: Vec<f64> = (0..12).map(|_| rng.gen_range(0.005..1.5)).collect();
    ells.sort_by(f64::total_cmp);
    let d: Vec<f64> = ells.iter().map(|&l| integrate_to_pinch(l, 1e-12).map(|p| p.distance)).collect::<Result<_, _>>().map_err(e2s)?;
    let min_gap = d.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(Outcome { pass: min_gap > 0.0, measured: min_gap, tolerance: 0.0, note: "min increment of dist over sorted l0".into() })
}

fn wp_integrator_order(rng: &mut ChaCha8Rng, _: &Hooks) -> Result<Outcome, String> {
    let ell0 = rng.gen_range(0.05..1.0);
    let exact = fixed_step_distance(ell0 / 2.0, ell0, 256).map_err(e2s)?;
    let e1 = (fixed_step_distance(ell0 / 2.0, ell0, 2).map_err(e2s)? - exact).abs();
    let e2 = (fixed_step_distance(ell0 / 2.0, ell0, 4).map_err(e2s)? - exact).abs();
    Ok(Outcome::ge((e1 / e2).log2(), 4.0, format!("step-halving order on [{:.4}, {ell0:.4}]", ell0 / 2.0)))
}
