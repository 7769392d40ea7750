//! Collar model of the coupled map/metric flow.
//!
//! The map follows the harmonic map heat flow `∂_t u = τ_g(u)` and the collar
//! length follows the principal part of `(η²/4)Φ(u, g)`:
//!
//! ```text
//! dℓ/dt = −(2π²/ℓ) · (η²/4) · Re b₀,    b₀ = ⟨Φ(u,g), dz²⟩ / ‖dz²‖²_{L²(C(ℓ))}.
//! ```
//!
//! The coordinate domain `(−X(ℓ_max), X(ℓ_max)) × S¹` stays fixed while `ℓ`
//! moves; the two boundary rows carry Dirichlet data. The map part uses a
//! variational discretisation so that, for `ℓ` frozen or not, the semi-discrete
//! flow satisfies `dE/dt = −‖τ_g(u)‖²_{L²(dv_g)}` exactly.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{
    discrete_energy, discrete_tension, discrete_tension_l2_sq, energies_from_jet, jet, Cutoff,
    MapField, MapJet,
};
use crate::geometry::{dz2_norms, half_length, CollarGrid, CollarParams, ELL_LIMIT};
use crate::math::{csum, sq, PI};
use crate::quad_diff::{hopf_differential, inner_product, QuadDiffField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    ExplicitEuler,
    Rk2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub eta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_s: usize,
    pub n_theta: usize,
    pub ell0: f64,
    pub ell_max: f64,
    pub ell_floor: f64,
    pub stepper: Stepper,
    /// Keep `ℓ` fixed (map-only flow).
    pub freeze_ell: bool,
    /// Record a trace row every `stride` steps (and at the end).
    pub stride: usize,
    /// Halt when `max e(u, g)` exceeds this.
    pub blowup_threshold: f64,
    /// Fraction of the parabolic step limit that `dt` may use.
    pub stability_safety: f64,
}

impl FlowConfig {
    pub fn new(ell0: f64, dt: f64, t_end: f64, n_s: usize, n_theta: usize) -> Self {
        Self {
            eta: 1.0,
            dt,
            t_end,
            n_s,
            n_theta,
            ell0,
            ell_max: ell0,
            ell_floor: 1e-3,
            stepper: Stepper::ExplicitEuler,
            freeze_ell: false,
            stride: 1,
            blowup_threshold: 1e8,
            stability_safety: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |what, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain { what, value: v })
            }
        };
        pos("eta", self.eta)?;
        pos("dt", self.dt)?;
        pos("t_end", self.t_end)?;
        pos("ell_floor", self.ell_floor)?;
        pos("blowup_threshold", self.blowup_threshold)?;
        pos("stability_safety", self.stability_safety)?;
        if !(self.ell0 > 0.0 && self.ell0 <= self.ell_max && self.ell_max < ELL_LIMIT) {
            return Err(Error::Config("need 0 < ell0 <= ell_max < 2 arsinh(1)"));
        }
        if self.ell_floor >= self.ell0 {
            return Err(Error::Config("ell_floor must lie below ell0"));
        }
        if self.n_s < 4 || self.n_theta < 4 {
            return Err(Error::GridTooSmall { n_s: self.n_s, n_theta: self.n_theta });
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive"));
        }
        Ok(())
    }

    /// Grid on `(−X(ℓ_max), X(ℓ_max))` with the metric of `ℓ₀`.
    pub fn grid(&self) -> Result<Arc<CollarGrid>> {
        self.validate()?;
        let params = CollarParams::new(self.ell0)?;
        Ok(Arc::new(CollarGrid::new(params, half_length(self.ell_max)?, self.n_s, self.n_theta)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: MapField,
    pub ell: f64,
    pub t: f64,
}

impl FlowState {
    pub fn new(u: MapField, t: f64) -> Self {
        let ell = u.grid().ell();
        Self { u, ell, t }
    }
}

/// `b₀ = ⟨Φ(u,g), dz²⟩ / ‖dz²‖²_{L²(C(ℓ))}`; the pairing is a quadrature over
/// the grid, the norm is the closed form on the whole collar.
pub fn principal_coefficient(u: &MapField) -> Result<Complex64> {
    let j = jet(u)?;
    Ok(principal_coefficient_from_jet(&j))
}

fn principal_coefficient_from_jet(j: &MapJet) -> Complex64 {
    let grid = j.grid().clone();
    let phi = hopf_differential(j);
    let pair = inner_product(&phi, &QuadDiffField::dz2(grid.clone())).expect("same grid");
    let l2 = dz2_norms(grid.ell()).expect("grid ell is valid").l2_sq;
    pair / l2
}

fn speed_from_b0(ell: f64, eta: f64, b0: Complex64) -> f64 {
    -(2.0 * PI * PI / ell) * (sq(eta) / 4.0) * b0.re
}

/// `dℓ/dt = −(2π²/ℓ)(η²/4) Re b₀`.
pub fn metric_speed(state: &FlowState, eta: f64) -> Result<f64> {
    let u = at_ell(&state.u, state.ell)?;
    Ok(speed_from_b0(state.ell, eta, principal_coefficient(&u)?))
}

/// `−(η²ℓ²/16π³) ∫(|u_s|² − |u_θ|²) ρ⁻² ds dθ`, evaluated directly from the
/// jet. Agrees with [`metric_speed`] after rescaling by `ℓ³‖dz²‖²/32π⁵`.
pub fn weighted_energy_speed(state: &FlowState, eta: f64) -> Result<f64> {
    let u = at_ell(&state.u, state.ell)?;
    let j = jet(&u)?;
    let g = u.grid();
    let (nt, d) = (g.n_theta(), u.dim());
    let integral = csum((0..g.n_s()).map(|i| {
        let r = i * nt * d..(i + 1) * nt * d;
        let us = csum(j.u_s()[r.clone()].iter().map(|x| x * x));
        let ut = csum(j.u_theta()[r].iter().map(|x| x * x));
        g.weight(i) / sq(g.rho()[i]) * (us - ut)
    }));
    let ell = state.ell;
    Ok(-(sq(eta) * sq(ell) / (16.0 * PI * PI * PI)) * integral)
}

fn at_ell(u: &MapField, ell: f64) -> Result<MapField> {
    if u.grid().ell() == ell {
        Ok(u.clone())
    } else {
        u.with_grid(Arc::new(u.grid().with_ell(ell)?))
    }
}

fn check_ell(ell: f64, cfg: &FlowConfig) -> Result<()> {
    if !ell.is_finite() {
        Err(Error::NonFinite { what: "ell" })
    } else if ell <= cfg.ell_floor {
        Err(Error::Pinched { ell })
    } else if ell > cfg.ell_max {
        Err(Error::AboveEllMax { ell })
    } else {
        Ok(())
    }
}

/// Right-hand side of the flow at a state: discrete `τ_g(u)` and `dℓ/dt`.
fn rhs(u: &MapField, cfg: &FlowConfig) -> Result<(Vec<f64>, f64)> {
    let tau = discrete_tension(u)?;
    let v = if cfg.freeze_ell {
        0.0
    } else {
        speed_from_b0(u.grid().ell(), cfg.eta, principal_coefficient(u)?)
    };
    Ok((tau, v))
}

fn advance(u: &MapField, h: f64, tau: &[f64], ell_new: f64) -> Result<MapField> {
    let moved = u.advanced(h, tau, true)?;
    at_ell(&moved, ell_new)
}

/// One step of size `h`.
pub fn step_by(state: &FlowState, cfg: &FlowConfig, h: f64) -> Result<FlowState> {
    let u = at_ell(&state.u, state.ell)?;
    let (tau1, v1) = rhs(&u, cfg)?;
    let (u_new, ell_new) = match cfg.stepper {
        Stepper::ExplicitEuler => {
            let ell = state.ell + h * v1;
            check_ell(ell, cfg)?;
            (advance(&u, h, &tau1, ell)?, ell)
        }
        Stepper::Rk2 => {
            let ell_p = state.ell + h * v1;
            check_ell(ell_p, cfg)?;
            let u_p = advance(&u, h, &tau1, ell_p)?;
            let (tau2, v2) = rhs(&u_p, cfg)?;
            let ell = state.ell + 0.5 * h * (v1 + v2);
            check_ell(ell, cfg)?;
            let avg: Vec<f64> = tau1.iter().zip(&tau2).map(|(a, b)| 0.5 * (a + b)).collect();
            (advance(&u, h, &avg, ell)?, ell)
        }
    };
    Ok(FlowState { u: u_new, ell: ell_new, t: state.t + h })
}

/// One step of size `cfg.dt`.
pub fn step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    step_by(state, cfg, cfg.dt)
}

/// Terminal status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Pinched,
    EllMaxExceeded,
    BlowUpDetected,
    /// `ℓ` shrank until `dt` exceeded the explicit stability limit.
    StabilityLimit,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Pinched => "pinched",
            RunStatus::EllMaxExceeded => "ell-max-exceeded",
            RunStatus::BlowUpDetected => "blow-up-detected",
            RunStatus::StabilityLimit => "stability-limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub ell: f64,
    /// Discrete Dirichlet energy (the quantity the flow dissipates).
    pub energy: f64,
    pub i_weighted: f64,
    pub i_theta: f64,
    pub i_smooth: f64,
    /// `‖τ_g(u)‖_{L²(dv_g)}` of the discrete tension.
    pub tension_l2: f64,
    pub re_b0: f64,
    pub im_b0: f64,
    /// `(E_{n+1} − E_n)/Δt + ‖τ_g(u_n)‖²` for the step following this row.
    pub de_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub steps: usize,
    pub final_state: FlowState,
}

struct Diagnostics {
    row: TraceRow,
    sup_density: f64,
    tension_sq: f64,
}

fn diagnostics(state: &FlowState) -> Result<Diagnostics> {
    let u = at_ell(&state.u, state.ell)?;
    let j = jet(&u)?;
    let rep = energies_from_jet(&j, Cutoff::default());
    let b0 = principal_coefficient_from_jet(&j);
    let tau = discrete_tension(&u)?;
    let tension_sq = discrete_tension_l2_sq(&u, &tau);
    let row = TraceRow {
        t: state.t,
        ell: state.ell,
        energy: discrete_energy(&u),
        i_weighted: rep.weighted,
        i_theta: rep.i_theta,
        i_smooth: rep.i_smooth,
        tension_l2: libm::sqrt(tension_sq),
        re_b0: b0.re,
        im_b0: b0.im,
        de_residual: f64::NAN,
    };
    let all_finite = [row.energy, row.i_weighted, row.i_smooth, row.tension_l2, b0.re, b0.im]
        .iter()
        .all(|x| x.is_finite());
    if !all_finite {
        return Err(Error::NonFinite { what: "diagnostics" });
    }
    Ok(Diagnostics { row, sup_density: rep.sup_density, tension_sq })
}

fn status_of(e: &Error) -> Option<RunStatus> {
    match e {
        Error::Pinched { .. } => Some(RunStatus::Pinched),
        Error::AboveEllMax { .. } => Some(RunStatus::EllMaxExceeded),
        _ => None,
    }
}

/// Runs the flow from `initial` (which must live on [`FlowConfig::grid`]).
pub fn run(cfg: &FlowConfig, initial: &MapField) -> Result<FlowTrace> {
    cfg.validate()?;
    let g = initial.grid();
    let expected = cfg.grid()?;
    if !(g.n_s() == cfg.n_s && g.n_theta() == cfg.n_theta && g.same_nodes(&expected)) {
        return Err(Error::GridMismatch);
    }
    let mut state = FlowState::new(initial.clone(), 0.0);
    let n_steps = libm::ceil(cfg.t_end / cfg.dt * (1.0 - 1e-12)) as usize;
    let mut rows = Vec::new();
    let mut status = RunStatus::Completed;
    let mut steps = 0;
    let wrap = |step: usize, e: Error| Error::AtStep { step, cause: alloc::boxed::Box::new(e) };
    let mut diag = diagnostics(&state).map_err(|e| wrap(0, e))?;
    loop {
        if diag.sup_density > cfg.blowup_threshold {
            status = RunStatus::BlowUpDetected;
        }
        let limit = cfg.stability_safety * state.u.grid().with_ell(state.ell).map_err(|e| wrap(steps, e))?.parabolic_dt_limit();
        let finished = steps >= n_steps || status != RunStatus::Completed;
        let h = if finished { cfg.dt } else { (cfg.t_end - state.t).min(cfg.dt) };
        if !finished && h > limit {
            status = RunStatus::StabilityLimit;
        }
        let record = steps % cfg.stride == 0 || finished || status != RunStatus::Completed;
        let next = if status == RunStatus::Completed && !finished {
            match step_by(&state, cfg, h) {
                Ok(s) => Some(s),
                Err(e) => match status_of(&e) {
                    Some(st) => {
                        status = st;
                        None
                    }
                    None => return Err(wrap(steps, e)),
                },
            }
        } else {
            None
        };
        let next_diag = match &next {
            Some(s) => Some(diagnostics(s).map_err(|e| wrap(steps + 1, e))?),
            None => None,
        };
        if record {
            let mut row = diag.row;
            row.de_residual = match &next_diag {
                Some(nd) => (nd.row.energy - row.energy) / h + diag.tension_sq,
                // Probe step for the final row.
                None => match step_by(&state, cfg, cfg.dt.min(limit)) {
                    Ok(p) => {
                        let e = discrete_energy(&at_ell(&p.u, p.ell)?);
                        (e - row.energy) / (p.t - state.t) + diag.tension_sq
                    }
                    Err(_) => f64::NAN,
                },
            };
            rows.push(row);
        }
        match (next, next_diag) {
            (Some(s), Some(nd)) => {
                state = s;
                diag = nd;
                steps += 1;
            }
            _ => break,
        }
    }
    Ok(FlowTrace { rows, status, steps, final_state: state })
}

/// `ΔE/Δt + ‖τ_g(u)‖²` between consecutive rows (length `rows − 1`).
pub fn energy_identity_residual(trace: &FlowTrace) -> Vec<f64> {
    trace
        .rows
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / (w[1].t - w[0].t) + sq(w[0].tension_l2))
        .collect()
}

/// Smallest constants with `|d log ℓ/dt| ≤ C₁ ℓ (I + E₀)` and
/// `|d log(1 + 𝓘)/dt| ≤ C₂ (1 + ‖τ‖²)` row-wise (forward differences).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
}

pub fn dlogell_bound_check(trace: &FlowTrace, e0: f64) -> BoundConstants {
    let ratio = |num: f64, den: f64| -> f64 {
        if num == 0.0 {
            0.0
        } else if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    };
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for w in trace.rows.windows(2) {
        let dt = w[1].t - w[0].t;
        let dlogl = (libm::log(w[1].ell) - libm::log(w[0].ell)).abs() / dt;
        c1 = c1.max(ratio(dlogl, w[0].ell * (w[0].i_weighted + e0)));
        let dlogi = (libm::log1p(w[1].i_smooth) - libm::log1p(w[0].i_smooth)).abs() / dt;
        c2 = c2.max(ratio(dlogi, 1.0 + sq(w[0].tension_l2)));
    }
    BoundConstants { c1, c2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TargetSpec;
    use crate::math::TAU;
    use std::vec;

    fn cfg(ell: f64, dt: f64, t_end: f64) -> FlowConfig {
        FlowConfig::new(ell, dt, t_end, 16, 8)
    }

    #[test]
    fn constant_map_is_fixed() {
        let c = cfg(0.5, 1e-3, 1e-2);
        let u = MapField::constant(c.grid().unwrap(), TargetSpec::flat_torus(vec![None]), &[0.3]).unwrap();
        let tr = run(&c, &u).unwrap();
        assert_eq!(tr.status, RunStatus::Completed);
        assert_eq!(tr.rows.len(), 11);
        for r in &tr.rows {
            assert_eq!(r.energy, 0.0);
            assert_eq!(r.ell, 0.5);
        }
        assert_eq!(
            dlogell_bound_check(&tr, 0.0),
            BoundConstants { c1: 0.0, c2: 0.0 }
        );
    }

    #[test]
    fn wrap_map_speed_sign_and_value() {
        let (ell, a, eta) = (0.4, 0.8, 1.3);
        let p = CollarParams::new(ell).unwrap();
        let g = Arc::new(CollarGrid::full_collar(p, 3000, 8).unwrap());
        let t = TargetSpec::flat_torus(vec![Some(TAU * a), None]);
        let u = MapField::from_fn(g.clone(), t.clone(), vec![TAU * a, 0.0], |_, th| vec![a * th, 0.0])
            .unwrap();
        let v = metric_speed(&FlowState::new(u, 0.0), eta).unwrap();
        let expect = PI * PI * sq(eta) * sq(a) / (2.0 * ell);
        assert!(v > 0.0 && (v / expect - 1.0).abs() < 1e-5, "{v} vs {expect}");
        let u = MapField::from_fn(g, TargetSpec::flat_torus(vec![None, None]), vec![0.0, 0.0], |s, _| {
            vec![a * s, 0.0]
        })
        .unwrap();
        let v = metric_speed(&FlowState::new(u, 0.0), eta).unwrap();
        assert!(v < 0.0 && (v / expect + 1.0).abs() < 1e-5);
    }

    #[test]
    fn boundary_rows_do_not_move() {
        let mut c = cfg(0.5, 2e-4, 2e-3);
        c.freeze_ell = true;
        let u = MapField::from_fn(c.grid().unwrap(), TargetSpec::flat_torus(vec![None]), vec![0.0], |s, t| {
            vec![libm::sin(t + s)]
        })
        .unwrap();
        let tr = run(&c, &u).unwrap();
        assert_eq!(tr.status, RunStatus::Completed, "{tr:?}");
        assert_eq!(tr.steps, 10);
        let (a, b) = (u.values(), tr.final_state.u.values());
        let nt = c.n_theta;
        assert_eq!(&a[..nt], &b[..nt]);
        assert_eq!(&a[a.len() - nt..], &b[b.len() - nt..]);
        assert_ne!(a, b);
    }

    #[test]
    fn pinch_halts_with_status() {
        let mut c = cfg(0.2, 2e-5, 100.0);
        c.ell_floor = 0.1;
        c.n_s = 64;
        let u = MapField::from_fn(c.grid().unwrap(), TargetSpec::flat_torus(vec![None]), vec![0.0], |s, _| {
            vec![0.3 * s]
        })
        .unwrap();
        let tr = run(&c, &u).unwrap();
        assert_eq!(tr.status, RunStatus::Pinched);
        for w in tr.rows.windows(2) {
            assert!(w[1].ell < w[0].ell);
        }
    }

    #[test]
    fn unstable_dt_reports_status() {
        let c = cfg(0.5, 1.0, 10.0);
        let u = MapField::constant(c.grid().unwrap(), TargetSpec::flat_torus(vec![None]), &[0.0]).unwrap();
        assert_eq!(run(&c, &u).unwrap().status, RunStatus::StabilityLimit);
    }
}
