//! Rejection-sampled trials of the delay-operator comparison principle.
//!
//! A trial draws `f̃` and a difference `D = c + εS` (both natural cubic
//! splines through random knots), keeps the pair only if the hypotheses hold
//! exactly on the grid, and then checks the conclusion `f ≥ f̃`.

use collarflow_core::angular::{comparison_check, comparison_hypotheses, ProfileFn};
use rand::Rng;
use serde::Serialize;

use crate::error::CliError;

/// Natural cubic spline through equally spaced knots on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    lo: f64,
    step: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(lo: f64, hi: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2 && hi > lo);
        let step = (hi - lo) / (n - 1) as f64;
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for M_{k−1} + 4M_k + M_{k+1} = 6Δ²y_k / step².
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (step * step);
                let denom = if i == 0 { 4.0 } else { 4.0 - c[i - 1] };
                c[i] = 1.0 / denom;
                d[i] = if i == 0 { rhs / denom } else { (rhs - d[i - 1]) / denom };
            }
            m[k] = d[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = d[i] - c[i] * m[i + 2];
            }
        }
        Self { lo, step, y, m }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = ((x - self.lo) / self.step).clamp(0.0, (n - 1) as f64);
        let k = (t.floor() as usize).min(n - 2);
        let a = t - k as f64;
        let b = 1.0 - a;
        let h2 = self.step * self.step;
        b * self.y[k]
            + a * self.y[k + 1]
            + ((b * b * b - b) * self.m[k] + (a * a * a - a) * self.m[k + 1]) * h2 / 6.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialSettings {
    /// Nodes per delay `½`.
    pub m: usize,
    pub min_half_nodes: usize,
    pub max_half_nodes: usize,
    pub accepted_target: usize,
    pub max_attempts: usize,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self { m: 4, min_half_nodes: 8, max_half_nodes: 48, accepted_target: 10_000, max_attempts: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub attempted: usize,
    pub accepted: usize,
    pub violations: usize,
    /// Accepted pairs whose difference dips below its band minimum somewhere.
    pub nontrivial: usize,
    /// Smallest `min(f − f̃)` over accepted pairs.
    pub min_difference: f64,
}

fn random_spline(rng: &mut impl Rng, lo: f64, hi: f64) -> NaturalSpline {
    let knots = rng.gen_range(3..=9);
    let y = (0..knots).map(|_| rng.gen_range(-1.0..1.0)).collect();
    NaturalSpline::new(lo, hi, y)
}

pub fn comparison_trials(rng: &mut impl Rng, s: TrialSettings) -> Result<TrialReport, CliError> {
    let h = 0.5 / s.m as f64;
    let mut rep = TrialReport { attempted: 0, accepted: 0, violations: 0, nontrivial: 0, min_difference: f64::INFINITY };
    while rep.accepted < s.accepted_target {
        if rep.attempted >= s.max_attempts {
            return Err(CliError::invalid(format!(
                "only {} of {} trials accepted after {} attempts",
                rep.accepted, s.accepted_target, rep.attempted
            )));
        }
        rep.attempted += 1;
        let k = rng.gen_range(s.min_half_nodes..=s.max_half_nodes);
        let x_delta = k as f64 * h;
        let n = 2 * k + 1;
        let base = random_spline(rng, -x_delta, x_delta);
        let shape = random_spline(rng, -x_delta, x_delta);
        let c = rng.gen_range(0.0..1.0);
        let eps = 10f64.powf(rng.gen_range(-3.0..0.5));
        let ft = ProfileFn::from_fn(-x_delta, x_delta, n, |x| base.eval(x))?;
        let f = ProfileFn::from_fn(-x_delta, x_delta, n, |x| base.eval(x) + c + eps * shape.eval(x))?;
        if !comparison_hypotheses(&f, &ft)? {
            continue;
        }
        rep.accepted += 1;
        if !comparison_check(&f, &ft, x_delta)? {
            rep.violations += 1;
        }
        let d: Vec<f64> = f.values().iter().zip(ft.values()).map(|(a, b)| a - b).collect();
        let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        let bands = d[..=s.m].iter().chain(&d[n - 1 - s.m..]).copied().fold(f64::INFINITY, f64::min);
        if dmin < bands {
            rep.nontrivial += 1;
        }
        rep.min_difference = rep.min_difference.min(dmin);
    }
    Ok(rep)
}
