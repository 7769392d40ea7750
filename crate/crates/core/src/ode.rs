//! Scalar Dormand–Prince 5(4) integrator: adaptive with local extrapolation,
//! or with a fixed number of equal steps.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Accepted steps of an integration, including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub rejected: usize,
}

impl OdeSolution {
    pub fn last(&self) -> f64 {
        *self.ys.last().expect("solution has at least the initial point")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// One step; returns the fifth-order value and the embedded error estimate.
fn dp_step(f: &impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> (f64, f64) {
    let mut k = [0.0; 7];
    for s in 0..7 {
        let yi = y + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        k[s] = f(x + C[s] * h, yi);
    }
    let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
    let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
    (y5, y5 - y4)
}

/// `n` equal steps from `x0` to `x1`.
pub fn integrate_fixed(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("at least one step"));
    }
    let h = (x1 - x0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = dp_step(&f, x0 + i as f64 * h, y, h).0;
    }
    if !y.is_finite() {
        return Err(Error::NonFinite { what: "ode solution" });
    }
    Ok(y)
}

/// Adaptive integration from `x0` to `x1` with the standard error-per-step
/// controller.
pub fn integrate_adaptive(
    f: impl Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    tol: Tolerance,
) -> Result<OdeSolution> {
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::Config("tolerances must be positive"));
    }
    let span = x1 - x0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut xs = alloc::vec![x0];
    let mut ys = alloc::vec![y0];
    let mut rejected = 0;
    let (mut x, mut y) = (x0, y0);
    let mut h = dir * span.abs().min(1.0) * 1e-2 * libm::pow(tol.rtol, 0.2).max(1e-3);
    let h_min = span.abs() * 1e-14;
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let (y_new, err) = dp_step(&f, x, y, h);
        let scale = tol.atol + tol.rtol * y.abs().max(y_new.abs());
        let e = (err / scale).abs();
        if !y_new.is_finite() || !e.is_finite() {
            return Err(Error::NonFinite { what: "ode solution" });
        }
        if e <= 1.0 {
            x = if (x + h - x1) * dir >= 0.0 { x1 } else { x + h };
            y = y_new;
            xs.push(x);
            ys.push(y);
        } else {
            rejected += 1;
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * libm::pow(e, -0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        if h.abs() < h_min || steps > 1_000_000 {
            return Err(Error::Config("step size underflow"));
        }
    }
    Ok(OdeSolution { xs, ys, rejected })
}
