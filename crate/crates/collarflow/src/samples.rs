//! Random smooth test fields.

use std::f64::consts::TAU;
use std::sync::Arc;

use collarflow_core::fields::{MapField, TargetSpec};
use collarflow_core::geometry::CollarGrid;
use collarflow_core::quad_diff::{FourierQD, QuadDiffField};
use collarflow_core::Complex64;
use rand::Rng;

/// A map into `R^d` (flat, no periods): random linear part in `s` plus a few
/// θ-harmonics with Gaussian envelopes of width comparable to `s_max`.
pub fn random_flat_map(rng: &mut impl Rng, grid: Arc<CollarGrid>, d: usize, amplitude: f64) -> MapField {
    let s_max = grid.s_max();
    let mut terms = Vec::new();
    for a in 0..d {
        for _ in 0..3 {
            terms.push((
                a,
                amplitude * rng.gen_range(-1.0..1.0),
                rng.gen_range(1..=3) as f64,
                rng.gen_range(0.0..TAU),
                rng.gen_range(-0.5..0.5) * s_max,
                rng.gen_range(0.2..0.6) * s_max,
            ));
        }
    }
    let slopes: Vec<f64> = (0..d).map(|_| amplitude * rng.gen_range(-1.0..1.0) / s_max).collect();
    let target = TargetSpec::flat_torus(vec![None; d]);
    MapField::from_fn(grid, target, vec![0.0; d], move |s, th| {
        let mut v: Vec<f64> = slopes.iter().map(|k| k * s).collect();
        for &(a, amp, m, ph, c, w) in &terms {
            v[a] += amp * (m * th + ph).cos() * (-((s - c) / w).powi(2)).exp();
        }
        v
    })
    .expect("finite flat map")
}

/// A sphere map near the equator wrap.
pub fn random_sphere_map(rng: &mut impl Rng, grid: Arc<CollarGrid>, amplitude: f64) -> MapField {
    let s_max = grid.s_max();
    let a = amplitude * rng.gen_range(-1.0..1.0);
    let b = amplitude * rng.gen_range(-1.0..1.0);
    let ph = rng.gen_range(0.0..TAU);
    let w = rng.gen_range(0.2..0.6) * s_max;
    MapField::from_fn(grid, TargetSpec::round_sphere(3), vec![0.0; 3], move |s, th| {
        let env = (-(s / w).powi(2)).exp();
        let v = [th.cos(), th.sin() + b * env * (2.0 * th).sin(), a * env * (th + ph).cos()];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        vec![v[0] / n, v[1] / n, v[2] / n]
    })
    .expect("unit sphere map")
}

/// Random scaled modal coefficients for `1 ≤ |n| ≤ n_max` (no zero mode).
pub fn random_decay_modes(rng: &mut impl Rng, n_max: usize, s_ref: f64) -> FourierQD {
    let mut c = FourierQD::zeros(n_max, s_ref);
    for n in 1..=n_max as i64 {
        for sgn in [1, -1] {
            c.set_scaled(sgn * n, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    c
}

/// Non-holomorphic random differential: smooth modes plus node noise.
pub fn random_qd(rng: &mut impl Rng, grid: Arc<CollarGrid>) -> QuadDiffField {
    let s_max = grid.s_max();
    let b0 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let c1 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let w = rng.gen_range(0.2..0.8) * s_max;
    let psi: Vec<Complex64> = grid
        .s_nodes()
        .iter()
        .flat_map(|&s| grid.theta_nodes().iter().map(move |&t| (s, t)))
        .map(|(s, t)| {
            let noise = Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            b0 + c1 * Complex64::from_polar((-(s / w).powi(2)).exp(), 2.0 * t) + noise
        })
        .collect();
    QuadDiffField::new(grid, psi).expect("finite")
}
