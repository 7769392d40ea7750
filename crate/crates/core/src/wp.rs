//! Weil–Petersson pinching of a single collar along the direction `dz²`.
//!
//! Moving the metric by `Re(dz²)` changes the length at rate `dℓ/dt = −2π²/ℓ`
//! while the WP speed is `¼‖dz²‖_{L²}`, so `dℓ/ds = −(8π²/ℓ)/‖dz²‖`. With
//! `m = ℓ^{1/2}` the arc length satisfies
//!
//! ```text
//! ds/dm = (ℓ³‖dz²‖²)^{1/2} / 4π²,
//! ```
//!
//! which is smooth up to `m = 0` and tends to `(2π)^{1/2}` there.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{dz2_norms, scaled_dz2_l2_sq, CollarParams};
use crate::math::{sq, PI, TAU};
use crate::ode::{integrate_adaptive, integrate_fixed, Tolerance};

/// `dℓ/ds` along the pinching path, from the exact `‖dz²‖²_{L²}`.
pub fn pinch_speed(ell: f64) -> Result<f64> {
    let n = dz2_norms(ell)?;
    Ok(-(8.0 * PI * PI / ell) / libm::sqrt(n.l2_sq))
}

/// `ds/dm` with `m = ℓ^{1/2}`.
pub fn arc_length_rate(m: f64) -> f64 {
    libm::sqrt(scaled_dz2_l2_sq(m * m)) / (4.0 * PI * PI)
}

/// Leading-order distance `(2πℓ)^{1/2}`.
pub fn leading_distance(ell: f64) -> f64 {
    libm::sqrt(TAU * ell)
}

/// Samples `(arc length from the start, ℓ)` along the path and the total
/// distance to the pinch `ℓ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WpPath {
    pub samples: Vec<(f64, f64)>,
    pub distance: f64,
}

/// Integrates from `ℓ₀` down to `ℓ = 0` adaptively in `m = ℓ^{1/2}`; the
/// distance is accurate to roughly `tol` (absolute).
pub fn integrate_to_pinch(ell0: f64, tol: f64) -> Result<WpPath> {
    CollarParams::new(ell0)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain { what: "tol", value: tol });
    }
    let m0 = libm::sqrt(ell0);
    let t = Tolerance { rtol: (tol * 1e-2).max(1e-15), atol: (tol * 1e-2).max(1e-300) };
    // s(m) measured from the pinch; integrate outward then reverse.
    let sol = integrate_adaptive(|m, _| arc_length_rate(m), 0.0, m0, 0.0, t)?;
    let distance = sol.last();
    let samples = sol
        .xs
        .iter()
        .zip(&sol.ys)
        .rev()
        .map(|(&m, &s)| (distance - s, sq(m)))
        .collect();
    Ok(WpPath { samples, distance })
}

/// Arc length between `ℓ_lo` and `ℓ_hi` with `n` fixed steps in `m`.
pub fn fixed_step_distance(ell_lo: f64, ell_hi: f64, n: usize) -> Result<f64> {
    if !(ell_lo >= 0.0 && ell_lo < ell_hi) {
        return Err(Error::Domain { what: "ell_lo", value: ell_lo });
    }
    CollarParams::new(ell_hi)?;
    integrate_fixed(|m, _| arc_length_rate(m), libm::sqrt(ell_lo), libm::sqrt(ell_hi), 0.0, n)
}

/// Least-squares fit of `1 − dist/(2πℓ)^{1/2} = cℓ³ + eℓ⁵`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionFit {
    pub c: f64,
    pub e: f64,
    /// Condition number of the column-normalised normal matrix.
    pub condition: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

const MAX_CONDITION: f64 = 1e10;

pub fn correction_fit(ells: &[f64], dists: &[f64]) -> Result<CorrectionFit> {
    if ells.len() != dists.len() {
        return Err(Error::Shape { expected: ells.len(), found: dists.len() });
    }
    if ells.len() < 3 {
        return Err(Error::Config("need at least three lengths"));
    }
    let d: Vec<f64> = ells.iter().zip(dists).map(|(&l, &x)| 1.0 - x / leading_distance(l)).collect();
    let c3: Vec<f64> = ells.iter().map(|l| l * l * l).collect();
    let c5: Vec<f64> = ells.iter().map(|l| l * l * l * l * l).collect();
    let n3 = libm::sqrt(c3.iter().map(|x| x * x).sum::<f64>());
    let n5 = libm::sqrt(c5.iter().map(|x| x * x).sum::<f64>());
    let a: Vec<f64> = c3.iter().map(|x| x / n3).collect();
    let b: Vec<f64> = c5.iter().map(|x| x / n5).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
    let (ad, bd) = (dot(&a, &d), dot(&b, &d));
    let tr = aa + bb;
    let det = aa * bb - ab * ab;
    let disc = libm::sqrt((sq(tr) / 4.0 - det).max(0.0));
    let (lmax, lmin) = (tr / 2.0 + disc, tr / 2.0 - disc);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let ca = (bb * ad - ab * bd) / det;
    let cb = (aa * bd - ab * ad) / det;
    let (c, e) = (ca / n3, cb / n5);
    let rss: f64 = (0..d.len()).map(|i| sq(d[i] - c * c3[i] - e * c5[i])).sum();
    Ok(CorrectionFit { c, e, condition, rms_residual: libm::sqrt(rss / d.len() as f64) })
}

/// Fits the `ℓ³` correction from integrated distances at each `ℓ`.
pub fn correction_coefficient(ells: &[f64]) -> Result<CorrectionFit> {
    let dists = ells
        .iter()
        .map(|&l| integrate_to_pinch(l, 1e-15).map(|p| p.distance))
        .collect::<Result<Vec<_>>>()?;
    correction_fit(ells, &dists)
}

/// `1/(84π)`.
pub const CORRECTION_COEFFICIENT: f64 = 1.0 / (84.0 * PI);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_is_negative() {
        for k in 1..50 {
            let ell = 1.7 * k as f64 / 50.0;
            assert!(pinch_speed(ell).unwrap() < 0.0);
        }
    }

    #[test]
    fn rate_at_pinch() {
        assert!((arc_length_rate(0.0) - libm::sqrt(TAU)).abs() < 1e-14);
    }

    #[test]
    fn path_is_monotone() {
        let p = integrate_to_pinch(0.1, 1e-12).unwrap();
        assert_eq!(p.samples[0], (0.0, 0.1));
        let last = *p.samples.last().unwrap();
        assert!((last.0 - p.distance).abs() < 1e-15 && last.1 == 0.0);
        for w in p.samples.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 < w[0].1);
        }
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let ells = [0.02, 0.05, 0.1, 0.15];
        let dists: Vec<f64> = ells.iter().map(|&l| leading_distance(l)).collect();
        let f = correction_fit(&ells, &dists).unwrap();
        assert!(f.c.abs() < 1e-12 && f.e.abs() < 1e-10);
        let dists: Vec<f64> = ells
            .iter()
            .map(|&l: &f64| leading_distance(l) * (1.0 - 0.01 * l.powi(3) + 0.2 * l.powi(5)))
            .collect();
        let f = correction_fit(&ells, &dists).unwrap();
        assert!((f.c - 0.01).abs() < 1e-10 && (f.e + 0.2).abs() < 1e-7, "{f:?}");
    }

    #[test]
    fn degenerate_fit_rejected() {
        let ells = [0.05, 0.05, 0.05];
        let dists = [0.5, 0.5, 0.5];
        assert!(matches!(correction_fit(&ells, &dists), Err(Error::IllConditioned { .. })));
    }
}
