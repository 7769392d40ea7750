//! Angular energy on collars: the delay operator
//! `L f = f″ − (3/2) f + (1/8)(f(s + ½) + f(s − ½))`, its comparison
//! principle, kernel solutions of `f″ − f = −C₁ G`, and an audit of the
//! angular decay bound on a map.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{
    discrete_tension, energies_from_jet, jet, theta_profile_from_rows, theta_rows, Cutoff, MapField,
};
use crate::geometry::CollarGrid;
use crate::math::{csum, sq, NeumaierSum};

/// Samples `values[k] = f(s0 + k·h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFn {
    s0: f64,
    h: f64,
    values: Vec<f64>,
}

impl ProfileFn {
    pub fn new(s0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Spacing { h });
        }
        if values.len() < 3 {
            return Err(Error::Shape { expected: 3, found: values.len() });
        }
        if !s0.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "profile" });
        }
        Ok(Self { s0, h, values })
    }

    /// `n` uniform samples of `f` on `[lo, hi]`, endpoints included.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 3 || !(hi > lo) {
            return Err(Error::Config("need n >= 3 and lo < hi"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|k| f(if k + 1 == n { hi } else { lo + k as f64 * h })).collect();
        Self::new(lo, h, values)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn s(&self, k: usize) -> f64 {
        self.s0 + k as f64 * self.h
    }
    pub fn s_lo(&self) -> f64 {
        self.s0
    }
    pub fn s_hi(&self) -> f64 {
        self.s(self.values.len() - 1)
    }
    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.s(k)).collect()
    }

    fn same_nodes(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.s0 - other.s0).abs() <= 1e-12 * (1.0 + self.s0.abs())
            && (self.h - other.h).abs() <= 1e-12 * self.h
    }

    /// Second central difference at interior node `k`.
    fn d2(&self, k: usize) -> f64 {
        (self.values[k + 1] - 2.0 * self.values[k] + self.values[k - 1]) / sq(self.h)
    }
}

/// Number of nodes in the delay `½`, if it is an exact node offset.
pub fn delay_offset(h: f64) -> Result<usize> {
    let m = 0.5 / h;
    let r = libm::round(m);
    if r >= 1.0 && (m - r).abs() <= 1e-9 * m {
        Ok(r as usize)
    } else {
        Err(Error::Spacing { h })
    }
}

/// `L f` at the nodes `k` with `m ≤ k ≤ n − 1 − m` (and `1 ≤ k ≤ n − 2`).
pub fn delay_operator(f: &ProfileFn) -> Result<ProfileFn> {
    let m = delay_offset(f.h)?;
    let n = f.len();
    let k0 = m.max(1);
    if n < 2 * k0 + 1 {
        return Err(Error::Shape { expected: 2 * k0 + 1, found: n });
    }
    let values = (k0..n - k0)
        .map(|k| f.d2(k) - 1.5 * f.values[k] + 0.125 * (f.values[k + m] + f.values[k - m]))
        .collect();
    ProfileFn::new(f.s(k0), f.h, values)
}

/// Whether `(f, f̃)` satisfies the hypotheses of the comparison principle:
/// `L f ≤ L f̃` at the interior nodes `m < k < n − 1 − m` and `f ≥ f̃` on the
/// boundary bands `k ≤ m`, `k ≥ n − 1 − m`.
pub fn comparison_hypotheses(f: &ProfileFn, f_tilde: &ProfileFn) -> Result<bool> {
    if !f.same_nodes(f_tilde) {
        return Err(Error::GridMismatch);
    }
    let m = delay_offset(f.h)?;
    let n = f.len();
    if n < 2 * m + 3 {
        return Err(Error::Shape { expected: 2 * m + 3, found: n });
    }
    let lf = delay_operator(f)?;
    let lt = delay_operator(f_tilde)?;
    // delay_operator output starts at node m.
    for k in m + 1..n - 1 - m {
        if lf.values[k - m] > lt.values[k - m] {
            return Ok(false);
        }
    }
    let bands = (0..=m).chain(n - 1 - m..n);
    Ok(bands.into_iter().all(|k| f.values[k] >= f_tilde.values[k]))
}

/// Conclusion of the comparison principle, `f ≥ f̃` at every node, for
/// profiles spanning `[−X_δ, X_δ]`. Does not assume the hypotheses.
pub fn comparison_check(f: &ProfileFn, f_tilde: &ProfileFn, x_delta: f64) -> Result<bool> {
    if !f.same_nodes(f_tilde) {
        return Err(Error::GridMismatch);
    }
    let tol = 1e-9 * (1.0 + x_delta.abs());
    if (f.s_lo() + x_delta).abs() > tol || (f.s_hi() - x_delta).abs() > tol {
        return Err(Error::Domain { what: "profile span", value: f.s_hi() });
    }
    Ok(f.values.iter().zip(&f_tilde.values).all(|(a, b)| a >= b))
}

/// `f_{A,B}(s) = A e^{s−X_δ} + B e^{−s−X_δ} + (C₁/2) ∫_{−X_δ}^{X_δ} e^{−|s−q|} G(q) dq`
/// with the integral by composite trapezoid over the nodes of `g`.
pub fn kernel_solution(a: f64, b: f64, c1: f64, g: &ProfileFn, x_delta: f64) -> Result<ProfileFn> {
    if !(c1 >= 0.0) {
        return Err(Error::Domain { what: "C1", value: c1 });
    }
    let n = g.len();
    let h = g.h;
    let e = libm::exp(-h);
    // left[k] = ∫_{s_0}^{s_k} e^{−(s_k − q)} G, right[k] = ∫_{s_k}^{s_end} e^{−(q − s_k)} G
    let mut left = alloc::vec![0.0; n];
    let mut right = alloc::vec![0.0; n];
    for k in 1..n {
        left[k] = e * left[k - 1] + 0.5 * h * (e * g.values[k - 1] + g.values[k]);
    }
    for k in (0..n - 1).rev() {
        right[k] = e * right[k + 1] + 0.5 * h * (e * g.values[k + 1] + g.values[k]);
    }
    let values = (0..n)
        .map(|k| {
            let s = g.s(k);
            a * libm::exp(s - x_delta) + b * libm::exp(-s - x_delta) + 0.5 * c1 * (left[k] + right[k])
        })
        .collect();
    ProfileFn::new(g.s0, h, values)
}

/// `max |f″ − f + C₁ G|` over interior nodes.
pub fn kernel_residual(f: &ProfileFn, c1: f64, g: &ProfileFn) -> Result<f64> {
    if !f.same_nodes(g) {
        return Err(Error::GridMismatch);
    }
    Ok((1..f.len() - 1)
        .map(|k| (f.d2(k) - f.values[k] + c1 * g.values[k]).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Ok,
    /// `X_δ ≤ 0`: the `δ`-thin part is empty.
    Vacuous,
}

impl AuditStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AuditStatus::Ok => "ok",
            AuditStatus::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub s0: f64,
    /// `∫_{s₀−½}^{s₀+½} ∫ |u_θ|² dθ ds`.
    pub lhs: f64,
    /// `C (e^{−(X−|s₀|)} + ∫ e^{−|s−s₀|} G(s) ds)` with the fitted `C`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularAudit {
    pub status: AuditStatus,
    pub rows: Vec<AuditRow>,
    /// Smallest `C` making every row hold.
    pub fitted_c: f64,
    /// `I^(θ) / (1 + ‖τ_g(u)‖²)`.
    pub i_theta_ratio: f64,
    /// Nodes of the kernel check where `Θ > f_{A,B}` with `A = B = 2eE₀`.
    pub kernel_violations: usize,
    pub kernel_checked: usize,
    pub x_delta: f64,
}

/// `G(s) = ρ²(s) ‖τ_g(u)‖²_{L²(C_Λ(s))}` at the grid rows, where `C_Λ(s)` is
/// the subcylinder `[s − Λ, s + Λ] × S¹`.
pub fn tension_window_profile(grid: &CollarGrid, d: usize, tau: &[f64], lambda: f64) -> Vec<f64> {
    let nt = grid.n_theta();
    let density: Vec<f64> = (0..grid.n_s())
        .map(|i| {
            let row = &tau[i * nt * d..(i + 1) * nt * d];
            grid.h_theta() * sq(grid.rho()[i]) * csum(row.iter().map(|x| x * x))
        })
        .collect();
    grid.s_nodes()
        .iter()
        .zip(grid.rho())
        .map(|(&s, &rho)| sq(rho) * grid.window_integral(&density, s - lambda, s + lambda))
        .collect()
}

/// Audits the angular decay bound of `u` at every admissible `s₀`.
///
/// The admissible centres are the grid rows with `|s₀| ≤ X_δ` whose unit
/// window lies inside the grid. The kernel check compares `Θ` with
/// `f_{A,B}` on `n_kernel` uniform points of `[−X_δ, X_δ]`.
pub fn angular_bound_audit(
    u: &MapField,
    c1: f64,
    lambda: f64,
    delta: f64,
    n_kernel: usize,
) -> Result<AngularAudit> {
    let grid = u.grid();
    let params = grid.params();
    let x_delta = params.delta_thin_half_length(delta)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain { what: "Lambda", value: lambda });
    }
    let j = jet(u)?;
    let rep = energies_from_jet(&j, Cutoff::default());
    let tau = discrete_tension(u)?;
    let tension_sq = crate::fields::discrete_tension_l2_sq(u, &tau);
    let i_theta_ratio = rep.i_theta / (1.0 + tension_sq);
    if x_delta <= 0.0 {
        return Ok(AngularAudit {
            status: AuditStatus::Vacuous,
            rows: Vec::new(),
            fitted_c: 0.0,
            i_theta_ratio,
            kernel_violations: 0,
            kernel_checked: 0,
            x_delta,
        });
    }
    let rows_theta = theta_rows(&j);
    let gprof = tension_window_profile(grid, u.dim(), &tau, lambda);
    let x = params.half_length();
    let s_max = grid.s_max();
    let t2_at = |s0: f64| -> f64 {
        let mut acc = NeumaierSum::new();
        for (i, &s) in grid.s_nodes().iter().enumerate() {
            acc.add(grid.s_weights()[i] * libm::exp(-(s - s0).abs()) * gprof[i]);
        }
        acc.value()
    };
    let mut raw = Vec::new();
    for &s0 in grid.s_nodes() {
        if s0.abs() > x_delta || s0.abs() + 0.5 > s_max {
            continue;
        }
        let lhs = grid.window_integral(&rows_theta, s0 - 0.5, s0 + 0.5);
        let base = libm::exp(-(x - s0.abs())) + t2_at(s0);
        raw.push((s0, lhs, base));
    }
    let fitted_c = raw.iter().map(|&(_, l, b)| if l == 0.0 { 0.0 } else { l / b }).fold(0.0, f64::max);
    let rows = raw
        .iter()
        .map(|&(s0, lhs, base)| {
            let rhs = fitted_c * base;
            AuditRow { s0, lhs, rhs, slack: rhs - lhs }
        })
        .collect();

    // Kernel comparison Θ ≤ f_{A,B} with A = B = 2eE₀ and G from the rows.
    let mut kernel_violations = 0;
    let mut kernel_checked = 0;
    if n_kernel >= 3 {
        let g_interp = |s: f64| interp_rows(grid, &gprof, s);
        let gk = ProfileFn::from_fn(-x_delta, x_delta, n_kernel, g_interp)?;
        let ab = 2.0 * core::f64::consts::E * rep.energy;
        let fk = kernel_solution(ab, ab, c1, &gk, x_delta)?;
        for k in 0..fk.len() {
            let s = fk.s(k);
            if s.abs() > s_max - 1.0 {
                continue;
            }
            let theta = theta_profile_from_rows(grid, &rows_theta, s)?;
            kernel_checked += 1;
            if theta > fk.values[k] * (1.0 + 1e-12) {
                kernel_violations += 1;
            }
        }
    }
    Ok(AngularAudit {
        status: AuditStatus::Ok,
        rows,
        fitted_c,
        i_theta_ratio,
        kernel_violations,
        kernel_checked,
        x_delta,
    })
}

/// Piecewise-linear interpolation of a row function, constant beyond the
/// outermost nodes.
fn interp_rows(grid: &CollarGrid, rows: &[f64], s: f64) -> f64 {
    let nodes = grid.s_nodes();
    let n = nodes.len();
    if s <= nodes[0] {
        return rows[0];
    }
    if s >= nodes[n - 1] {
        return rows[n - 1];
    }
    let k = nodes.partition_point(|&x| x <= s) - 1;
    let w = (s - nodes[k]) / (nodes[k + 1] - nodes[k]);
    rows[k] * (1.0 - w) + rows[k + 1] * w
}

/// `C₁` fitted from a profile pair `(Θ, G)`: the smallest constant with
/// `L Θ ≥ −C₁ G` at every node where `L` is defined.
pub fn fit_c1(theta: &ProfileFn, g: &ProfileFn) -> Result<f64> {
    if !theta.same_nodes(g) {
        return Err(Error::GridMismatch);
    }
    let m = delay_offset(theta.h)?.max(1);
    let l = delay_operator(theta)?;
    let mut c = 0.0f64;
    for (k, lv) in l.values.iter().enumerate() {
        let gv = g.values[k + m];
        if *lv < 0.0 {
            c = c.max(if gv > 0.0 { -lv / gv } else { f64::INFINITY });
        }
    }
    Ok(c)
}

/// [`fit_c1`] on one map: `Θ` and `G` sampled with spacing `1/(2m)` over
/// `|s| ≤ s_max − 1`.
pub fn snapshot_c1(u: &MapField, lambda: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Config("m must be positive"));
    }
    let grid = u.grid();
    let h = 0.5 / m as f64;
    let k = libm::floor((grid.s_max() - 1.0) / h) as usize;
    if k < m + 1 {
        return Err(Error::Shape { expected: m + 1, found: k });
    }
    let j = jet(u)?;
    let rows = theta_rows(&j);
    let tau = discrete_tension(u)?;
    let gprof = tension_window_profile(grid, u.dim(), &tau, lambda);
    let lo = -(k as f64) * h;
    let theta = (0..=2 * k)
        .map(|i| theta_profile_from_rows(grid, &rows, lo + i as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let g = (0..=2 * k).map(|i| interp_rows(grid, &gprof, lo + i as f64 * h)).collect();
    fit_c1(&ProfileFn::new(lo, h, theta)?, &ProfileFn::new(lo, h, g)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile() {
        let f = ProfileFn::from_fn(-2.0, 2.0, 33, |_| 3.0).unwrap();
        let l = delay_operator(&f).unwrap();
        assert!(l.values.iter().all(|v| (v + 3.75).abs() < 1e-12));
    }

    #[test]
    fn exponential_eigenfunction() {
        let coeff = libm::cosh(0.5) / 4.0 - 0.5;
        assert!((coeff + 0.218_093_5).abs() < 1e-7);
        for sign in [1.0, -1.0] {
            let f = ProfileFn::from_fn(-2.0, 2.0, 401, |s| libm::exp(sign * s)).unwrap();
            let l = delay_operator(&f).unwrap();
            for (k, v) in l.values.iter().enumerate() {
                let s = l.s(k);
                let exact = coeff * libm::exp(sign * s);
                assert!((v - exact).abs() < 1e-4 * exact.abs(), "{v} {exact}");
            }
        }
    }

    #[test]
    fn spacing_must_divide_delay() {
        let f = ProfileFn::new(0.0, 0.3, alloc::vec![0.0; 20]).unwrap();
        assert!(matches!(delay_operator(&f), Err(Error::Spacing { .. })));
    }

    #[test]
    fn equal_profiles_compare() {
        let f = ProfileFn::from_fn(-2.0, 2.0, 33, |s| libm::cos(s)).unwrap();
        assert!(comparison_hypotheses(&f, &f).unwrap());
        assert!(comparison_check(&f, &f, 2.0).unwrap());
    }

    #[test]
    fn kernel_without_source_is_exponential() {
        let g = ProfileFn::from_fn(-3.0, 3.0, 121, |_| 0.0).unwrap();
        let f = kernel_solution(1.0, 2.0, 0.0, &g, 3.0).unwrap();
        assert!((f.values[120] - (1.0 + 2.0 * libm::exp(-6.0))).abs() < 1e-12);
        assert!(kernel_residual(&f, 0.0, &g).unwrap() < 1e-3);
    }

    #[test]
    fn kernel_independent_of_g_when_c1_zero() {
        let g1 = ProfileFn::from_fn(-3.0, 3.0, 61, |s| s * s).unwrap();
        let g2 = ProfileFn::from_fn(-3.0, 3.0, 61, |s| libm::sin(s)).unwrap();
        assert_eq!(
            kernel_solution(0.5, 0.5, 0.0, &g1, 3.0).unwrap(),
            kernel_solution(0.5, 0.5, 0.0, &g2, 3.0).unwrap()
        );
    }
}
