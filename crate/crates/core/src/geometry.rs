//! Closed-form geometry of the standard hyperbolic collar.
//!
//! A simple closed geodesic of length `ℓ < 2 arsinh(1)` has a neighbourhood
//! isometric to `C(ℓ) = (-X(ℓ), X(ℓ)) × S¹` with metric `ρ²(s)(ds² + dθ²)`,
//! where
//!
//! ```text
//! ρ(s) = ℓ / (2π cos(ℓ s / 2π)),     X(ℓ) = (2π/ℓ)(π/2 − arctan(sinh(ℓ/2))).
//! ```
//!
//! Everything here is a pure function of `ℓ` and the collar coordinate `s`.
//! [`CollarGrid`] adds a tensor-product quadrature on a symmetric subcylinder.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{csum, fd_weights, sq, ASINH_1, PI, TAU};

/// Upper bound `2 arsinh(1)` on collar lengths.
pub const ELL_LIMIT: f64 = 2.0 * ASINH_1;

/// `X(ℓ)` at `ℓ = 2 arsinh(1)`: `π² / (4 arsinh 1)`.
pub const HALF_LENGTH_AT_LIMIT: f64 = PI * PI / (4.0 * ASINH_1);

fn check_ell_closed(ell: f64) -> Result<()> {
    if ell.is_finite() && ell > 0.0 && ell <= ELL_LIMIT {
        Ok(())
    } else {
        Err(Error::Domain { what: "ell", value: ell })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 && delta < ASINH_1 {
        Ok(())
    } else {
        Err(Error::Domain { what: "delta", value: delta })
    }
}

/// The Gudermannian `arctan(sinh x)`.
fn gd(x: f64) -> f64 {
    libm::atan(libm::sinh(x))
}

/// Half-length `X(ℓ)` of the collar.
///
/// Accepts the closed range `0 < ℓ ≤ 2 arsinh(1)`; the formula extends
/// continuously to the endpoint, where it equals [`HALF_LENGTH_AT_LIMIT`].
pub fn half_length(ell: f64) -> Result<f64> {
    check_ell_closed(ell)?;
    Ok(TAU / ell * (PI / 2.0 - gd(ell / 2.0)))
}

/// Half-length `X_δ(ℓ)` of the `δ`-thin part (points with injectivity radius
/// below `δ`). Zero when `δ ≤ ℓ/2`.
pub fn delta_thin_half_length(ell: f64, delta: f64) -> Result<f64> {
    check_ell_closed(ell)?;
    check_delta(delta)?;
    if delta <= ell / 2.0 {
        return Ok(0.0);
    }
    let ratio = (libm::sinh(ell / 2.0) / libm::sinh(delta)).min(1.0);
    Ok((TAU / ell * (PI / 2.0 - libm::asin(ratio))).max(0.0))
}

/// `X(ℓ) − X_δ(ℓ)`, computed without cancellation between the two terms.
pub fn thick_width(ell: f64, delta: f64) -> Result<f64> {
    check_ell_closed(ell)?;
    check_delta(delta)?;
    if delta <= ell / 2.0 {
        return half_length(ell);
    }
    let sh = libm::sinh(ell / 2.0);
    let ratio = (sh / libm::sinh(delta)).min(1.0);
    Ok(TAU / ell * (libm::asin(ratio) - libm::atan(sh)))
}

/// The validated length `ℓ ∈ (0, 2 arsinh 1)` of a collar's central geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarParams {
    ell: f64,
}

impl CollarParams {
    pub fn new(ell: f64) -> Result<Self> {
        if ell.is_finite() && ell > 0.0 && ell < ELL_LIMIT {
            Ok(Self { ell })
        } else {
            Err(Error::Domain { what: "ell", value: ell })
        }
    }

    #[inline]
    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `ℓ / 2π`, the reciprocal frequency in `cos(ℓ s / 2π)`.
    #[inline]
    fn freq(&self) -> f64 {
        self.ell / TAU
    }

    pub fn half_length(&self) -> f64 {
        TAU / self.ell * (PI / 2.0 - gd(self.ell / 2.0))
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if s.is_finite() && libm::fabs(s) < self.half_length() {
            Ok(())
        } else {
            Err(Error::Domain { what: "s", value: s })
        }
    }

    /// `ρ(s)` without the collar-range check; callers guarantee `|s| < X`.
    #[inline]
    pub(crate) fn rho_unchecked(&self, s: f64) -> f64 {
        self.freq() / libm::cos(self.freq() * s)
    }

    /// Conformal factor `ρ(s) = ℓ / (2π cos(ℓs/2π))`.
    pub fn rho(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.rho_unchecked(s))
    }

    /// `ρ(±X) = ℓ / (2π tanh(ℓ/2))`.
    pub fn rho_at_end(&self) -> f64 {
        self.freq() / libm::tanh(self.ell / 2.0)
    }

    pub(crate) fn inj_unchecked(&self, s: f64) -> f64 {
        libm::asinh(libm::sinh(self.ell / 2.0) / libm::cos(self.freq() * s))
    }

    /// Injectivity radius, from `sinh(inj)·cos(ℓs/2π) = sinh(ℓ/2)`.
    pub fn injectivity_radius(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.inj_unchecked(s))
    }

    /// `inj(±X) = arsinh(cosh(ℓ/2))`.
    pub fn inj_at_end(&self) -> f64 {
        libm::asinh(libm::cosh(self.ell / 2.0))
    }

    /// `d/ds log ρ = (ℓ/2π) tan(ℓs/2π)`.
    pub fn log_rho_slope(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.freq() * libm::tan(self.freq() * s))
    }

    /// Sharp bound on `|d/ds log ρ|` over the collar: `ℓ / (2π sinh(ℓ/2))`.
    pub fn log_rho_slope_bound(&self) -> f64 {
        self.freq() / libm::sinh(self.ell / 2.0)
    }

    /// `ρ` expressed through the injectivity radius:
    /// `ρ = ℓ sinh(inj) / (2π sinh(ℓ/2))`.
    pub fn rho_from_inj(&self, inj: f64) -> f64 {
        self.freq() * libm::sinh(inj) / libm::sinh(self.ell / 2.0)
    }

    pub fn delta_thin_half_length(&self, delta: f64) -> Result<f64> {
        delta_thin_half_length(self.ell, delta)
    }

    /// `max ρ / min ρ` over `[s0 − Λ, s0 + Λ]`, which must lie in the collar.
    pub fn rho_oscillation(&self, s0: f64, lambda: f64) -> Result<f64> {
        let lo = s0 - lambda;
        let hi = s0 + lambda;
        self.check_s(lo)?;
        self.check_s(hi)?;
        // ρ is even and increasing in |s|.
        let far = libm::fabs(lo).max(libm::fabs(hi));
        let near = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            libm::fabs(lo).min(libm::fabs(hi))
        };
        Ok(self.rho_unchecked(far) / self.rho_unchecked(near))
    }

    pub fn dz2_norms(&self) -> Dz2Norms {
        Dz2Norms::exact(self.ell)
    }
}

/// `ρ(s)` for a raw `ℓ`.
pub fn conformal_factor(ell: f64, s: f64) -> Result<f64> {
    CollarParams::new(ell)?.rho(s)
}

pub fn injectivity_radius(ell: f64, s: f64) -> Result<f64> {
    CollarParams::new(ell)?.injectivity_radius(s)
}

pub fn log_rho_slope(ell: f64, s: f64) -> Result<f64> {
    CollarParams::new(ell)?.log_rho_slope(s)
}

/// Hyperbolic norms of the unit differential `dz²` over the whole collar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dz2Norms {
    pub l1: f64,
    pub l2_sq: f64,
    pub l_inf: f64,
}

impl Dz2Norms {
    fn exact(ell: f64) -> Self {
        let x = TAU / ell * (PI / 2.0 - gd(ell / 2.0));
        Self {
            l1: 8.0 * PI * x,
            l2_sq: scaled_dz2_l2_sq(ell) / (ell * ell * ell),
            l_inf: 8.0 * PI * PI / (ell * ell),
        }
    }
}

/// Norms of `dz²` on `C(ℓ)`: `‖dz²‖_{L¹} = 8πX`, `‖dz²‖_{L∞} = 8π²/ℓ²`, and
/// `‖dz²‖²_{L²} = 8π (2π/ℓ)² ∫_{-X}^{X} cos²(ℓs/2π) ds` in closed form.
pub fn dz2_norms(ell: f64) -> Result<Dz2Norms> {
    CollarParams::new(ell)?;
    Ok(Dz2Norms::exact(ell))
}

/// `ℓ³ ‖dz²‖²_{L²(C(ℓ))} = 64π⁴ (π/2 − gd(ℓ/2) + tanh(ℓ/2) sech(ℓ/2))`.
///
/// Finite as `ℓ → 0` (limit `32π⁵`), which the pinching integrator relies on.
pub fn scaled_dz2_l2_sq(ell: f64) -> f64 {
    let x = ell / 2.0;
    let bracket = PI / 2.0 - gd(x) + libm::tanh(x) / libm::cosh(x);
    64.0 * PI * PI * PI * PI * bracket
}

/// Two-term small-`ℓ` expansion `32π⁵/ℓ³ − 16π⁴/3` of `‖dz²‖²_{L²}`.
pub fn dz2_l2_sq_series(ell: f64) -> f64 {
    let p4 = PI * PI * PI * PI;
    32.0 * p4 * PI / (ell * ell * ell) - 16.0 * p4 / 3.0
}

/// Placement of the `s` nodes of a [`CollarGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SNodeMap {
    /// Cell centres of a uniform partition of `(-s_max, s_max)`.
    Uniform,
    /// `s = s_max · atan(κξ)/atan(κ)` for uniform `ξ ∈ (-1, 1)`; clusters nodes
    /// towards the collar ends where `ρ` varies fastest.
    ArctanStretched { strength: f64 },
}

/// Finite-difference stencil of one `s` row: offsets are relative row indices.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RowStencil {
    pub(crate) first: Vec<(isize, f64)>,
    pub(crate) second: Vec<(isize, f64)>,
}

/// Tensor-product quadrature grid on `(-s_max, s_max) × [0, 2π)`.
///
/// In `s` every node is the centre of a cell and carries the cell width as its
/// weight (composite midpoint); in `θ` the nodes are uniform with weight
/// `2π/n_θ` (periodic trapezoid). Node `(i, j)` has flat index `i·n_θ + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarGrid {
    params: CollarParams,
    s_max: f64,
    n_s: usize,
    n_theta: usize,
    map: SNodeMap,
    s_edges: Vec<f64>,
    s_nodes: Vec<f64>,
    s_weights: Vec<f64>,
    theta_nodes: Vec<f64>,
    rho: Vec<f64>,
    stencils: Vec<RowStencil>,
}

impl CollarGrid {
    pub fn new(params: CollarParams, s_max: f64, n_s: usize, n_theta: usize) -> Result<Self> {
        Self::with_map(params, s_max, n_s, n_theta, SNodeMap::Uniform)
    }

    /// Grid on the whole collar, `s_max = X(ℓ)`.
    pub fn full_collar(params: CollarParams, n_s: usize, n_theta: usize) -> Result<Self> {
        Self::new(params, params.half_length(), n_s, n_theta)
    }

    pub fn with_map(
        params: CollarParams,
        s_max: f64,
        n_s: usize,
        n_theta: usize,
        map: SNodeMap,
    ) -> Result<Self> {
        let x = params.half_length();
        if !(s_max.is_finite() && s_max > 0.0 && s_max <= x * (1.0 + 1e-14)) {
            return Err(Error::Domain { what: "s_max", value: s_max });
        }
        if n_s == 0 || n_theta == 0 {
            return Err(Error::GridTooSmall { n_s, n_theta });
        }
        let s_max = s_max.min(x);
        let edge = |xi: f64| match map {
            SNodeMap::Uniform => s_max * xi,
            SNodeMap::ArctanStretched { strength } => {
                s_max * libm::atan(strength * xi) / libm::atan(strength)
            }
        };
        if let SNodeMap::ArctanStretched { strength } = map {
            if !(strength.is_finite() && strength > 0.0) {
                return Err(Error::Domain { what: "stretch strength", value: strength });
            }
        }
        let dxi = 2.0 / n_s as f64;
        let s_edges: Vec<f64> = (0..=n_s)
            .map(|i| {
                if i == 0 {
                    -s_max
                } else if i == n_s {
                    s_max
                } else {
                    edge(-1.0 + i as f64 * dxi)
                }
            })
            .collect();
        let s_nodes: Vec<f64> = (0..n_s).map(|i| edge(-1.0 + (i as f64 + 0.5) * dxi)).collect();
        let s_weights: Vec<f64> = s_edges.windows(2).map(|w| w[1] - w[0]).collect();
        let theta_nodes = (0..n_theta).map(|j| TAU * j as f64 / n_theta as f64).collect();
        let rho = s_nodes.iter().map(|&s| params.rho_unchecked(s)).collect();
        let stencils = build_stencils(&s_nodes);
        Ok(Self {
            params,
            s_max,
            n_s,
            n_theta,
            map,
            s_edges,
            s_nodes,
            s_weights,
            theta_nodes,
            rho,
            stencils,
        })
    }

    /// Same nodes, metric of a different collar length. Fails if the
    /// coordinate domain no longer fits inside `C(ell)`.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        let params = CollarParams::new(ell)?;
        if self.s_max > params.half_length() * (1.0 + 1e-14) {
            return Err(Error::Domain { what: "s_max", value: self.s_max });
        }
        let mut out = self.clone();
        out.params = params;
        out.rho = self.s_nodes.iter().map(|&s| params.rho_unchecked(s)).collect();
        Ok(out)
    }

    #[inline]
    pub fn params(&self) -> CollarParams {
        self.params
    }
    #[inline]
    pub fn ell(&self) -> f64 {
        self.params.ell
    }
    #[inline]
    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    #[inline]
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    #[inline]
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.n_s * self.n_theta
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn map(&self) -> SNodeMap {
        self.map
    }
    pub fn is_uniform(&self) -> bool {
        self.map == SNodeMap::Uniform
    }
    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }
    pub fn s_edges(&self) -> &[f64] {
        &self.s_edges
    }
    /// Cell widths in `s`.
    pub fn s_weights(&self) -> &[f64] {
        &self.s_weights
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }
    #[inline]
    pub fn h_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }
    /// `ρ` at each `s` node.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    /// Flat (`ds dθ`) quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.s_weights[i] * self.h_theta()
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    pub(crate) fn stencil(&self, i: usize) -> &RowStencil {
        &self.stencils[i]
    }

    /// `∫ f ds dθ` for `f` given at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let ht = self.h_theta();
        csum((0..self.n_s).map(|i| {
            let row = &values[i * self.n_theta..(i + 1) * self.n_theta];
            self.s_weights[i] * ht * csum(row.iter().copied())
        }))
    }

    /// `∫_lo^hi r(s) ds` for a row function `r`, counting each cell by its
    /// overlap with `[lo, hi]`.
    pub fn window_integral(&self, row_values: &[f64], lo: f64, hi: f64) -> f64 {
        debug_assert_eq!(row_values.len(), self.n_s);
        csum((0..self.n_s).filter_map(|i| {
            let a = self.s_edges[i].max(lo);
            let b = self.s_edges[i + 1].min(hi);
            (b > a).then(|| (b - a) * row_values[i])
        }))
    }

    /// Uniform `s` spacing, if the grid is uniform.
    pub fn h_s(&self) -> Option<f64> {
        self.is_uniform().then(|| 2.0 * self.s_max / self.n_s as f64)
    }

    /// Largest explicit-Euler step for `u_t = ρ⁻² Δ u` on this grid:
    /// `min ρ² / (2/h_s² + 2/h_θ²)`.
    pub fn parabolic_dt_limit(&self) -> f64 {
        let rho_min = self.rho.iter().copied().fold(f64::INFINITY, f64::min);
        let hs = self.s_weights.iter().copied().fold(f64::INFINITY, f64::min);
        sq(rho_min) / (2.0 / sq(hs) + 2.0 / sq(self.h_theta()))
    }

    pub(crate) fn same_nodes(&self, other: &CollarGrid) -> bool {
        self.n_s == other.n_s
            && self.n_theta == other.n_theta
            && self.s_nodes == other.s_nodes
            && self.params == other.params
    }
}

fn build_stencils(s: &[f64]) -> Vec<RowStencil> {
    let n = s.len();
    (0..n)
        .map(|i| {
            if n < 4 {
                return RowStencil { first: Vec::new(), second: Vec::new() };
            }
            let pick = |offs: &[isize]| -> Vec<f64> {
                offs.iter().map(|&o| s[(i as isize + o) as usize]).collect()
            };
            let (first_offs, second_offs): (&[isize], &[isize]) = if i == 0 {
                (&[0, 1, 2], &[0, 1, 2, 3])
            } else if i == n - 1 {
                (&[-2, -1, 0], &[-3, -2, -1, 0])
            } else {
                (&[-1, 0, 1], &[-1, 0, 1])
            };
            let w1 = fd_weights(s[i], &pick(first_offs), 1);
            let w2 = fd_weights(s[i], &pick(second_offs), 2);
            RowStencil {
                first: first_offs.iter().copied().zip(w1[1].iter().copied()).collect(),
                second: second_offs.iter().copied().zip(w2[2].iter().copied()).collect(),
            }
        })
        .collect()
}

/// Length of the circle `{s0} × S¹` in the metric
/// `ρ²(ds² + dθ²) + ε·Re(b₀ dz²)`, by periodic trapezoid in `θ`.
///
/// `Re(b₀ dz²)(∂_θ, ∂_θ) = −Re b₀`, so the integrand is `(ρ² − ε Re b₀)^{1/2}`.
pub fn deformed_circle_length(
    params: CollarParams,
    s0: f64,
    b0: Complex64,
    eps: f64,
    n_theta: usize,
) -> Result<f64> {
    let rho = params.rho(s0)?;
    let h = TAU / n_theta as f64;
    let dz2_tt = Complex64::new(0.0, 1.0) * Complex64::new(0.0, 1.0);
    Ok(csum((0..n_theta).map(|_| {
        let g_tt = sq(rho) + eps * (b0 * dz2_tt).re;
        h * libm::sqrt(g_tt)
    })))
}

/// Rate `∂_ε (ρ̂²)` at `ε = 0` of the circle-length conformal factor
/// `ρ̂ = L/2π` under the symmetric deformation `ε·Re(b₀ dz²)`, by a central
/// difference with one Richardson extrapolation.
pub fn symmetric_rho_sq_rate(params: CollarParams, s0: f64, b0: Complex64, eps: f64) -> Result<f64> {
    let rho_hat_sq = |e: f64| -> Result<f64> {
        Ok(sq(deformed_circle_length(params, s0, b0, e, 64)? / TAU))
    };
    let central = |e: f64| -> Result<f64> { Ok((rho_hat_sq(e)? - rho_hat_sq(-e)?) / (2.0 * e)) };
    let d1 = central(eps)?;
    let d2 = central(eps / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}
