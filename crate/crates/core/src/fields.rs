//! Maps from a collar into a flat torus or a round sphere.
//!
//! Values are stored in the ambient space `R^d`. For torus targets the map is
//! stored lifted to the universal cover, and `winding` is the deck translation
//! picked up when `θ` goes once around: `u(s, θ + 2π) = u(s, θ) + winding`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::CollarGrid;
use crate::math::{csum, sq, NeumaierSum, PI, TAU};

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// `R^d / Λ` with `Λ` diagonal; `None` leaves that factor as `R`.
    FlatTorus { periods: Vec<Option<f64>> },
    /// Unit sphere `S^{d−1} ⊂ R^d`.
    RoundSphere { dim: usize },
}

impl TargetSpec {
    pub fn flat_torus(periods: Vec<Option<f64>>) -> Self {
        TargetSpec::FlatTorus { periods }
    }

    pub fn round_sphere(dim: usize) -> Self {
        TargetSpec::RoundSphere { dim }
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::FlatTorus { periods } => periods.len(),
            TargetSpec::RoundSphere { dim } => *dim,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, TargetSpec::FlatTorus { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::FlatTorus { periods } => {
                if periods.is_empty() {
                    return Err(Error::Config("torus needs at least one factor"));
                }
                for p in periods.iter().flatten() {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::Domain { what: "torus period", value: *p });
                    }
                }
                Ok(())
            }
            TargetSpec::RoundSphere { dim } if *dim < 2 => Err(Error::Config("sphere needs d ≥ 2")),
            TargetSpec::RoundSphere { .. } => Ok(()),
        }
    }

    /// Second fundamental form `A(u)(v, v)`, added to `out`.
    pub fn add_second_fundamental_form(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        if let TargetSpec::RoundSphere { .. } = self {
            let vv: f64 = v.iter().map(|x| x * x).sum();
            for (o, ui) in out.iter_mut().zip(u) {
                *o -= vv * ui;
            }
        }
    }

    /// Nearest-point projection onto the target (in place).
    pub fn project(&self, u: &mut [f64]) {
        if let TargetSpec::RoundSphere { .. } = self {
            let n = libm::sqrt(u.iter().map(|x| x * x).sum::<f64>());
            if n > 0.0 {
                u.iter_mut().for_each(|x| *x /= n);
            }
        }
    }

    /// Projection of `v` onto `T_u N` (in place).
    pub fn tangential(&self, u: &[f64], v: &mut [f64]) {
        if let TargetSpec::RoundSphere { .. } = self {
            let uv: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= uv * ui;
            }
        }
    }

    fn check_point(&self, u: &[f64]) -> bool {
        match self {
            TargetSpec::FlatTorus { .. } => true,
            TargetSpec::RoundSphere { .. } => {
                let n2: f64 = u.iter().map(|x| x * x).sum();
                (n2 - 1.0).abs() <= 2e-12
            }
        }
    }

    fn check_winding(&self, w: &[f64]) -> Result<()> {
        match self {
            TargetSpec::FlatTorus { periods } => {
                for (wk, p) in w.iter().zip(periods) {
                    let ok = match p {
                        None => *wk == 0.0,
                        Some(p) => {
                            let m = libm::round(wk / p);
                            (wk - m * p).abs() <= 1e-9 * p.max(wk.abs())
                        }
                    };
                    if !ok {
                        return Err(Error::Domain { what: "winding", value: *wk });
                    }
                }
                Ok(())
            }
            TargetSpec::RoundSphere { .. } => {
                if w.iter().any(|x| *x != 0.0) {
                    Err(Error::Config("sphere maps have no winding"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A map `u` sampled on a collar grid; node `(i, j)` occupies
/// `values[(i·n_θ + j)·d ..][..d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapField {
    grid: Arc<CollarGrid>,
    target: TargetSpec,
    values: Vec<f64>,
    winding: Vec<f64>,
}

impl MapField {
    pub fn new(
        grid: Arc<CollarGrid>,
        target: TargetSpec,
        values: Vec<f64>,
        winding: Vec<f64>,
    ) -> Result<Self> {
        target.validate()?;
        let d = target.dim();
        if values.len() != grid.len() * d {
            return Err(Error::Shape { expected: grid.len() * d, found: values.len() });
        }
        if winding.len() != d {
            return Err(Error::Shape { expected: d, found: winding.len() });
        }
        if values.iter().chain(&winding).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "map values" });
        }
        target.check_winding(&winding)?;
        if !values.chunks_exact(d).all(|u| target.check_point(u)) {
            return Err(Error::Config("map values off the target"));
        }
        Ok(Self { grid, target, values, winding })
    }

    /// Samples `f(s, θ)` (lifted values for `θ ∈ [0, 2π)`).
    pub fn from_fn(
        grid: Arc<CollarGrid>,
        target: TargetSpec,
        winding: Vec<f64>,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<Self> {
        let d = target.dim();
        let mut values = Vec::with_capacity(grid.len() * d);
        for &s in grid.s_nodes() {
            for &t in grid.theta_nodes() {
                let v = f(s, t);
                if v.len() != d {
                    return Err(Error::Shape { expected: d, found: v.len() });
                }
                values.extend_from_slice(&v);
            }
        }
        Self::new(grid, target, values, winding)
    }

    pub fn constant(grid: Arc<CollarGrid>, target: TargetSpec, point: &[f64]) -> Result<Self> {
        let d = target.dim();
        let p = point.to_vec();
        Self::from_fn(grid, target, vec![0.0; d], move |_, _| p.clone())
    }

    pub fn grid(&self) -> &Arc<CollarGrid> {
        &self.grid
    }
    pub fn target(&self) -> &TargetSpec {
        &self.target
    }
    pub fn dim(&self) -> usize {
        self.target.dim()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn winding(&self) -> &[f64] {
        &self.winding
    }
    /// Value at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let d = self.dim();
        let k = self.grid.index(i, j) * d;
        &self.values[k..k + d]
    }

    /// Same values on a grid with identical nodes (e.g. another `ℓ`).
    pub fn with_grid(&self, grid: Arc<CollarGrid>) -> Result<Self> {
        if grid.n_s() != self.grid.n_s()
            || grid.n_theta() != self.grid.n_theta()
            || grid.s_nodes() != self.grid.s_nodes()
        {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, ..self.clone() })
    }

    /// `u + c·v` for a tangent field `v` (same layout), followed by the
    /// nearest-point projection. With `freeze_boundary` the first and last
    /// rows are copied unchanged.
    pub(crate) fn advanced(&self, c: f64, v: &[f64], freeze_boundary: bool) -> Result<Self> {
        let d = self.dim();
        let nt = self.grid.n_theta();
        let ns = self.grid.n_s();
        let mut values = self.values.clone();
        for i in 0..ns {
            if freeze_boundary && (i == 0 || i + 1 == ns) {
                continue;
            }
            for j in 0..nt {
                let k = (i * nt + j) * d;
                for a in 0..d {
                    values[k + a] += c * v[k + a];
                }
                self.target.project(&mut values[k..k + d]);
            }
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "map values" });
        }
        Ok(Self { values, ..self.clone() })
    }

    /// Value at `(i, j + offset)` with the deck translation applied across
    /// the seam; `offset ∈ {−1, 1}`.
    #[inline]
    fn theta_neighbour(&self, i: usize, j: usize, offset: isize, a: usize) -> f64 {
        let nt = self.grid.n_theta();
        let d = self.dim();
        let jj = j as isize + offset;
        let (jw, shift) = if jj < 0 {
            (nt - 1, -self.winding[a])
        } else if jj as usize >= nt {
            (0, self.winding[a])
        } else {
            (jj as usize, 0.0)
        };
        self.values[(i * nt + jw) * d + a] + shift
    }
}

/// First and second derivatives of a [`MapField`], same layout as its values.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    grid: Arc<CollarGrid>,
    dim: usize,
    u: Vec<f64>,
    u_s: Vec<f64>,
    u_theta: Vec<f64>,
    u_ss: Vec<f64>,
    u_theta_theta: Vec<f64>,
    u_s_theta: Vec<f64>,
}

impl MapJet {
    pub fn grid(&self) -> &Arc<CollarGrid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn u_s(&self) -> &[f64] {
        &self.u_s
    }
    pub fn u_theta(&self) -> &[f64] {
        &self.u_theta
    }
    pub fn u_ss(&self) -> &[f64] {
        &self.u_ss
    }
    pub fn u_theta_theta(&self) -> &[f64] {
        &self.u_theta_theta
    }
    pub fn u_s_theta(&self) -> &[f64] {
        &self.u_s_theta
    }

    /// `|u_s|² + |u_θ|²` at each node.
    pub fn grad_sq(&self) -> Vec<f64> {
        let d = self.dim;
        self.u_s
            .chunks_exact(d)
            .zip(self.u_theta.chunks_exact(d))
            .map(|(a, b)| a.iter().chain(b).map(|x| x * x).sum())
            .collect()
    }

    /// `|u_θ|²` at each node.
    pub fn theta_sq(&self) -> Vec<f64> {
        self.u_theta.chunks_exact(self.dim).map(|a| a.iter().map(|x| x * x).sum()).collect()
    }
}

/// Finite-difference jet: periodic central differences in `θ`, the grid's
/// three-point stencils in `s` (one-sided at the two boundary rows).
pub fn jet(u: &MapField) -> Result<MapJet> {
    let g = &u.grid;
    let (ns, nt, d) = (g.n_s(), g.n_theta(), u.dim());
    if ns < 4 || nt < 4 {
        return Err(Error::GridTooSmall { n_s: ns, n_theta: nt });
    }
    let h = g.h_theta();
    let n = u.values.len();
    let mut u_theta = vec![0.0; n];
    let mut u_tt = vec![0.0; n];
    for i in 0..ns {
        for j in 0..nt {
            for a in 0..d {
                let k = (i * nt + j) * d + a;
                let p = u.theta_neighbour(i, j, 1, a);
                let m = u.theta_neighbour(i, j, -1, a);
                u_theta[k] = (p - m) / (2.0 * h);
                u_tt[k] = (p - 2.0 * u.values[k] + m) / (h * h);
            }
        }
    }
    let apply = |src: &[f64], second: bool| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..ns {
            let st = g.stencil(i);
            let taps = if second { &st.second } else { &st.first };
            for &(o, w) in taps {
                let r = (i as isize + o) as usize;
                let (dst, srow) = (i * nt * d, r * nt * d);
                for k in 0..nt * d {
                    out[dst + k] += w * (src[srow + k] - src[dst + k]);
                }
            }
        }
        out
    };
    let u_s = apply(&u.values, false);
    let u_ss = apply(&u.values, true);
    let u_s_theta = apply(&u_theta, false);
    Ok(MapJet {
        grid: g.clone(),
        dim: d,
        u: u.values.clone(),
        u_s,
        u_theta,
        u_ss,
        u_theta_theta: u_tt,
        u_s_theta,
    })
}

/// Hyperbolic tension `τ_g(u) = ρ⁻² P_u(u_ss + u_θθ + A(u)(u_s,u_s) + A(u)(u_θ,u_θ))`
/// from the jet, at every node (boundary rows use one-sided stencils).
pub fn tension(u: &MapField) -> Result<Vec<f64>> {
    let j = jet(u)?;
    let g = &u.grid;
    let (nt, d) = (g.n_theta(), u.dim());
    let mut out = vec![0.0; u.values.len()];
    for (node, tau) in out.chunks_exact_mut(d).enumerate() {
        let r = node * d..(node + 1) * d;
        for a in 0..d {
            tau[a] = j.u_ss[r.start + a] + j.u_theta_theta[r.start + a];
        }
        let uu = &j.u[r.clone()];
        u.target.add_second_fundamental_form(uu, &j.u_s[r.clone()], tau);
        u.target.add_second_fundamental_form(uu, &j.u_theta[r.clone()], tau);
        u.target.tangential(uu, tau);
        let w = 1.0 / sq(g.rho()[node / nt]);
        tau.iter_mut().for_each(|x| *x *= w);
    }
    Ok(out)
}

/// `‖τ‖_{L²(C,g)}² = ∫ |τ|² ρ² ds dθ` for a tension-like field `tau`.
pub(crate) fn hyperbolic_l2_sq(grid: &CollarGrid, d: usize, tau: &[f64]) -> f64 {
    let nt = grid.n_theta();
    csum((0..grid.n_s()).map(|i| {
        let row = &tau[i * nt * d..(i + 1) * nt * d];
        grid.weight(i) * sq(grid.rho()[i]) * csum(row.iter().map(|x| x * x))
    }))
}

/// `‖τ_g(u)‖_{L²(C, g)}`.
pub fn tension_l2(u: &MapField) -> Result<f64> {
    let tau = tension(u)?;
    Ok(libm::sqrt(hyperbolic_l2_sq(&u.grid, u.dim(), &tau)))
}

/// Cutoff `φ(ρ)` for the smoothed weighted energy: `1` on `[0, δ]`, a quintic
/// smoothstep down to `0` on `[δ, 2δ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub delta: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { delta: 1.0 / TAU }
    }
}

impl Cutoff {
    pub fn eval(&self, rho: f64) -> f64 {
        let x = (rho - self.delta) / self.delta;
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        let x = (rho - self.delta) / self.delta;
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            -30.0 * x * x * sq(1.0 - x) / self.delta
        }
    }
}

/// Energies of a map on a collar. All integrals are in the conformal form
/// `e(u,g) dv_g = ½(|u_s|² + |u_θ|²) ds dθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `E = ½∫(|u_s|² + |u_θ|²) ds dθ`.
    pub energy: f64,
    /// `I = ∫ e(u,g) ρ⁻² dv_g`.
    pub weighted: f64,
    /// `I^(θ) = ∫ ρ⁻² |u_θ|² ds dθ`.
    pub i_theta: f64,
    /// `𝓘 = ∫ e(u,g) ρ⁻² φ²(ρ) dv_g`.
    pub i_smooth: f64,
    /// `max e(u,g) = max ½ρ⁻²(|u_s|² + |u_θ|²)`.
    pub sup_density: f64,
    /// Largest flat `∫(|∇²u|² + |∇u|⁴)` over unit-length subcylinders.
    pub reg_diag: f64,
}

pub fn energies(u: &MapField, cutoff: Cutoff) -> Result<EnergyReport> {
    let j = jet(u)?;
    Ok(energies_from_jet(&j, cutoff))
}

pub fn energies_from_jet(j: &MapJet, cutoff: Cutoff) -> EnergyReport {
    let g = &j.grid;
    let (ns, nt, d) = (g.n_s(), g.n_theta(), j.dim);
    let grad = j.grad_sq();
    let tsq = j.theta_sq();
    let row = |v: &[f64], i: usize| csum(v[i * nt..(i + 1) * nt].iter().copied());
    let mut e = NeumaierSum::new();
    let mut wi = NeumaierSum::new();
    let mut it = NeumaierSum::new();
    let mut is = NeumaierSum::new();
    let mut sup = 0.0f64;
    let mut reg_rows = Vec::with_capacity(ns);
    for i in 0..ns {
        let w = g.weight(i);
        let rho = g.rho()[i];
        let r2 = 1.0 / sq(rho);
        let gr = row(&grad, i);
        e.add(0.5 * w * gr);
        wi.add(0.5 * w * r2 * gr);
        it.add(w * r2 * row(&tsq, i));
        is.add(0.5 * w * r2 * sq(cutoff.eval(rho)) * gr);
        for k in 0..nt {
            sup = sup.max(0.5 * r2 * grad[i * nt + k]);
        }
        let mut acc = NeumaierSum::new();
        for k in 0..nt {
            let b = (i * nt + k) * d;
            let mut hess = 0.0;
            for a in 0..d {
                hess += sq(j.u_ss[b + a]) + 2.0 * sq(j.u_s_theta[b + a]) + sq(j.u_theta_theta[b + a]);
            }
            acc.add(hess + sq(grad[i * nt + k]));
        }
        reg_rows.push(acc.value() * g.h_theta());
    }
    let s_max = g.s_max();
    let reg_diag = if s_max <= 0.5 {
        g.window_integral(&reg_rows, -s_max, s_max)
    } else {
        g.s_nodes()
            .iter()
            .map(|&c| c.clamp(-s_max + 0.5, s_max - 0.5))
            .map(|c| g.window_integral(&reg_rows, c - 0.5, c + 0.5))
            .fold(0.0, f64::max)
    };
    EnergyReport {
        energy: e.value(),
        weighted: wi.value(),
        i_theta: it.value(),
        i_smooth: is.value(),
        sup_density: sup,
        reg_diag,
    }
}

/// Bump `φ` for `Θ`: `1` on `[−½, ½]`, `cos²(π(|r| − ½))` on `½ < |r| < 1`.
pub fn theta_bump(r: f64) -> f64 {
    let a = r.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        sq(libm::cos(PI * (a - 0.5)))
    }
}

/// Row integrals `∫|u_θ|² dθ` of a jet.
pub fn theta_rows(j: &MapJet) -> Vec<f64> {
    let nt = j.grid.n_theta();
    let tsq = j.theta_sq();
    (0..j.grid.n_s())
        .map(|i| j.grid.h_theta() * csum(tsq[i * nt..(i + 1) * nt].iter().copied()))
        .collect()
}

/// `Θ(s₀) = ∫∫ φ⁴(s − s₀) |u_θ|² dθ ds`.
pub fn theta_profile(u: &MapField, s0: f64) -> Result<f64> {
    let j = jet(u)?;
    theta_profile_from_rows(&u.grid, &theta_rows(&j), s0)
}

pub fn theta_profile_from_rows(grid: &CollarGrid, rows: &[f64], s0: f64) -> Result<f64> {
    if !(s0.abs() <= grid.s_max() - 1.0 + 1e-12) {
        return Err(Error::Domain { what: "s0", value: s0 });
    }
    Ok(csum(grid.s_nodes().iter().zip(grid.s_weights()).zip(rows).map(|((&s, &w), &r)| {
        let b = sq(theta_bump(s - s0));
        w * sq(b) * r
    })))
}

/// Discrete Dirichlet energy: `θ`-differences weighted by the cell widths and
/// `s`-differences across the `n_s − 1` interior edges. Its gradient is the
/// five-point Laplacian used by the flow.
pub fn discrete_energy(u: &MapField) -> f64 {
    let g = &u.grid;
    let (ns, nt, d) = (g.n_s(), g.n_theta(), u.dim());
    let h = g.h_theta();
    let s = g.s_nodes();
    let mut acc = NeumaierSum::new();
    for i in 0..ns {
        let mut row = NeumaierSum::new();
        for jj in 0..nt {
            for a in 0..d {
                let next = u.theta_neighbour(i, jj, 1, a);
                row.add(sq(next - u.values[(i * nt + jj) * d + a]));
            }
        }
        acc.add(0.5 * g.s_weights()[i] / h * row.value());
        if i + 1 < ns {
            let gap = s[i + 1] - s[i];
            let a0 = i * nt * d;
            let a1 = (i + 1) * nt * d;
            let r = csum((0..nt * d).map(|k| sq(u.values[a1 + k] - u.values[a0 + k])));
            acc.add(0.5 * h / gap * r);
        }
    }
    acc.value()
}

/// Negative gradient of [`discrete_energy`] per unit flat area, tangentially
/// projected and scaled by `ρ⁻²`: the discrete `τ_g(u)`. Boundary rows are
/// zero (Dirichlet data).
pub fn discrete_tension(u: &MapField) -> Result<Vec<f64>> {
    let g = &u.grid;
    let (ns, nt, d) = (g.n_s(), g.n_theta(), u.dim());
    if ns < 3 || nt < 3 {
        return Err(Error::GridTooSmall { n_s: ns, n_theta: nt });
    }
    let h = g.h_theta();
    let s = g.s_nodes();
    let mut out = vec![0.0; u.values.len()];
    for i in 1..ns - 1 {
        let w = g.s_weights()[i];
        let gm = s[i] - s[i - 1];
        let gp = s[i + 1] - s[i];
        let r2 = 1.0 / sq(g.rho()[i]);
        for jj in 0..nt {
            let k = (i * nt + jj) * d;
            for a in 0..d {
                let c = u.values[k + a];
                let tp = u.theta_neighbour(i, jj, 1, a);
                let tm = u.theta_neighbour(i, jj, -1, a);
                let sp = u.values[k + nt * d + a];
                let sm = u.values[k - nt * d + a];
                let lap_t = (tp - 2.0 * c + tm) / (h * h);
                let lap_s = ((sp - c) / gp - (c - sm) / gm) / w;
                out[k + a] = lap_t + lap_s;
            }
            let (uu, tau) = (&u.values[k..k + d], &mut out[k..k + d]);
            u.target.tangential(uu, tau);
            tau.iter_mut().for_each(|x| *x *= r2);
        }
    }
    Ok(out)
}

/// `‖τ‖²_{L²(C,g)}` of [`discrete_tension`].
pub fn discrete_tension_l2_sq(u: &MapField, tau: &[f64]) -> f64 {
    hyperbolic_l2_sq(&u.grid, u.dim(), tau)
}
