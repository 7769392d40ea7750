//! Quadratic differentials `Ψ = ψ dz²` on a collar, `dz = ds + i dθ`.
//!
//! Norms are taken in the hyperbolic metric: `|dz²|_g = 2ρ⁻²`, so
//! `‖Ψ‖²_{L²} = ∫ |ψ|² |dz²|² dv_g = 4 ∫ ρ⁻² |ψ|² ds dθ`.
//!
//! Holomorphic differentials on the collar are spanned by the mutually
//! orthogonal modes `e^{ns} e^{inθ} dz²`. Coefficients are stored against the
//! rescaled modes `e^{ns − |n| s_ref} e^{inθ}`, which stay of size one on the
//! grid even when `e^{n X(ℓ)}` would overflow.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::MapJet;
use crate::geometry::{CollarGrid, CollarParams};
use crate::math::{csum, linear_fit, sq, LinearFit, NeumaierSum, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// Subset of the grid, by collar coordinate `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    All,
    /// `δ`-thin part: injectivity radius below `δ`, i.e. `|s| < X_δ`.
    Thin(f64),
    /// `δ`-thick part of the collar: `|s| ≥ X_δ`.
    Thick(f64),
    /// Subcylinder `lo ≤ s ≤ hi`.
    Band { lo: f64, hi: f64 },
}

impl Region {
    fn mask(&self, grid: &CollarGrid) -> Result<Vec<bool>> {
        let s = grid.s_nodes();
        Ok(match *self {
            Region::All => vec![true; s.len()],
            Region::Thin(delta) => {
                let xd = grid.params().delta_thin_half_length(delta)?;
                s.iter().map(|v| v.abs() < xd).collect()
            }
            Region::Thick(delta) => {
                let xd = grid.params().delta_thin_half_length(delta)?;
                s.iter().map(|v| v.abs() >= xd).collect()
            }
            Region::Band { lo, hi } => s.iter().map(|&v| v >= lo && v <= hi).collect(),
        })
    }
}

/// Grid samples of `ψ` for the differential `ψ dz²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDiffField {
    grid: Arc<CollarGrid>,
    psi: Vec<Complex64>,
}

impl QuadDiffField {
    pub fn new(grid: Arc<CollarGrid>, psi: Vec<Complex64>) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), found: psi.len() });
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { what: "psi" });
        }
        Ok(Self { grid, psi })
    }

    pub fn from_fn(grid: Arc<CollarGrid>, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let mut psi = Vec::with_capacity(grid.len());
        for &s in grid.s_nodes() {
            for &t in grid.theta_nodes() {
                psi.push(f(s, t));
            }
        }
        Self::new(grid, psi)
    }

    pub fn zero(grid: Arc<CollarGrid>) -> Self {
        let n = grid.len();
        Self { grid, psi: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// The unit differential `dz²` (`ψ ≡ 1`).
    pub fn dz2(grid: Arc<CollarGrid>) -> Self {
        let n = grid.len();
        Self { grid, psi: vec![Complex64::new(1.0, 0.0); n] }
    }

    pub fn grid(&self) -> &Arc<CollarGrid> {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn into_psi(self) -> Vec<Complex64> {
        self.psi
    }

    /// Pointwise hyperbolic magnitude `|Ψ|_g = 2ρ⁻²|ψ|` at node `(i, j)`.
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        2.0 * self.psi[self.grid.index(i, j)].norm() / sq(self.grid.rho()[i])
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_nodes(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let psi = self.psi.iter().zip(&other.psi).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid.clone(), psi })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid.clone(), psi: self.psi.iter().map(|z| z * c).collect() }
    }

    /// Largest pointwise difference `max |ψ₁ − ψ₂|` (flat, coefficient-wise).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Hyperbolic `L^p` norm over the whole grid.
pub fn lp_norm(field: &QuadDiffField, p: Norm) -> f64 {
    lp_norm_on(field, p, Region::All).expect("Region::All is always valid")
}

/// Hyperbolic `L^p` norm over a region of the grid.
pub fn lp_norm_on(field: &QuadDiffField, p: Norm, region: Region) -> Result<f64> {
    let g = &field.grid;
    let mask = region.mask(g)?;
    let nt = g.n_theta();
    let rows = (0..g.n_s()).filter(|&i| mask[i]);
    Ok(match p {
        // |Ψ|_g dv_g = 2ρ⁻²|ψ| ρ² ds dθ = 2|ψ| ds dθ
        Norm::L1 => csum(rows.map(|i| {
            let row = &field.psi[i * nt..(i + 1) * nt];
            g.weight(i) * 2.0 * csum(row.iter().map(|z| z.norm()))
        })),
        Norm::L2 => libm::sqrt(csum(rows.map(|i| {
            let row = &field.psi[i * nt..(i + 1) * nt];
            g.weight(i) * 4.0 / sq(g.rho()[i]) * csum(row.iter().map(|z| z.norm_sqr()))
        }))),
        Norm::Inf => rows
            .flat_map(|i| (0..nt).map(move |j| (i, j)))
            .map(|(i, j)| field.magnitude(i, j))
            .fold(0.0, f64::max),
    })
}

/// Hermitian `L²(C, g)` pairing `∫ ψ₁ ψ̄₂ |dz²|² dv_g = 4 ∫ ρ⁻² ψ₁ ψ̄₂ ds dθ`.
pub fn inner_product(a: &QuadDiffField, b: &QuadDiffField) -> Result<Complex64> {
    inner_product_on(a, b, Region::All)
}

pub fn inner_product_on(a: &QuadDiffField, b: &QuadDiffField, region: Region) -> Result<Complex64> {
    a.check_same(b)?;
    let g = &a.grid;
    let mask = region.mask(g)?;
    let nt = g.n_theta();
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for i in (0..g.n_s()).filter(|&i| mask[i]) {
        let w = g.weight(i) * 4.0 / sq(g.rho()[i]);
        let mut rr = NeumaierSum::new();
        let mut ri = NeumaierSum::new();
        for j in 0..nt {
            let k = i * nt + j;
            let z = a.psi[k] * b.psi[k].conj();
            rr.add(z.re);
            ri.add(z.im);
        }
        re.add(w * rr.value());
        im.add(w * ri.value());
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Principal part `b₀ dz²` and collar-decay part `ω⊥ = Ψ − b₀ dz²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalSplit {
    pub b0: Complex64,
    pub decay: QuadDiffField,
}

/// `b₀ = ⟨Ψ, dz²⟩ / ‖dz²‖²` over the field's grid; for holomorphic `Ψ` this
/// is the zero Fourier mode.
pub fn principal_split(field: &QuadDiffField) -> PrincipalSplit {
    let dz2 = QuadDiffField::dz2(field.grid.clone());
    let num = inner_product(field, &dz2).expect("same grid");
    let den = inner_product(&dz2, &dz2).expect("same grid").re;
    let b0 = num / den;
    let psi = field.psi.iter().map(|z| z - b0).collect();
    PrincipalSplit { b0, decay: QuadDiffField { grid: field.grid.clone(), psi } }
}

/// Truncated Fourier expansion `Σ_{|n| ≤ n_max} c_n e^{ns − |n| s_ref} e^{inθ} dz²`.
///
/// The plain coefficient of `e^{ns} e^{inθ} dz²` is `b_n = c_n e^{−|n| s_ref}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierQD {
    n_max: usize,
    s_ref: f64,
    coeffs: Vec<Complex64>,
}

impl FourierQD {
    pub fn zeros(n_max: usize, s_ref: f64) -> Self {
        Self { n_max, s_ref, coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_max + 1] }
    }

    /// Builds from scaled coefficients `c_{-n_max}..=c_{n_max}`.
    pub fn from_scaled(n_max: usize, s_ref: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * n_max + 1 {
            return Err(Error::Shape { expected: 2 * n_max + 1, found: coeffs.len() });
        }
        Ok(Self { n_max, s_ref, coeffs })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn s_ref(&self) -> f64 {
        self.s_ref
    }

    fn slot(&self, n: i64) -> Option<usize> {
        let m = self.n_max as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    }

    /// Scaled coefficient `c_n`; zero outside the stored range.
    pub fn scaled(&self, n: i64) -> Complex64 {
        self.slot(n).map_or(Complex64::new(0.0, 0.0), |k| self.coeffs[k])
    }

    pub fn set_scaled(&mut self, n: i64, c: Complex64) {
        if let Some(k) = self.slot(n) {
            self.coeffs[k] = c;
        }
    }

    /// Plain Fourier coefficient `b_n` (may underflow for large `|n| s_ref`).
    pub fn b(&self, n: i64) -> Complex64 {
        self.scaled(n) * libm::exp(-(n.unsigned_abs() as f64) * self.s_ref)
    }

    /// Sets the plain coefficient `b_n`.
    pub fn set_b(&mut self, n: i64, b: Complex64) {
        self.set_scaled(n, b * libm::exp(n.unsigned_abs() as f64 * self.s_ref));
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.n_max as i64;
        (-m..=m).zip(self.coeffs.iter().copied())
    }

    #[inline]
    fn mode_scale(&self, n: i64, s: f64) -> f64 {
        libm::exp(n as f64 * s - n.unsigned_abs() as f64 * self.s_ref)
    }

    /// `ψ(s, θ)`.
    pub fn evaluate(&self, s: f64, theta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, c) in self.modes() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            acc += c * self.mode_scale(n, s) * Complex64::from_polar(1.0, n as f64 * theta);
        }
        acc
    }

    /// `sup |Ψ|_g` over `[s_lo, s_hi] × S¹` by dense sampling (endpoints
    /// included).
    pub fn sup_magnitude(&self, params: CollarParams, s_lo: f64, s_hi: f64) -> f64 {
        let n_s = 2049;
        let n_t = (8 * (2 * self.n_max + 1)).max(16);
        let mut best = 0.0f64;
        for a in 0..n_s {
            let s = if a + 1 == n_s { s_hi } else { s_lo + (s_hi - s_lo) * a as f64 / (n_s - 1) as f64 };
            let w = 2.0 / sq(params.rho_unchecked(s));
            for b in 0..n_t {
                let t = TAU * b as f64 / n_t as f64;
                best = best.max(w * self.evaluate(s, t).norm());
            }
        }
        best
    }
}

/// `θ`-DFT of each row: `F_i(n) = Σ_j h_θ ψ_ij e^{−inθ_j}` for `|n| ≤ n_max`.
fn row_transforms(field: &QuadDiffField, n_max: usize) -> Vec<Vec<Complex64>> {
    let g = &field.grid;
    let nt = g.n_theta();
    let ht = g.h_theta();
    let m = n_max as i64;
    (0..g.n_s())
        .map(|i| {
            let row = &field.psi[i * nt..(i + 1) * nt];
            (-m..=m)
                .map(|n| {
                    let mut re = NeumaierSum::new();
                    let mut im = NeumaierSum::new();
                    for (j, z) in row.iter().enumerate() {
                        let e = Complex64::from_polar(1.0, -(n as f64) * g.theta_nodes()[j]);
                        let p = z * e;
                        re.add(p.re);
                        im.add(p.im);
                    }
                    Complex64::new(re.value(), im.value()) * ht
                })
                .collect()
        })
        .collect()
}

/// Coefficients by `L²(C, g)` projection onto each mode:
/// `c_n = ⟨Ψ, φ_n⟩ / ‖φ_n‖²`.
pub fn fourier_decompose(field: &QuadDiffField, n_max: usize) -> Result<FourierQD> {
    let g = &field.grid;
    if 2 * n_max >= g.n_theta() {
        return Err(Error::Nyquist { n_max, n_theta: g.n_theta() });
    }
    let s_ref = g.s_max();
    let mut out = FourierQD::zeros(n_max, s_ref);
    let rows = row_transforms(field, n_max);
    let m = n_max as i64;
    for (k, n) in (-m..=m).enumerate() {
        let mut num_re = NeumaierSum::new();
        let mut num_im = NeumaierSum::new();
        let mut den = NeumaierSum::new();
        for (i, &s) in g.s_nodes().iter().enumerate() {
            let w = g.s_weights()[i] * 4.0 / sq(g.rho()[i]);
            let e = out.mode_scale(n, s);
            let z = rows[i][k] * (w * e);
            num_re.add(z.re);
            num_im.add(z.im);
            den.add(w * e * e * TAU);
        }
        out.coeffs[k] = Complex64::new(num_re.value(), num_im.value()) / den.value();
    }
    Ok(out)
}

/// Samples `Σ c_n e^{ns − |n| s_ref} e^{inθ}` on the grid.
pub fn synthesize(coeffs: &FourierQD, grid: Arc<CollarGrid>) -> QuadDiffField {
    let nt = grid.n_theta();
    let mut psi = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (n, c) in coeffs.modes() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let phases: Vec<Complex64> = grid
            .theta_nodes()
            .iter()
            .map(|&t| Complex64::from_polar(1.0, n as f64 * t))
            .collect();
        for (i, &s) in grid.s_nodes().iter().enumerate() {
            let a = c * coeffs.mode_scale(n, s);
            for j in 0..nt {
                psi[i * nt + j] += a * phases[j];
            }
        }
    }
    QuadDiffField { grid, psi }
}

/// Truncated holomorphic projection onto `span{φ_n : |n| ≤ n_max}` and the
/// principal split of the result.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicProjection {
    pub coeffs: FourierQD,
    pub field: QuadDiffField,
    pub split: PrincipalSplit,
}

pub fn project_holomorphic(field: &QuadDiffField, n_max: usize) -> Result<HolomorphicProjection> {
    let coeffs = fourier_decompose(field, n_max)?;
    let proj = synthesize(&coeffs, field.grid.clone());
    let b0 = coeffs.scaled(0);
    let psi = proj.psi.iter().map(|z| z - b0).collect();
    let split = PrincipalSplit { b0, decay: QuadDiffField { grid: field.grid.clone(), psi } };
    Ok(HolomorphicProjection { coeffs, field: proj, split })
}

/// Constant `K` in `|b₀ − (ℓ³/32π⁵)⟨Ψ, dz²⟩| ≤ K ℓ³ ‖Ψ‖_{L¹}` realised by `Ψ`
/// and the principal coefficient `b0` of its projection.
pub fn principal_part_constant(field: &QuadDiffField, b0: Complex64) -> f64 {
    let ell = field.grid.ell();
    let ell3 = ell * ell * ell;
    let pair = inner_product(field, &QuadDiffField::dz2(field.grid.clone())).expect("same grid");
    let p5 = PI * PI * PI * PI * PI;
    let gap = (b0 - pair * (ell3 / (32.0 * p5))).norm();
    let l1 = lp_norm(field, Norm::L1);
    if l1 == 0.0 {
        0.0
    } else {
        gap / (ell3 * l1)
    }
}

/// Hopf differential `Φ(u, g) = (|u_s|² − |u_θ|² − 2i⟨u_s, u_θ⟩) dz²`.
pub fn hopf_differential(jet: &MapJet) -> QuadDiffField {
    let d = jet.dim();
    let psi = jet
        .u_s()
        .chunks_exact(d)
        .zip(jet.u_theta().chunks_exact(d))
        .map(|(us, ut)| {
            let ss: f64 = us.iter().map(|x| x * x).sum();
            let tt: f64 = ut.iter().map(|x| x * x).sum();
            let st: f64 = us.iter().zip(ut).map(|(a, b)| a * b).sum();
            Complex64::new(ss - tt, -2.0 * st)
        })
        .collect();
    QuadDiffField { grid: jet.grid().clone(), psi }
}

/// One collar-decay sample: `sup_{δ-thin} |Ψ|_g` against `‖Ψ‖_{L²(δ₀-thick)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayMeasurement {
    pub delta: f64,
    pub thin_sup: f64,
    pub thick_l2: f64,
}

impl DecayMeasurement {
    pub fn ratio(&self) -> f64 {
        self.thin_sup / self.thick_l2
    }

    /// `ratio / (δ⁻² e^{−π/δ})`, the constant realised at this `δ`.
    pub fn constant(&self) -> f64 {
        self.ratio() * sq(self.delta) * libm::exp(PI / self.delta)
    }
}

/// Evaluates the collar-decay ratio of a modal differential for several `δ`.
#[derive(Debug, Clone)]
pub struct DecayProbe<'a> {
    coeffs: &'a FourierQD,
    params: CollarParams,
    thick_l2: f64,
}

impl<'a> DecayProbe<'a> {
    /// `grid` should cover the whole collar so that the `δ₀`-thick part is
    /// fully resolved.
    pub fn new(coeffs: &'a FourierQD, grid: Arc<CollarGrid>, delta0: f64) -> Result<Self> {
        let params = grid.params();
        let field = synthesize(coeffs, grid);
        let thick_l2 = lp_norm_on(&field, Norm::L2, Region::Thick(delta0))?;
        Ok(Self { coeffs, params, thick_l2 })
    }

    pub fn thick_l2(&self) -> f64 {
        self.thick_l2
    }

    /// `None` when the `δ`-thin part `(-X_δ, X_δ) × S¹` is empty.
    pub fn measure(&self, delta: f64) -> Result<Option<DecayMeasurement>> {
        let xd = self.params.delta_thin_half_length(delta)?;
        if !(delta > self.params.ell() / 2.0 && xd > 0.0) {
            return Ok(None);
        }
        let thin_sup = self.coeffs.sup_magnitude(self.params, -xd, xd);
        Ok(Some(DecayMeasurement { delta, thin_sup, thick_l2: self.thick_l2 }))
    }
}

/// Least-squares slope of `ln(ratio)` against `−π/δ`.
pub fn decay_slope(samples: &[DecayMeasurement]) -> Option<LinearFit> {
    let xs: Vec<f64> = samples.iter().map(|m| -PI / m.delta).collect();
    let ys: Vec<f64> = samples.iter().map(|m| libm::log(m.ratio())).collect();
    linear_fit(&xs, &ys)
}
