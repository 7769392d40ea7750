//! Small numeric helpers shared by the modules.

pub(crate) use core::f64::consts::PI;

pub(crate) const TAU: f64 = 2.0 * PI;

/// `arsinh(1) = ln(1 + √2)`.
pub(crate) const ASINH_1: f64 = 0.881_373_587_019_543_f64;

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}

/// Compensated (Neumaier) summation. Deterministic for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl core::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub(crate) fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Ordinary least squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits a straight line through `(xs[i], ys[i])`. Returns `None` for fewer than
/// two points or a degenerate abscissa.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = csum(xs.iter().copied()) / nf;
    let my = csum(ys.iter().copied()) / nf;
    let sxx = csum(xs.iter().map(|x| sq(x - mx)));
    let sxy = csum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = csum(ys.iter().map(|y| sq(y - my)));
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sq(sxy) / (sxx * syy) } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Finite-difference weights for derivatives `0..=order` at `x0` from the
/// stencil `xs` (Fornberg's recursion). Row `k` of the result holds the
/// weights of the `k`-th derivative.
pub(crate) fn fd_weights(x0: f64, xs: &[f64], order: usize) -> alloc::vec::Vec<alloc::vec::Vec<f64>> {
    use alloc::vec;
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
