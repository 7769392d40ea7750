//! Explicit hyperbolic collar geometry, quadratic differentials on collars,
//! and a collar model of the Teichmüller harmonic map flow.
//!
//! The crate is `no_std` and only needs `alloc`. Every routine is a pure
//! function over immutable values; reductions run in a fixed order so results
//! are bit-reproducible.
//!
//! Module map:
//! - [`geometry`]: the collar `(-X(ℓ), X(ℓ)) × S¹` with metric `ρ²(ds² + dθ²)`,
//!   injectivity radius, thin/thick parts, norms of `dz²`, quadrature grids.
//! - [`quad_diff`]: quadratic differentials `ψ dz²`, Fourier modes, principal
//!   part, holomorphic projection, Hopf differential, collar decay.
//! - [`fields`]: maps into flat tori or round spheres, finite-difference jets,
//!   tension, the weighted energies `I`, `I^(θ)` and the smoothed `𝓘`.
//! - [`flow`]: the coupled map/length flow and its instrumentation.
//! - [`angular`]: the delay operator, comparison principle and angular audits.
//! - [`wp`]: Weil–Petersson pinching paths and the distance-to-pinch expansion.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod angular;
mod error;
pub mod fields;
pub mod flow;
pub mod geometry;
mod math;
pub mod ode;
pub mod quad_diff;
pub mod wp;

pub use error::{Error, Result};
pub use math::{linear_fit, LinearFit, NeumaierSum};
pub use num_complex::Complex64;
