//! Numerical inverse scattering for the focusing cubic NLS equation
//! `i u_t + u_xx + 2|u|^2 u = 0`.
//!
//! The crate is organised along the pipeline it implements:
//!
//! * [`potential`] – sampled initial data and its file formats.
//! * [`scattering`] – Zakharov–Shabat direct scattering: Jost solutions,
//!   `a(z)`, `b(z)`, the reflection coefficient, eigenvalue search and
//!   norming constants.
//! * [`soliton`] – reflectionless Riemann–Hilbert problems solved as residue
//!   linear systems (N-solitons, modified couplings, closed-form 1-soliton).
//! * [`asymptotics`] – the `ξ = -x/(4t)` pole classification, Blaschke
//!   factor, `δ(z)`, `ν₀` and the coupling modifiers `Λ_j^±` that define the
//!   long-time asymptotic solitons.
//! * [`rhp`] – a collocation solver for small-norm RHPs on circle contours,
//!   used to check the pole-removal step independently.
//! * [`nls`] – a Strang split-step Fourier solver used as ground truth.
//! * [`verify`] – the stability experiment that ties everything together.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod error;
pub mod io;
pub mod mat2;
pub mod nls;
pub mod potential;
pub mod quadrature;
pub mod rhp;
pub mod scattering;
pub mod soliton;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potential::SampledPotential;
pub use scattering::{ScatteringData, Tolerances};
pub use soliton::SolitonParams;

/// The imaginary unit.
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
