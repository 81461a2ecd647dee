//! Spectral toolkit for one convex-integration step of the 2D hypoviscous
//! Navier–Stokes equations on the torus `[0, 2pi)^2`.
//!
//! Fields are band-limited trigonometric polynomials ([`field`]); the operator
//! calculus ([`calculus`]), building blocks ([`blocks`]), the geometric
//! decomposition ([`geometry`]) and the parameter schedule ([`schedule`]) feed
//! the iteration step ([`step`]), which is driven by the [`cli`] commands.

pub mod blocks;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod fft;
pub mod field;
pub mod geometry;
pub mod io;
pub mod lemmas;
pub mod quadrature;
pub mod schedule;
pub mod step;
pub mod track;

pub use error::{CiError, Result};
pub use field::{Grid2, Rank, SpectralField};
pub use rustfft::num_complex::Complex64;
