//! Numerical laboratory for transport-diffusion equations whose drift is a
//! vector of rough singular-integral operators.
//!
//! The crate discretizes scalar fields on a periodic box approximating
//! `R^n` (`n = 2, 3`), realizes the rough convolution operators with
//! merely `L^rho`-integrable angular kernels, runs the Picard iteration
//! on the Duhamel (mild-solution) formulation of three drift variants,
//! and property-tests every functional inequality, scaling identity and
//! singular time integral the construction rests on.
//!
//! Layout:
//! - [`grid`], [`field`], [`multiplier`]: periodic-box substrate, FFT
//!   calculus, Lebesgue quadrature.
//! - [`sphere`], [`budget`]: angular kernels on `S^{n-1}` and the
//!   admissible-exponent calculator.
//! - [`ops`]: rough operators, truncations, maximal functions, Riesz
//!   transforms, heat semigroup.
//! - [`norms`]: caloric Besov norms and the weighted-in-time resolution
//!   norms.
//! - [`quadrature`]: graded product quadrature for the weakly singular
//!   Duhamel time integrals.
//! - [`solver`]: the Picard fixed-point driver and smallness scans.
//! - [`corpus`], [`ineq`]: function corpora and the inequality harness.
//! - [`config`], [`run`], [`io`]: experiment configs, orchestration,
//!   manifests and file formats.

pub mod budget;
pub mod config;
pub mod corpus;
pub mod error;
pub mod field;
mod fft;
pub mod grid;
pub mod ineq;
pub mod io;
pub mod multiplier;
pub mod norms;
pub mod ops;
pub mod quadrature;
pub mod run;
pub mod solver;
pub mod sphere;


pub use error::{Error, Result};
pub use field::{transform, Direction, Field, Repr};
pub use grid::Grid;
pub use multiplier::{apply_multiplier, Multiplier, ZeroModePolicy};




