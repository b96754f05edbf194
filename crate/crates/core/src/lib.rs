//! Numerical laboratory for the Fourier-Bessel transform.
//!
//! The crate is organised around the objects that appear when studying
//! bandlimited radial functions:
//!
//! * [`bessel`]: the normalized kernel `j_α` (series, asymptotics, exact
//!   exponential decomposition for half-integer orders) and its calibration.
//! * [`measure`]: interval-union subsets of ℝ⁺, the weighted measure `μ_α`
//!   and relative-density scans.
//! * [`transform`]: quadrature grids, band profiles, forward/inverse
//!   transforms, Plancherel checks and the Bochner order reduction.
//! * [`pls`]: the observability constant κ of a set for functions with
//!   spectrum in one or several unit bands.
//! * [`inequality`]: Nazarov-Turán and Bernstein ratio experiments.
//! * [`damped_wave`]: spectral simulation of radial fractional damped waves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod damped_wave;
pub mod error;
pub mod inequality;
pub mod measure;
pub mod numeric;
pub mod pls;
pub mod rng;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
