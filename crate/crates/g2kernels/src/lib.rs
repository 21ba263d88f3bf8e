//! Reproducing kernels on the symmetrized bidisc
//! `G2 = {(z1 + z2, z1 z2) : |z1|, |z2| < 1}`.
//!
//! The crate evaluates the weighted Bergman family and the kernels built
//! from it, computes curvature matrices (closed forms, finite differences
//! and group transport), checks quasi-invariance and positivity, and
//! extracts the invariants that separate the resulting Hilbert modules.

pub mod automorphisms;
pub mod cli;
pub mod curvature;
mod error;
pub mod homogeneity;
pub mod hyperdual;
pub mod invariants;
pub mod kernels;
pub mod psd;
pub mod sampling;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// 2x2 complex matrix used for Jacobians and curvature.
pub type Mat2 = nalgebra::Matrix2<C64>;
