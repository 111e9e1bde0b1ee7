//! Numerical verification of the relation between Maslov index, symplectic
//! area and mean curvature form for Lagrangian immersions in Kähler–Einstein
//! manifolds:
//!
//! ```text
//! μ(F) - 2λ·ω(F) = σ_L(∂F) / π
//! ```
//!
//! Each term is computed by its own code path (phase winding, area
//! quadrature, boundary integral of the mean curvature form) and the identity
//! is checked as a residual.

// `!(x < tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod canonical;
pub mod cli;
pub mod constructor;
pub mod error;
pub mod lagrangian;
pub mod quadrature;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
