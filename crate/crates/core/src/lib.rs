//! Compressive phase retrieval from Gaussian quadratic measurements.
//!
//! A k-sparse signal `x ∈ ℝⁿ` is recovered from `b_j = ⟨z_j, x⟩²` by solving
//! the lifted convex program
//!
//! ```text
//! minimize ‖X‖₁ + λ Tr(X)   subject to   z_jᵀ X z_j = b_j,  X ⪰ 0
//! ```
//!
//! and reading `x` off the leading eigenvector. Alongside the solver the
//! crate builds golfing-scheme dual certificates, checks the probabilistic
//! lemmas behind the analysis by Monte Carlo, and drives recovery sweeps.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certificate;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
