//! Convex aggregation of the logarithms of density estimators.
//!
//! Two aggregation procedures are provided. The D-procedure combines the
//! centered log-estimators `t_k` and renormalizes, so the aggregate of
//! probability densities is again a probability density. The S-procedure
//! combines the log-ratios `g_k = log(f_k / h)` without renormalization and
//! is suited to spectral densities of stationary Gaussian sequences. Both
//! select their weights by maximizing a penalized likelihood criterion over
//! the probability simplex.
//!
//! The crate also ships the supporting numerics (grid-function calculus,
//! Fourier/Sobolev machinery, Toeplitz matrices, samplers, hypercube
//! lower-bound families) and a Monte Carlo harness that checks the oracle
//! inequalities in deviation at desk scale.

pub mod density_agg;
pub mod fourier;
pub mod harness;
pub mod measures;
pub mod simplex_opt;
pub mod simulate;
pub mod spectral_agg;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Tolerance for identity-type checks (floating-point noise).
pub const TOL_IDENTITY: f64 = 1e-9;
/// Tolerance for quadrature-limited comparisons (discretization error).
pub const TOL_QUADRATURE: f64 = 1e-6;
