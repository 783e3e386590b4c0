//! Numerical library for Lyapunov spectra of orthogonal-plus-Gaussian matrix
//! cocycles A_n = O_n + eps N_n.
//!
//! Four independent routes to the spectrum live in [`estimators`]:
//!
//! - direct product simulation with periodic QR re-orthonormalization;
//! - the exact one-step Monte Carlo, averaging log Gram-Schmidt norms of
//!   I + eps N;
//! - the same protocol on the cheaper first-order approximant columns;
//! - the closed-form small-noise spectrum (d - 2k) eps^2 / 2.
//!
//! Around them: dense small-matrix kernels ([`matrix`]), reproducible
//! splittable random streams and cocycle specifications ([`ensembles`],
//! [`rng`]), mergeable statistics and a two-sample KS test ([`stats`]), and
//! adaptive quadrature oracles for the scalar case ([`quadrature`]).

pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
