//! Limiting spectral moments of tridiagonal and band random matrices,
//! computed by exact enumeration of bounded lattice paths, together with
//! the first-order (1/n) corrections, the Gaussian fluctuation covariances
//! of linear spectral statistics, the limiting eigenvalue densities, and
//! seeded Monte Carlo machinery to verify all of it against sampled
//! ensembles.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`paths`] — closed lattice paths with bounded steps and their level
//!   statistics (crossing counts, flat counts, banded and colored variants);
//! * [`moments`] — limit moments, the moment/path-count triangular system
//!   and its inversion, first-order deviations, band and multi-matrix
//!   mixed moments;
//! * [`fluctuations`] — covariance of centered trace powers (the limiting
//!   Gaussian field of linear statistics);
//! * [`densities`] — the power-scaled arcsine densities, Chebyshev-like
//!   block spectra, and the two-point (Bernoulli) mixture measures;
//! * [`ensembles`] — samplers for the random matrices themselves, a Sturm
//!   bisection eigensolver, exact trace powers, and Monte Carlo runners;
//! * [`verify`] — the predicted-vs-empirical regression harness used by the
//!   `trimoment verify` subcommand.

pub mod densities;
pub mod eigen;
pub mod ensembles;
pub mod error;
pub mod fluctuations;
pub mod moments;
pub mod paths;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
