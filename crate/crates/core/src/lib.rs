//! Achievable rate regions for the two-user Gaussian interference channel when
//! the random codebooks are drawn from stationary Gaussian processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: channel parameters, rate pairs and the `eta` rate function.
//! - [`spectra`]: power-normalized ARMA and cosine-series spectral densities.
//! - [`quadrature`]: the spectral rate functional `phi` and its AR closed form.
//! - [`schemes`]: the rate formulas of every coding scheme, plus the Gaussian
//!   Han–Kobayashi baseline.
//! - [`frontier`]: Pareto frontiers, unions, convex hulls and dominance tests.
//! - [`optimizer`]: grid and seeded random searches that produce frontiers.
//! - [`oracle`]: finite-blocklength Toeplitz log-determinant cross-checks.
//! - [`config`] and [`export`]: key-value configuration files, CSV and JSON.

pub mod config;
pub mod error;
pub mod export;
pub mod frontier;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod quadrature;
pub mod schemes;
pub mod spectra;

pub use error::{Error, Result};
pub use frontier::Frontier;
pub use model::{eta, ChannelParams, Provenance, RatePair, SchemeId};
