//! Nonparametric estimation of Archimedean copula generators from samples of
//! test statistics, and calibration of local significance levels for
//! single-step multiple testing procedures that control the family-wise error
//! rate.
//!
//! The pipeline: draw (or bootstrap) a sample of statistic vectors, rank them
//! into multivariate pseudo-observations, build the empirical Kendall
//! distribution function, fit a generator that interpolates it, and read the
//! local level off the diagonal of the fitted copula.
//!
//! Modules
//! - [`rng`]: a small splittable counter-based PRNG so every run is
//!   reproducible from a single `u64` seed.
//! - [`sampling`]: samplers for Gumbel copulas, equi-correlated Gaussian data,
//!   and bootstrap index matrices.
//! - [`kendall`]: pseudo-observations and the (modified) empirical Kendall
//!   distribution function.
//! - [`generator`]: generator representations, fitting, copula diagonals and
//!   diagonal quantiles.
//! - [`mtp`]: p-values, local-level calibration, test decisions and error
//!   metrics.
//! - [`sim`]: simulation studies behind the `archcal sim` subcommand.
//! - [`plot`]: minimal deterministic SVG line plots for simulation summaries.

pub mod error;
pub mod generator;
pub mod kendall;
pub mod mtp;
pub mod plot;
pub mod rng;
pub mod sampling;
pub mod sim;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
