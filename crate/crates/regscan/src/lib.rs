//! Regression-based spatial scan statistics.
//!
//! Detects spatial (and space-time) clusters by scanning a set of candidate
//! zones with likelihood-ratio statistics derived from regression models.
//! Every statistic comes in two forms that differ only in whether the
//! regression carries an intercept: *population-based* (free common rate
//! under the null) and *expectation-based* (baselines trusted as expected
//! values, no intercept). Closed forms are provided for Poisson, Gaussian
//! (fixed and unknown variance) and Bernoulli outcomes, and a numeric GLM
//! route handles covariate adjustment and doubles as an independent check
//! on the closed forms.
//!
//! The scan itself is also exposed as the equivalent best-subset problem:
//! selecting at most one cluster effect under an L0 constraint reproduces
//! the most likely cluster, budgets above one select multiple disjoint
//! clusters, and the singleton-zone special case with a Lagrangian penalty
//! is a robust mean-shift regression with hard thresholding.
//!
//! Entry points:
//! - [`data`]: region tables, CSV ingestion, scenario simulation
//! - [`zones`]: circular / singleton / space-time cylinder zone sets
//! - [`stats`]: the likelihood-ratio statistics and the GLM engine
//! - [`scan`]: the scan engine, L0 solvers, robust mean shift
//! - [`inference`]: Monte Carlo hypothesis testing
//! - [`cli`]: the `regscan` command-line front end

pub mod cli;
pub mod data;
pub mod error;
pub mod inference;
pub mod scan;
pub mod stats;
pub mod zones;

pub use error::{Error, Result};
