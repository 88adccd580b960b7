//! Variable screening for high-dimensional linear models with serially
//! dependent covariates and errors.
//!
//! * [`dgp`] simulates VAR(1) covariates and AR(1) errors.
//! * [`covest`] estimates banded/tapered Toeplitz autocovariances and solves with them.
//! * [`screen`] computes SIS and GLS screening scores and selected sets.
//! * [`penreg`] fits Lasso / adaptive Lasso paths and the two-stage estimator.
//! * [`depmeas`] evaluates functional dependence measures and asymptotic variances.
//! * [`bench`] runs the Monte-Carlo experiments and the rolling forecast.
//! * [`cli`] drives everything from config files.

pub mod bench;
pub mod cli;
pub mod covest;
pub mod data;
pub mod depmeas;
pub mod dgp;
pub mod error;
pub mod penreg;
pub mod rng;
pub mod screen;

pub use error::{Error, Result};
