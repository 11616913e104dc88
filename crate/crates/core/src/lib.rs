//! Nonparametric estimation of utility functions.
//!
//! A utility function is estimated from a handful of assessed
//! `(outcome, utility)` tuples with a Gaussian stochastic process (GaSP)
//! whose range parameters are set at the mode of their marginal posterior
//! under the reference prior. Predictions are Student-t, and for a single
//! attribute with the Matérn-5/2 kernel the first and second derivative
//! processes are available in closed form, which gives posterior
//! statements about risk attitude.
//!
//! The [`baselines`] module holds the estimators the GaSP is compared
//! against and [`experiments`] reproduces the simulation and holdout
//! protocols.

pub mod baselines;
pub mod basis;
pub mod derivatives;
pub mod domain;
mod error;
pub mod experiments;
pub mod gasp;
pub mod kernels;
mod linalg;
pub mod optim;

pub use basis::{BasisFunction, MeanBasis};
pub use derivatives::{CurvatureLabel, CurvatureReport, TieRule};
pub use domain::{AssessedTuple, AttributeDomain, Dataset, NoiseModel};
pub use error::{Error, Result};
pub use gasp::{FitConfig, FittedGasp, ModeScale, NuggetMode, OptimizerConfig, PredictiveT};
pub use kernels::{KernelFamily, KernelSpec};
