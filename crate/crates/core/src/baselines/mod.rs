//! Comparison estimators: Wiener-process / linear interpolation, parametric
//! least-squares fits, quantile-parameterized distributions and the
//! multilinear RandMAU model.

pub mod parametric;
pub mod qpd;
pub mod randmau;
pub mod wiener;

pub use parametric::{fit_parametric, ParametricFamily, ParametricFit, ParametricModel};
pub use qpd::{fit_qpd, fit_qpd_with, qpd_estimate, qpd_estimate_many, QpdConfig, QpdFit};
pub use randmau::{omega_residual, randmau_evaluate, randmau_fit_nls, solve_omega, RandMauFit, RandMauModel};
pub use wiener::{linear_interpolate, wiener_predict, WienerPosterior};
