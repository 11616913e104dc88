//! Quantile-parameterized distribution fit of an inverse CDF `u ↦ x`, with
//! basis `1, Φ*⁻¹(u), u·Φ*⁻¹(u), u` where `Φ*` is a truncated normal.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::Dataset;
use crate::error::{Error, Result};

const GRID: usize = 2001;
const TERMS: usize = 4;

/// Truncated-normal base for the basis. Defaults come from the domain:
/// truncated to `[lower, upper]`, centred at `lower`, sd half the span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpdConfig {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub sd: f64,
}

impl QpdConfig {
    pub fn for_interval(lower: f64, upper: f64) -> Self {
        Self { lower, upper, center: lower, sd: (upper - lower) / 2.0 }
    }

    fn quantile(&self, u: f64) -> f64 {
        let std = Normal::standard();
        let a = std.cdf((self.lower - self.center) / self.sd);
        let b = std.cdf((self.upper - self.center) / self.sd);
        let p = (a + u * (b - a)).clamp(a, b);
        let z = std.inverse_cdf(p);
        (self.center + self.sd * z).clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpdFit {
    pub coefficients: [f64; TERMS],
    pub config: QpdConfig,
    /// False when the fitted `u ↦ x` map is not monotone on the grid, in which
    /// case estimates fall back to the nearest grid value.
    pub monotone: bool,
    /// Number of utilities clamped into `[0, 1]` before fitting.
    pub clamped: usize,
}

impl QpdFit {
    fn basis(&self, u: f64) -> [f64; TERMS] {
        basis_row(&self.config, u)
    }

    /// Fitted inverse CDF `x = F⁻¹(u)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        self.basis(u).iter().zip(&self.coefficients).map(|(g, a)| g * a).sum()
    }
}

fn basis_row(cfg: &QpdConfig, u: f64) -> [f64; TERMS] {
    let q = cfg.quantile(u);
    [1.0, q, u * q, u]
}

fn grid_u(k: usize) -> f64 {
    k as f64 / (GRID - 1) as f64
}

pub fn fit_qpd(dataset: &Dataset) -> Result<QpdFit> {
    let (lo, hi) = (dataset.domain().lower()[0], dataset.domain().upper()[0]);
    fit_qpd_with(dataset, QpdConfig::for_interval(lo, hi))
}

pub fn fit_qpd_with(dataset: &Dataset, config: QpdConfig) -> Result<QpdFit> {
    if dataset.dim() != 1 {
        return Err(Error::Unsupported("QPD fits need a single attribute".into()));
    }
    let n = dataset.len();
    if n < TERMS {
        return Err(Error::TooFewPoints { needed: TERMS, got: n });
    }
    if !(config.sd > 0.0 && config.upper > config.lower) {
        return Err(Error::Validation("QPD base needs sd > 0 and lower < upper".into()));
    }
    let mut clamped = 0;
    let mut g = DMatrix::zeros(n, TERMS);
    let mut x = DVector::zeros(n);
    for (i, t) in dataset.tuples().iter().enumerate() {
        let u = t.u.clamp(0.0, 1.0);
        if u != t.u {
            clamped += 1;
        }
        for (j, v) in basis_row(&config, u).into_iter().enumerate() {
            g[(i, j)] = v;
        }
        x[i] = t.x[0];
    }
    // Column scaling keeps the rank test meaningful when x spans many decades.
    let norms: Vec<f64> = (0..TERMS).map(|j| g.column(j).norm()).collect();
    let mut gs = g.clone();
    for (j, &s) in norms.iter().enumerate() {
        if s == 0.0 {
            return Err(Error::Rank("QPD basis column is identically zero".into()));
        }
        gs.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = gs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Rank(format!("QPD basis matrix is rank-deficient (condition {:.3e})", smax / smin)));
    }
    let a = svd.solve(&x, 0.0).map_err(|e| Error::Rank(e.to_string()))?;
    let mut coefficients = [0.0; TERMS];
    for j in 0..TERMS {
        coefficients[j] = a[j] / norms[j];
    }
    let mut fit = QpdFit { coefficients, config, monotone: true, clamped };
    let values = fit_grid(&fit);
    let inc = values.windows(2).all(|w| w[1] >= w[0]);
    let dec = values.windows(2).all(|w| w[1] <= w[0]);
    fit.monotone = inc || dec;
    Ok(fit)
}

/// Utility implied by the fit at outcome `x`: the `u` with `F⁻¹(u) = x`.
/// Outcomes beyond the fitted range map to the nearer end of `[0, 1]`.
pub fn qpd_estimate(fit: &QpdFit, x: f64) -> f64 {
    estimate_on(fit, &fit_grid(fit), x)
}

/// [`qpd_estimate`] at many outcomes, sharing the grid evaluation.
pub fn qpd_estimate_many(fit: &QpdFit, xs: &[f64]) -> Vec<f64> {
    let values = fit_grid(fit);
    xs.iter().map(|&x| estimate_on(fit, &values, x)).collect()
}

fn fit_grid(fit: &QpdFit) -> Vec<f64> {
    (0..GRID).map(|k| fit.inverse_cdf(grid_u(k))).collect()
}

fn estimate_on(fit: &QpdFit, values: &[f64], x: f64) -> f64 {
    if !fit.monotone {
        let k = values
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        return grid_u(k);
    }
    let increasing = values[GRID - 1] >= values[0];
    let d = |v: f64| if increasing { v - x } else { x - v };
    if d(values[0]) >= 0.0 {
        return 0.0;
    }
    if d(values[GRID - 1]) <= 0.0 {
        return 1.0;
    }
    let k = values.partition_point(|&v| d(v) < 0.0);
    let (mut lo, mut hi) = (grid_u(k - 1), grid_u(k));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d(fit.inverse_cdf(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeDomain, NoiseModel};

    fn data(pairs: &[(f64, f64)], lo: f64, hi: f64) -> Dataset {
        let (xs, us): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        Dataset::from_pairs(AttributeDomain::interval(lo, hi).unwrap(), &xs, &us, NoiseModel::NoiseFree).unwrap()
    }

    #[test]
    fn base_quantile_hits_truncation_limits() {
        let c = QpdConfig::for_interval(0.0, 1e5);
        assert!((c.quantile(0.0) - 0.0).abs() < 1e-6);
        assert!((c.quantile(1.0) - 1e5).abs() < 1e-6);
        assert!(c.quantile(0.5) > 0.0 && c.quantile(0.5) < 1e5);
    }

    #[test]
    fn affine_inverse_is_recovered() {
        let us = [0.0, 0.1, 0.3, 0.45, 0.6, 0.8, 1.0];
        let pairs: Vec<(f64, f64)> = us.iter().map(|&u| (2.0 + 8.0 * u, u)).collect();
        let fit = fit_qpd(&data(&pairs, 2.0, 10.0)).unwrap();
        assert!(fit.monotone);
        for x in [2.0, 3.3, 5.0, 7.77, 10.0] {
            assert!((qpd_estimate(&fit, x) - (x - 2.0) / 8.0).abs() < 1e-6);
        }
    }

    #[test]
    fn four_points_are_interpolated() {
        let pairs = [(0.0, 0.0), (3.0, 0.2), (6.0, 0.55), (10.0, 1.0)];
        let fit = fit_qpd(&data(&pairs, 0.0, 10.0)).unwrap();
        for &(x, u) in &pairs {
            assert!((fit.inverse_cdf(u) - x).abs() < 1e-8);
            if fit.monotone {
                assert!((qpd_estimate(&fit, x) - u).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn too_few_points_and_rank() {
        let pairs = [(0.0, 0.0), (5.0, 0.5), (10.0, 1.0)];
        assert!(matches!(fit_qpd(&data(&pairs, 0.0, 10.0)), Err(Error::TooFewPoints { .. })));
        let flat = data(&[(0.0, 0.5), (2.0, 0.5), (5.0, 0.5), (10.0, 0.5)], 0.0, 10.0);
        assert!(matches!(fit_qpd(&flat), Err(Error::Rank(_))));
    }

    #[test]
    fn nonmonotone_falls_back_to_grid() {
        let fit = QpdFit {
            coefficients: [0.0, 0.0, 0.0, 1.0],
            config: QpdConfig::for_interval(0.0, 1.0),
            monotone: false,
            clamped: 0,
        };
        let u = qpd_estimate(&fit, 0.25);
        assert!((u - 0.25).abs() <= 0.5 / (GRID - 1) as f64);
    }
}
