//! One-dimensional correlation functions, their derivatives, and the
//! product correlation over attributes.
//!
//! Distances are plain absolute differences per attribute; the range
//! parameter `gamma` of each attribute carries its scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Correlation family of one attribute. The roughness parameter, where the
/// family has one, is fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum KernelFamily {
    PowerExponential { nu: f64 },
    Spherical,
    RationalQuadratic { nu: f64 },
    Matern52,
}

impl KernelFamily {
    pub fn power_exponential(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 2.0) {
            return Err(Error::Domain(format!("power-exponential roughness {nu} not in (0, 2]")));
        }
        Ok(Self::PowerExponential { nu })
    }

    pub fn rational_quadratic(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("rational-quadratic roughness {nu} must be positive")));
        }
        Ok(Self::RationalQuadratic { nu })
    }

    /// Whether the derivative in `gamma` (needed by the reference prior) is
    /// available.
    pub fn has_gamma_derivative(&self) -> bool {
        matches!(self, Self::Matern52 | Self::PowerExponential { .. })
    }

    /// Unchecked evaluation; callers guarantee `d >= 0`, `gamma > 0`.
    #[inline]
    pub(crate) fn eval(&self, d: f64, gamma: f64) -> f64 {
        let r = d / gamma;
        match *self {
            Self::Matern52 => {
                let a = SQRT5 * r;
                (1.0 + a + a * a / 3.0) * (-a).exp()
            }
            Self::PowerExponential { nu } => (-r.powf(nu)).exp(),
            Self::Spherical => {
                if r <= 1.0 {
                    1.0 - 1.5 * r + 0.5 * r * r * r
                } else {
                    0.0
                }
            }
            Self::RationalQuadratic { nu } => (1.0 + r * r).powf(-nu),
        }
    }

    #[inline]
    pub(crate) fn eval_dgamma(&self, d: f64, gamma: f64) -> Option<f64> {
        match *self {
            Self::Matern52 => {
                let a = SQRT5 * d / gamma;
                Some(5.0 * d * d / (3.0 * gamma.powi(3)) * (1.0 + a) * (-a).exp())
            }
            Self::PowerExponential { nu } => {
                if d == 0.0 {
                    return Some(0.0);
                }
                let rn = (d / gamma).powf(nu);
                Some((-rn).exp() * nu * rn / gamma)
            }
            _ => None,
        }
    }
}

fn check_args(d: f64, gamma: f64) -> Result<()> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("distance {d} must be non-negative")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("range parameter {gamma} must be positive")));
    }
    Ok(())
}

pub fn corr_1d(family: KernelFamily, d: f64, gamma: f64) -> Result<f64> {
    check_args(d, gamma)?;
    Ok(family.eval(d, gamma))
}

/// Partial derivative of the correlation in the range parameter.
pub fn corr_1d_dgamma(family: KernelFamily, d: f64, gamma: f64) -> Result<f64> {
    check_args(d, gamma)?;
    family
        .eval_dgamma(d, gamma)
        .ok_or_else(|| Error::Unsupported(format!("no range derivative for {family:?}")))
}

/// Per-attribute families and range parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    families: Vec<KernelFamily>,
    gammas: Vec<f64>,
}

impl KernelSpec {
    pub fn new(families: Vec<KernelFamily>, gammas: Vec<f64>) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::Validation("kernel needs at least one attribute".into()));
        }
        if families.len() != gammas.len() {
            return Err(Error::Length { left: families.len(), right: gammas.len() });
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::Domain(format!("range parameter {g} must be positive and finite")));
        }
        Ok(Self { families, gammas })
    }

    pub fn matern52(gammas: Vec<f64>) -> Result<Self> {
        Self::new(vec![KernelFamily::Matern52; gammas.len()], gammas)
    }

    pub fn dim(&self) -> usize {
        self.families.len()
    }

    pub fn families(&self) -> &[KernelFamily] {
        &self.families
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval(&self, xa: &[f64], xb: &[f64]) -> f64 {
        self.families
            .iter()
            .zip(&self.gammas)
            .zip(xa.iter().zip(xb))
            .map(|((f, &g), (a, b))| f.eval((a - b).abs(), g))
            .product()
    }

    pub fn product_corr(&self, xa: &[f64], xb: &[f64]) -> Result<f64> {
        self.check_dim(xa)?;
        self.check_dim(xb)?;
        Ok(self.eval(xa, xb))
    }

    /// Gram matrix of the rows of `design` (`n x p`).
    pub fn gram(&self, design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if design.ncols() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: design.ncols() });
        }
        let rows: Vec<Vec<f64>> = design.row_iter().map(|r| r.iter().copied().collect()).collect();
        Ok(self.gram_rows(&rows))
    }

    pub(crate) fn gram_rows(&self, rows: &[Vec<f64>]) -> DMatrix<f64> {
        let n = rows.len();
        let mut c = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = self.eval(&rows[i], &rows[j]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }

    /// Correlations between `x` and every row of `rows`.
    pub(crate) fn cross(&self, rows: &[Vec<f64>], x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(rows.len(), rows.iter().map(|r| self.eval(r, x)))
    }

    /// Derivative of the Gram matrix in the range parameter of `attribute`.
    pub(crate) fn gram_dgamma(&self, rows: &[Vec<f64>], attribute: usize) -> Result<DMatrix<f64>> {
        let fam = self.families[attribute];
        if !fam.has_gamma_derivative() {
            return Err(Error::Unsupported(format!("no range derivative for {fam:?}")));
        }
        let n = rows.len();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let mut v = 1.0;
                for (l, (f, &g)) in self.families.iter().zip(&self.gammas).enumerate() {
                    let d = (rows[i][l] - rows[j][l]).abs();
                    v *= if l == attribute {
                        f.eval_dgamma(d, g).unwrap_or(0.0)
                    } else {
                        f.eval(d, g)
                    };
                }
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }
}

fn require_positive(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("range parameter {gamma} must be positive")));
    }
    Ok(())
}

/// Covariance (per unit variance) between `u(x_i)` and `u'(x_star)` for the
/// Matérn-5/2 kernel: the derivative of `c(x_i, x)` in `x` at `x_star`.
pub fn cross_cov_first(x_design: &[f64], x_star: f64, gamma: f64) -> Result<DVector<f64>> {
    require_positive(gamma)?;
    Ok(DVector::from_iterator(
        x_design.len(),
        x_design.iter().map(|&xi| {
            let d = (x_star - xi).abs();
            let g = if x_star >= xi { 1.0 } else { -1.0 };
            -(5.0 * g / (3.0 * gamma * gamma)) * (d + SQRT5 * d * d / gamma) * (-SQRT5 * d / gamma).exp()
        }),
    ))
}

/// Covariance (per unit variance) between `u(x_i)` and `u''(x_star)` for the
/// Matérn-5/2 kernel.
pub fn cross_cov_second(x_design: &[f64], x_star: f64, gamma: f64) -> Result<DVector<f64>> {
    require_positive(gamma)?;
    Ok(DVector::from_iterator(
        x_design.len(),
        x_design.iter().map(|&xi| {
            let d = (x_star - xi).abs();
            let r = d / gamma;
            5.0 / (3.0 * gamma * gamma) * (5.0 * r * r - 1.0 - SQRT5 * r) * (-SQRT5 * r).exp()
        }),
    ))
}

/// Variances of `u'(x)` and `u''(x)` per unit process variance under the
/// Matérn-5/2 kernel.
pub fn deriv_variances(gamma: f64) -> Result<(f64, f64)> {
    require_positive(gamma)?;
    Ok((5.0 / (3.0 * gamma * gamma), 25.0 / gamma.powi(4)))
}
