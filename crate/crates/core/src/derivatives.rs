//! Predictive distributions of `u'` and `u''` (single attribute, Matérn-5/2)
//! and the risk-attitude summaries built on them.

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::gasp::{FittedGasp, PredictiveT};
use crate::kernels::{cross_cov_first, cross_cov_second, deriv_variances, KernelFamily};

/// Below this the first-derivative location is treated as zero.
pub const SLOPE_EPS: f64 = 1e-10;

fn require_matern_1d(model: &FittedGasp) -> Result<f64> {
    let spec = model.kernel();
    if spec.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "derivative processes need a single attribute, model has {}",
            spec.dim()
        )));
    }
    if spec.families()[0] != KernelFamily::Matern52 {
        return Err(Error::Unsupported(format!(
            "derivative processes need the Matérn-5/2 kernel, got {:?}",
            spec.families()[0]
        )));
    }
    Ok(spec.gammas()[0])
}

/// Student-t predictive of `u'(x)` (`order = 1`) or `u''(x)` (`order = 2`).
pub fn predict_derivative(model: &FittedGasp, x: f64, order: u8) -> Result<PredictiveT> {
    let gamma = require_matern_1d(model)?;
    let xs: Vec<f64> = model.rows().iter().map(|r| r[0]).collect();
    let (c11, c22) = deriv_variances(gamma)?;
    let (cross, prior_var) = match order {
        1 => (cross_cov_first(&xs, x, gamma)?, c11),
        2 => (cross_cov_second(&xs, x, gamma)?, c22),
        _ => return Err(Error::Validation(format!("derivative order must be 1 or 2, got {order}"))),
    };
    let h_star = model.basis().derivative_row(x, order)?;
    let (location, var) = model.predictive_parts(&cross, prior_var, &h_star);
    Ok(PredictiveT { location, scale2: (model.sigma2() * var).max(0.0), dof: model.dof() })
}

/// Posterior probability that `u''(x) <= 0`.
pub fn prob_concave_at(model: &FittedGasp, x: f64) -> Result<f64> {
    Ok(predict_derivative(model, x, 2)?.cdf(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureLabel {
    Concave,
    Convex,
    Mixed,
}

/// What to do with points whose curvature evidence is exactly balanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieRule {
    #[default]
    CountConvex,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureOptions {
    pub threshold: f64,
    pub tie_rule: TieRule,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self { threshold: 2.0 / 3.0, tie_rule: TieRule::CountConvex }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub grid_size: usize,
    pub proportion_concave: f64,
    pub proportion_convex: f64,
    pub label: CurvatureLabel,
    pub threshold: f64,
}

impl CurvatureReport {
    /// `signs`: `Some(true)` concave, `Some(false)` convex, `None` tie.
    fn from_signs(signs: impl Iterator<Item = Option<bool>>, options: CurvatureOptions) -> Self {
        let (mut concave, mut convex, mut total) = (0usize, 0usize, 0usize);
        for s in signs {
            total += 1;
            match (s, options.tie_rule) {
                (Some(true), _) => concave += 1,
                (Some(false), _) | (None, TieRule::CountConvex) => convex += 1,
                (None, TieRule::Drop) => {}
            }
        }
        let counted = concave + convex;
        let (pc, pv) = if counted == 0 {
            (0.0, 0.0)
        } else {
            (concave as f64 / counted as f64, convex as f64 / counted as f64)
        };
        let label = if pc > options.threshold {
            CurvatureLabel::Concave
        } else if pv > options.threshold {
            CurvatureLabel::Convex
        } else {
            CurvatureLabel::Mixed
        };
        Self { grid_size: total, proportion_concave: pc, proportion_convex: pv, label, threshold: options.threshold }
    }
}

/// Equally spaced interior grid with a half-step inset from both ends.
pub fn inset_grid(lower: f64, upper: f64, size: usize) -> Vec<f64> {
    let step = (upper - lower) / size as f64;
    (0..size).map(|k| lower + (k as f64 + 0.5) * step).collect()
}

/// Global curvature classification from `P(u'' <= 0 | data)` on a grid.
pub fn classify_curvature(model: &FittedGasp, grid_size: usize, options: CurvatureOptions) -> Result<CurvatureReport> {
    require_matern_1d(model)?;
    if grid_size == 0 {
        return Err(Error::Validation("grid_size must be positive".into()));
    }
    let dom = model.dataset().domain();
    let grid = inset_grid(dom.lower()[0], dom.upper()[0], grid_size);
    let probs = prob_grid(model, &grid)?;
    Ok(CurvatureReport::from_signs(
        probs.into_iter().map(|p| if p > 0.5 { Some(true) } else if p < 0.5 { Some(false) } else { None }),
        options,
    ))
}

fn prob_grid(model: &FittedGasp, grid: &[f64]) -> Result<Vec<f64>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(|&x| prob_concave_at(model, x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(|&x| prob_concave_at(model, x)).collect()
    }
}

/// Curvature classification from the empirical slope changes of the
/// assessed points: at each interior point, `S+ - S-` (slope to the right
/// neighbour minus slope to the left neighbour) is negative when concave.
pub fn classify_curvature_li(dataset: &Dataset, options: CurvatureOptions) -> Result<CurvatureReport> {
    if dataset.dim() != 1 {
        return Err(Error::Unsupported("slope-change classification needs a single attribute".into()));
    }
    if dataset.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: dataset.len() });
    }
    let sorted = dataset.sorted_by_x();
    let pts: Vec<(f64, f64)> = sorted.tuples().iter().map(|t| (t.x[0], t.u)).collect();
    let signs = pts.windows(3).map(|w| {
        let s_minus = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s_plus = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        let ds = s_plus - s_minus;
        if ds < 0.0 {
            Some(true)
        } else if ds > 0.0 {
            Some(false)
        } else {
            None
        }
    });
    Ok(CurvatureReport::from_signs(signs, options))
}

/// Plug-in Arrow–Pratt coefficient `-u''(x) / u'(x)` from the predictive
/// locations.
pub fn local_risk_aversion(model: &FittedGasp, x: f64) -> Result<f64> {
    let slope = predict_derivative(model, x, 1)?.location;
    if slope.abs() <= SLOPE_EPS {
        return Err(Error::NearZeroSlope(slope));
    }
    let curvature = predict_derivative(model, x, 2)?.location;
    Ok(-curvature / slope)
}
