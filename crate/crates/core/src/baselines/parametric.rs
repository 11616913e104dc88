//! Exponential and power utility fits by least squares.
//!
//! For a fixed shape parameter the model is linear in `(a, b)`, so the shape
//! is searched in one dimension with `(a, b)` profiled out.

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::optim::{log_spaced, NelderMead};

/// Smallest admissible `b`; fits that want `b <= 0` are pinned here.
pub const B_MIN: f64 = 1e-12;

const STARTS_PER_SIGN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParametricFamily {
    Exponential,
    Power,
}

/// Fitted parametric utility.
///
/// `Exponential`: `a - b·sgn(rho)·exp(-(x - shift)/rho)`.
/// `Power`: `a + b·sgn(alpha)·sgn(x)·|x/scale|^alpha`.
///
/// `shift` and `scale` only rescale `b` and keep the stored values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ParametricModel {
    Exponential { a: f64, b: f64, rho: f64, shift: f64 },
    Power { a: f64, b: f64, alpha: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricFit {
    pub model: ParametricModel,
    pub residual_sse: f64,
    pub converged: bool,
}

impl ParametricModel {
    pub fn family(&self) -> ParametricFamily {
        match self {
            Self::Exponential { .. } => ParametricFamily::Exponential,
            Self::Power { .. } => ParametricFamily::Power,
        }
    }

    /// The shape parameter (`rho` or `alpha`).
    pub fn shape(&self) -> f64 {
        match *self {
            Self::Exponential { rho, .. } => rho,
            Self::Power { alpha, .. } => alpha,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { a, b, rho, shift } => a + b * exp_feature(x, rho, shift),
            Self::Power { a, b, alpha, scale } => a + b * power_feature(x, alpha, scale),
        }
    }
}

impl ParametricFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(x)
    }
}

fn exp_feature(x: f64, rho: f64, shift: f64) -> f64 {
    -rho.signum() * (-(x - shift) / rho).exp()
}

fn power_feature(x: f64, alpha: f64, scale: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    alpha.signum() * x.signum() * (x / scale).abs().powf(alpha)
}

/// Profiled `(a, b)` for a fixed feature column, with `b >= B_MIN`.
fn profile(g: &[f64], u: &[f64]) -> (f64, f64, f64, bool) {
    let n = g.len() as f64;
    let gm = g.iter().sum::<f64>() / n;
    let um = u.iter().sum::<f64>() / n;
    let sgg: f64 = g.iter().map(|v| (v - gm) * (v - gm)).sum();
    let sgu: f64 = g.iter().zip(u).map(|(v, w)| (v - gm) * (w - um)).sum();
    let (mut b, mut pinned) = (if sgg > 0.0 { sgu / sgg } else { 0.0 }, false);
    if !(b > B_MIN) {
        b = B_MIN;
        pinned = true;
    }
    let a = um - b * gm;
    let sse = g.iter().zip(u).map(|(v, w)| (w - a - b * v).powi(2)).sum();
    (a, b, sse, pinned)
}

/// Least-squares fit of a single-attribute dataset. Both signs of the shape
/// parameter are searched from log-spaced starts and the best SSE is kept.
pub fn fit_parametric(dataset: &Dataset, family: ParametricFamily) -> Result<ParametricFit> {
    if dataset.dim() != 1 {
        return Err(Error::Unsupported("parametric fits need a single attribute".into()));
    }
    if dataset.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: dataset.len() });
    }
    let xs: Vec<f64> = dataset.tuples().iter().map(|t| t.x[0]).collect();
    let us: Vec<f64> = dataset.tuples().iter().map(|t| t.u).collect();
    let (lo, hi) = (dataset.domain().lower()[0], dataset.domain().upper()[0]);
    let span = hi - lo;

    let model_at = |sign: f64, log_mag: f64| -> (ParametricModel, f64, bool) {
        let mag = log_mag.exp();
        match family {
            ParametricFamily::Exponential => {
                let rho = sign * mag * span;
                let shift = if rho > 0.0 { lo } else { hi };
                let g: Vec<f64> = xs.iter().map(|&x| exp_feature(x, rho, shift)).collect();
                let (a, b, sse, pinned) = profile(&g, &us);
                (ParametricModel::Exponential { a, b, rho, shift }, sse, pinned)
            }
            ParametricFamily::Power => {
                let alpha = sign * mag;
                let scale = lo.abs().max(hi.abs());
                let g: Vec<f64> = xs.iter().map(|&x| power_feature(x, alpha, scale)).collect();
                let (a, b, sse, pinned) = profile(&g, &us);
                (ParametricModel::Power { a, b, alpha, scale }, sse, pinned)
            }
        }
    };

    let bounds = [(1e-3f64.ln(), 1e3f64.ln())];
    let nm = NelderMead { max_iter: 200, f_tol: 1e-16, x_tol: 1e-10, initial_step: 0.02 };
    let mut best: Option<(ParametricModel, f64, bool)> = None;
    for sign in [1.0, -1.0] {
        for start in log_spaced(1e-2, 1e2, STARTS_PER_SIGN) {
            let m = nm.minimize(|p| model_at(sign, p[0]).1, &[start.ln()], &bounds);
            let (model, sse, pinned) = model_at(sign, m.x[0]);
            if !sse.is_finite() {
                continue;
            }
            let converged = m.converged && !pinned;
            if best.as_ref().is_none_or(|b| sse < b.1) {
                best = Some((model, sse, converged));
            }
        }
    }
    let (model, residual_sse, converged) =
        best.ok_or_else(|| Error::OptFailure("no finite parametric fit".into()))?;
    Ok(ParametricFit { model, residual_sse, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeDomain, NoiseModel};

    fn data(xs: &[f64], f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Dataset {
        let us: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        Dataset::from_pairs(AttributeDomain::interval(lo, hi).unwrap(), xs, &us, NoiseModel::NoiseFree).unwrap()
    }

    #[test]
    fn recovers_exponential() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let d = data(&xs, |x| -(-x / 1.5f64).exp(), 0.0, 3.0);
        let fit = fit_parametric(&d, ParametricFamily::Exponential).unwrap();
        assert!(fit.residual_sse < 1e-10, "sse {}", fit.residual_sse);
        assert!((fit.model.shape() - 1.5).abs() < 1e-3, "rho {}", fit.model.shape());
        for &x in &xs {
            assert!((fit.eval(x) + (-x / 1.5f64).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn recovers_power() {
        let xs = [0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
        let d = data(&xs, |x| 0.3 + 0.1 * x.powf(0.6), 0.0, 10.0);
        let fit = fit_parametric(&d, ParametricFamily::Power).unwrap();
        assert!(fit.residual_sse < 1e-12);
        assert!((fit.model.shape() - 0.6).abs() < 1e-4);
    }

    #[test]
    fn misspecified_fit_does_not_interpolate() {
        let xs = [0.0, 0.2, 0.5, 0.7, 1.0];
        let d = data(&xs, |x| (6.0 * x).sin() + x, 0.0, 1.0);
        let fit = fit_parametric(&d, ParametricFamily::Exponential).unwrap();
        assert!(fit.residual_sse > 0.0);
    }

    #[test]
    fn constant_data_pins_b() {
        let xs = [0.0, 0.5, 1.0, 1.5];
        let d = data(&xs, |_| 0.4, 0.0, 1.5);
        let fit = fit_parametric(&d, ParametricFamily::Exponential).unwrap();
        assert!(!fit.converged);
        match fit.model {
            ParametricModel::Exponential { b, .. } => assert_eq!(b, B_MIN),
            _ => unreachable!(),
        }
    }

    #[test]
    fn json_round_trip() {
        let fit = ParametricFit {
            model: ParametricModel::Power { a: 0.1, b: 2.0, alpha: -0.5, scale: 3.0 },
            residual_sse: 0.25,
            converged: true,
        };
        let s = serde_json::to_string(&fit).unwrap();
        assert_eq!(serde_json::from_str::<ParametricFit>(&s).unwrap(), fit);
    }
}
