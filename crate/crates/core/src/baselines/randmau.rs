//! Multilinear multi-attribute utility with power single-attribute utilities
//! `u_i(x_i) = ((x_i - x_i0) / (x_i* - x_i0))^α_i`.

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::optim::LevenbergMarquardt;

const OMEGA_LOWER: f64 = -1.0 + 1e-9;
const OMEGA_UPPER: f64 = 1e6;

/// `e_1..e_p` of the given values.
fn elementary_symmetric(v: &[f64]) -> Vec<f64> {
    let p = v.len();
    let mut e = vec![0.0; p + 1];
    e[0] = 1.0;
    for (i, &x) in v.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

/// `Σ_k ω^(k-1) e_k`, i.e. `(∏(1 + ω v_i) - 1) / ω` without the cancellation.
fn multilinear(e: &[f64], omega: f64) -> f64 {
    let mut acc = 0.0;
    for k in (1..e.len()).rev() {
        acc = acc * omega + e[k];
    }
    acc
}

/// Residual of the normalization `∏(1 + ω ω_i) - 1 - ω`.
pub fn omega_residual(weights: &[f64], omega: f64) -> f64 {
    weights.iter().map(|w| 1.0 + omega * w).product::<f64>() - 1.0 - omega
}

/// Interaction weight `ω` solving `1 + ω = ∏(1 + ω ω_i)`: the nonzero root
/// when `Σ ω_i ≠ 1`, else 0. A single attribute always gives 0.
pub fn solve_omega(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Validation("at least one attribute weight is required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
        return Err(Error::Validation(format!("attribute weight {w} is outside (0, 1)")));
    }
    let sum: f64 = weights.iter().sum();
    if weights.len() == 1 || (sum - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(0.0);
    }
    let e = elementary_symmetric(weights);
    // g(ω) = f(ω)/ω, which drops the trivial root; g(0) = Σω_i - 1.
    let g = |w: f64| multilinear(&e, w) - 1.0;
    let (mut lo, mut hi) = if sum < 1.0 {
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
            if hi > OMEGA_UPPER {
                return Err(Error::Bracket(format!("no root of the ω constraint below {OMEGA_UPPER:e}")));
            }
        }
        (0.0, hi)
    } else {
        if g(OMEGA_LOWER) >= 0.0 {
            return Err(Error::Bracket("no root of the ω constraint in (-1, 0)".into()));
        }
        (OMEGA_LOWER, 0.0)
    };
    // g is increasing on the bracket: negative at lo, positive at hi.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if g(lo).abs() < g(hi).abs() { lo } else { hi };
    Ok(root)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandMauModel {
    weights: Vec<f64>,
    omega: f64,
    exponents: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RandMauModel {
    /// Builds a model, solving `ω` from the attribute weights.
    pub fn new(weights: Vec<f64>, exponents: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let p = weights.len();
        for len in [exponents.len(), lower.len(), upper.len()] {
            if len != p {
                return Err(Error::Dimension { expected: p, got: len });
            }
        }
        if let Some(a) = exponents.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Validation(format!("exponent {a} must be positive")));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Validation("attribute limits need lower < upper".into()));
        }
        let omega = solve_omega(&weights)?;
        Ok(Self { weights, omega, exponents, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let v: Vec<f64> = (0..self.dim())
            .map(|i| {
                let r = ((x[i] - self.lower[i]) / (self.upper[i] - self.lower[i])).clamp(0.0, 1.0);
                self.weights[i] * r.powf(self.exponents[i])
            })
            .collect();
        multilinear(&elementary_symmetric(&v), self.omega)
    }
}

/// Multilinear utility at `x`; errors outside the attribute limits.
pub fn randmau_evaluate(model: &RandMauModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: x.len() });
    }
    for i in 0..model.dim() {
        if !(x[i] >= model.lower[i] && x[i] <= model.upper[i]) {
            return Err(Error::Domain(format!(
                "attribute {i} value {} outside [{}, {}]",
                x[i], model.lower[i], model.upper[i]
            )));
        }
    }
    Ok(model.eval_unchecked(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandMauFit {
    pub model: RandMauModel,
    pub sse: f64,
    pub converged: bool,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Nonlinear least-squares fit of the weights and exponents, with attribute
/// limits taken from the dataset's domain. `ω` is re-solved at every step.
pub fn randmau_fit_nls(dataset: &Dataset) -> Result<RandMauFit> {
    let p = dataset.dim();
    let needed = 2 * p + 1;
    if dataset.len() < needed {
        return Err(Error::TooFewPoints { needed, got: dataset.len() });
    }
    let lower = dataset.domain().lower().to_vec();
    let upper = dataset.domain().upper().to_vec();
    let build = |theta: &[f64]| -> Option<RandMauModel> {
        let weights: Vec<f64> = theta[..p].iter().map(|&z| logistic(z)).collect();
        let exponents: Vec<f64> = theta[p..].iter().map(|&w| w.exp()).collect();
        RandMauModel::new(weights, exponents, lower.clone(), upper.clone()).ok()
    };
    let residuals = |theta: &[f64]| -> Vec<f64> {
        match build(theta) {
            Some(m) => dataset.tuples().iter().map(|t| t.u - m.eval_unchecked(&t.x)).collect(),
            None => vec![f64::INFINITY; dataset.len()],
        }
    };
    let mut bounds = vec![(-12.0, 12.0); p];
    bounds.extend(std::iter::repeat_n((0.01f64.ln(), 100f64.ln()), p));
    let lm = LevenbergMarquardt { max_iter: 300, tol: 1e-15 };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for &w0 in &[0.15f64, 0.3, 0.45, 0.6, 0.8] {
        for &a0 in &[0.5, 1.0, 2.0] {
            let z0 = (w0 / (1.0 - w0)).ln();
            let mut x0 = vec![z0; p];
            x0.extend(std::iter::repeat_n(f64::ln(a0), p));
            let m = lm.minimize(residuals, &x0, &bounds);
            if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.1) {
                best = Some((m.x, m.value, m.converged));
            }
        }
    }
    let (theta, sse, converged) = best.ok_or_else(|| Error::OptFailure("no finite RandMAU fit".into()))?;
    let model = build(&theta).ok_or_else(|| Error::OptFailure("best RandMAU parameters are invalid".into()))?;
    Ok(RandMauFit { model, sse, converged })
}
