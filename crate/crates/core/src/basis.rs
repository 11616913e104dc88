//! Mean basis `h(x) = (h_1(x), ..., h_q(x))` of the GaSP trend.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied basis function with optional first and second derivatives
/// in the (single) attribute.
#[derive(Clone)]
pub struct CustomFn {
    pub value: ScalarFn,
    pub first: Option<ScalarFn>,
    pub second: Option<ScalarFn>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn")
            .field("first", &self.first.is_some())
            .field("second", &self.second.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BasisFunction {
    Constant,
    Linear {
        attribute: usize,
    },
    /// `sgn(x) |x|^exponent` in one attribute.
    Power {
        attribute: usize,
        exponent: f64,
    },
    Custom {
        name: String,
        #[serde(skip)]
        func: Option<CustomFn>,
    },
}

impl PartialEq for BasisFunction {
    fn eq(&self, other: &Self) -> bool {
        use BasisFunction::*;
        match (self, other) {
            (Constant, Constant) => true,
            (Linear { attribute: a }, Linear { attribute: b }) => a == b,
            (Power { attribute: a, exponent: e }, Power { attribute: b, exponent: f }) => a == b && e == f,
            (Custom { name: a, .. }, Custom { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        if e > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        x.signum() * x.abs().powf(e)
    }
}

impl BasisFunction {
    pub fn custom(name: impl Into<String>, func: CustomFn) -> Self {
        Self::Custom { name: name.into(), func: Some(func) }
    }

    fn attribute(&self) -> Option<usize> {
        match self {
            Self::Linear { attribute } | Self::Power { attribute, .. } => Some(*attribute),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::Constant => 1.0,
            Self::Linear { attribute } => x[*attribute],
            Self::Power { attribute, exponent } => signed_pow(x[*attribute], *exponent),
            Self::Custom { name, func } => {
                let f = func
                    .as_ref()
                    .ok_or_else(|| Error::Basis(format!("custom basis {name:?} has no registered function")))?;
                (f.value)(x)
            }
        })
    }

    /// Derivative of order 1 or 2 in the single attribute.
    pub fn derivative(&self, x: f64, order: u8) -> Result<f64> {
        Ok(match (self, order) {
            (Self::Constant, _) => 0.0,
            (Self::Linear { .. }, 1) => 1.0,
            (Self::Linear { .. }, _) => 0.0,
            (Self::Power { exponent: a, .. }, 1) => a * x.abs().powf(a - 1.0),
            (Self::Power { exponent: a, .. }, _) => a * (a - 1.0) * signed_pow(x, a - 2.0),
            (Self::Custom { name, func }, order) => {
                let f = func.as_ref().and_then(|f| if order == 1 { f.first.clone() } else { f.second.clone() });
                let f = f.ok_or_else(|| {
                    Error::Basis(format!("custom basis {name:?} has no registered derivative of order {order}"))
                })?;
                f(&[x])
            }
        })
    }
}

/// Ordered list of basis functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanBasis(pub Vec<BasisFunction>);

impl MeanBasis {
    pub fn constant() -> Self {
        Self(vec![BasisFunction::Constant])
    }

    /// `(1, x^exponent)` in attribute 0.
    pub fn constant_and_power(exponent: f64) -> Self {
        Self(vec![BasisFunction::Constant, BasisFunction::Power { attribute: 0, exponent }])
    }

    /// `(1, x_1, ..., x_p)`.
    pub fn linear(p: usize) -> Self {
        Self(
            std::iter::once(BasisFunction::Constant)
                .chain((0..p).map(|attribute| BasisFunction::Linear { attribute }))
                .collect(),
        )
    }

    /// Parses a `+`-separated list such as `power:0.5` or `linear+power:2@1`.
    /// Terms are `const`, `linear` (every attribute, or `linear@l`) and
    /// `power:e` (attribute 0, or `power:e@l`). The intercept is always
    /// included.
    pub fn parse(spec: &str, p: usize) -> Result<Self> {
        let mut out = vec![BasisFunction::Constant];
        for term in spec.split('+').map(str::trim).filter(|t| !t.is_empty()) {
            let (body, attribute) = match term.split_once('@') {
                Some((b, a)) => {
                    let a: usize = a.parse().map_err(|_| Error::Basis(format!("bad attribute index in {term:?}")))?;
                    (b, Some(a))
                }
                None => (term, None),
            };
            match body.split_once(':') {
                None if body == "const" || body == "constant" => {}
                None if body == "linear" => match attribute {
                    Some(attribute) => out.push(BasisFunction::Linear { attribute }),
                    None => out.extend((0..p).map(|attribute| BasisFunction::Linear { attribute })),
                },
                Some(("power", e)) => {
                    let exponent: f64 = e.parse().map_err(|_| Error::Basis(format!("bad exponent in {term:?}")))?;
                    if !exponent.is_finite() {
                        return Err(Error::Basis(format!("bad exponent in {term:?}")));
                    }
                    out.push(BasisFunction::Power { attribute: attribute.unwrap_or(0), exponent });
                }
                _ => return Err(Error::Basis(format!("unknown basis term {term:?}"))),
            }
        }
        let basis = Self(out);
        basis.validate(p)?;
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_constant(&self) -> bool {
        self.0.iter().any(|b| matches!(b, BasisFunction::Constant))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Basis("mean basis is empty".into()));
        }
        if let Some(a) = self.0.iter().filter_map(BasisFunction::attribute).find(|&a| a >= p) {
            return Err(Error::Basis(format!("basis refers to attribute {a} but p = {p}")));
        }
        Ok(())
    }

    pub fn row(&self, x: &[f64]) -> Result<DVector<f64>> {
        let vals = self.0.iter().map(|b| b.eval(x)).collect::<Result<Vec<_>>>()?;
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::Basis(format!("basis value {v} at {x:?} is not finite")));
        }
        Ok(DVector::from_vec(vals))
    }

    pub fn derivative_row(&self, x: f64, order: u8) -> Result<DVector<f64>> {
        let vals = self.0.iter().map(|b| b.derivative(x, order)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(vals))
    }

    /// `n x q` basis design matrix.
    pub fn matrix(&self, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let q = self.len();
        let mut h = DMatrix::zeros(rows.len(), q);
        for (i, x) in rows.iter().enumerate() {
            h.set_row(i, &self.row(x)?.transpose());
        }
        Ok(h)
    }
}
