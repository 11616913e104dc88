//! Conditioning a Wiener process on observed values. The predictive mean is
//! piecewise-linear interpolation between the bracketing observations.

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};

/// Observed design `t_1 < ... < t_n` with values `W_{t_i}`. No anchoring at
/// `W_0 = 0`; only the observed points are conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerPosterior {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl WienerPosterior {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Length { left: times.len(), right: values.len() });
        }
        if times.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: times.len() });
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("Wiener design must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        if d.dim() != 1 {
            return Err(Error::Unsupported("Wiener interpolation needs a single attribute".into()));
        }
        let s = d.sorted_by_x();
        Self::new(s.tuples().iter().map(|t| t.x[0]).collect(), s.tuples().iter().map(|t| t.u).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn bracket(&self, t: f64) -> Result<usize> {
        let n = self.times.len();
        let (lo, hi) = (self.times[0], self.times[n - 1]);
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { value: t, lower: lo, upper: hi });
        }
        // Index i with t_i <= t <= t_{i+1}.
        let i = self.times.partition_point(|&ti| ti <= t);
        Ok(i.saturating_sub(1).min(n - 2))
    }
}

/// Predictive mean and variance of `W_t` at an interior `t`.
pub fn wiener_predict(post: &WienerPosterior, t: f64) -> Result<(f64, f64)> {
    let i = post.bracket(t)?;
    let (t0, t1) = (post.times[i], post.times[i + 1]);
    let (w0, w1) = (post.values[i], post.values[i + 1]);
    let width = t1 - t0;
    let mean = ((t1 - t) * w0 + (t - t0) * w1) / width;
    let var = (t1 - t) * (t - t0) / width;
    Ok((mean, var))
}

/// Piecewise-linear interpolation of a single-attribute dataset.
pub fn linear_interpolate(dataset: &Dataset, x: f64) -> Result<f64> {
    if dataset.dim() != 1 {
        return Err(Error::Unsupported("linear interpolation needs a single attribute".into()));
    }
    let sorted = dataset.sorted_by_x();
    let pts: Vec<(f64, f64)> = sorted.tuples().iter().map(|t| (t.x[0], t.u)).collect();
    interpolate_sorted(&pts, x)
}

pub(crate) fn interpolate_sorted(pts: &[(f64, f64)], x: f64) -> Result<f64> {
    let n = pts.len();
    let (lo, hi) = (pts[0].0, pts[n - 1].0);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfRange { value: x, lower: lo, upper: hi });
    }
    let j = pts.partition_point(|p| p.0 <= x);
    if j > 0 && pts[j - 1].0 == x {
        return Ok(pts[j - 1].1);
    }
    let (a, b) = (pts[j - 1], pts[j]);
    let w = (x - a.0) / (b.0 - a.0);
    Ok(a.1 + w * (b.1 - a.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_example() {
        let post = WienerPosterior::new(vec![1.0, 3.0], vec![0.2, 0.6]).unwrap();
        let (m, v) = wiener_predict(&post, 2.0).unwrap();
        assert!((m - 0.4).abs() < 1e-15);
        assert_eq!(v, 0.5);
        assert_eq!(wiener_predict(&post, 1.0).unwrap(), (0.2, 0.0));
        assert_eq!(wiener_predict(&post, 3.0).unwrap(), (0.6, 0.0));
    }

    #[test]
    fn extrapolation_is_an_error() {
        let post = WienerPosterior::new(vec![1.0, 3.0], vec![0.2, 0.6]).unwrap();
        assert!(matches!(wiener_predict(&post, 0.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(wiener_predict(&post, 3.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(interpolate_sorted(&[(0.0, 0.0), (1.0, 1.0)], 1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn interpolation_at_nodes_and_two_points() {
        let pts = [(0.0, 1.0), (2.0, 5.0), (3.0, 4.0)];
        assert_eq!(interpolate_sorted(&pts, 2.0).unwrap(), 5.0);
        assert_eq!(interpolate_sorted(&pts, 3.0).unwrap(), 4.0);
        let two = [(0.0, 1.0), (4.0, 3.0)];
        for x in [0.0, 1.0, 2.5, 4.0] {
            assert!((interpolate_sorted(&two, x).unwrap() - (1.0 + 0.5 * x)).abs() < 1e-15);
        }
    }
}
