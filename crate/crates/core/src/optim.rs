//! Small derivative-free and least-squares minimizers used by the fitters.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex search on a box. Trial points are projected onto the
/// box; non-finite objective values count as `+inf`.
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop when the spread of objective values over the simplex is below
    /// this (absolute).
    pub f_tol: f64,
    /// ... and the simplex diameter is below this.
    pub x_tol: f64,
    /// Initial edge length as a fraction of each bound's width.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iter: 500, f_tol: 1e-10, x_tol: 1e-8, initial_step: 0.1 }
    }
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], bounds: &[(f64, f64)]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut evaluations = 0;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut start = x0.to_vec();
        project(&mut start, bounds);
        let mut best = (start.clone(), eval(&start));
        let mut converged = false;
        let mut iters_left = self.max_iter;
        // One restart from the converged point guards against a collapsed simplex.
        for _ in 0..2 {
            let (x, v, ok, used) = self.run(&mut eval, &best.0, bounds, iters_left);
            iters_left = iters_left.saturating_sub(used);
            let improved = v < best.1 - self.f_tol;
            if v <= best.1 {
                best = (x, v);
            }
            converged = ok;
            if !improved || iters_left == 0 {
                break;
            }
        }
        Minimum { x: best.0, value: best.1, evaluations, converged }
    }

    fn run<F>(&self, eval: &mut F, x0: &[f64], bounds: &[(f64, f64)], max_iter: usize) -> (Vec<f64>, f64, bool, usize)
    where
        F: FnMut(&[f64]) -> f64,
    {
        let k = x0.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..k {
            let mut x = x0.to_vec();
            let (lo, hi) = bounds[i];
            let step = self.initial_step * (hi - lo);
            x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
            project(&mut x, bounds);
            let v = eval(&x);
            simplex.push((x, v));
        }
        let mut iter = 0;
        let mut converged = false;
        while iter < max_iter {
            iter += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[k].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diameter <= self.x_tol || (spread <= self.f_tol && diameter <= self.x_tol.sqrt()) {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; k];
            for (x, _) in &simplex[..k] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / k as f64;
                }
            }
            let along = |t: f64| {
                let mut x: Vec<f64> =
                    centroid.iter().zip(&simplex[k].0).map(|(c, w)| c + t * (c - w)).collect();
                project(&mut x, bounds);
                x
            };
            let xr = along(1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[k - 1].1 {
                simplex[k] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[k].1 {
                    let x = along(0.5);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = along(-0.5);
                    let v = eval(&x);
                    (x, v)
                };
                if fc < simplex[k].1.min(fr) {
                    simplex[k] = (xc, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let mut x: Vec<f64> = best.iter().zip(&item.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                        project(&mut x, bounds);
                        let v = eval(&x);
                        *item = (x, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, v) = simplex.swap_remove(0);
        (x, v, converged, iter)
    }
}

/// `n` points spread evenly over `[lo, hi]` on a log scale.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Levenberg–Marquardt for `min ||r(x)||^2` with a central-difference
/// Jacobian and box projection.
#[derive(Debug, Clone)]
pub struct LevenbergMarquardt {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-14 }
    }
}

impl LevenbergMarquardt {
    pub fn minimize<F>(&self, mut residuals: F, x0: &[f64], bounds: &[(f64, f64)]) -> Minimum
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let k = x0.len();
        let mut evaluations = 0;
        let sse_of = |r: &[f64]| {
            let s: f64 = r.iter().map(|v| v * v).sum();
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        };
        let mut x = x0.to_vec();
        project(&mut x, bounds);
        let mut r = residuals(&x);
        evaluations += 1;
        let mut sse = sse_of(&r);
        let mut lambda = 1e-3;
        let mut converged = false;
        for _ in 0..self.max_iter {
            if !sse.is_finite() {
                break;
            }
            let m = r.len();
            let mut jac = DMatrix::zeros(m, k);
            for j in 0..k {
                let h = 1e-7 * x[j].abs().max(1e-3);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let rp = residuals(&xp);
                let rm = residuals(&xm);
                evaluations += 2;
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            let rv = DVector::from_column_slice(&r);
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * rv;
            let mut accepted = false;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for d in 0..k {
                    a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
                }
                let Some(step) = a.lu().solve(&(-&jtr)) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                project(&mut xn, bounds);
                let rn = residuals(&xn);
                evaluations += 1;
                let sn = sse_of(&rn);
                if sn < sse {
                    let rel = (sse - sn) / sse.max(1e-300);
                    x = xn;
                    r = rn;
                    sse = sn;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if rel < self.tol || sse < 1e-30 {
                        converged = true;
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                converged = true;
                break;
            }
            if converged {
                break;
            }
        }
        Minimum { x, value: sse, evaluations, converged }
    }
}
