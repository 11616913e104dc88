#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use utilgasp::{AssessedTuple, AttributeDomain, Dataset, KernelSpec, NoiseModel};

pub fn line_data(xs: &[f64], f: impl Fn(f64) -> f64, lo: f64, hi: f64, noise: NoiseModel) -> Dataset {
    let us: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    Dataset::from_pairs(AttributeDomain::interval(lo, hi).unwrap(), xs, &us, noise).unwrap()
}

pub fn equally_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Random noise-free dataset on the unit cube with a smooth response.
pub fn random_smooth(rng: &mut impl Rng, p: usize, n: usize) -> Dataset {
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..3.0)).collect();
    let tuples: Vec<AssessedTuple> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            let u = x.iter().zip(&w).map(|(v, a)| (a * v).sin() + v * v).sum();
            AssessedTuple::new(x, u)
        })
        .collect();
    let domain = AttributeDomain::new(vec![0.0; p], vec![1.0; p]).unwrap();
    Dataset::new(domain, tuples, NoiseModel::NoiseFree).unwrap()
}

/// One zero-mean draw at `points` from a GaSP prior with variance `sigma2`.
pub fn prior_draw(rng: &mut impl Rng, spec: &KernelSpec, points: &[f64], sigma2: f64) -> Vec<f64> {
    let design = DMatrix::from_fn(points.len(), 1, |i, _| points[i]);
    let mut c = spec.gram(&design).unwrap() * sigma2;
    for i in 0..points.len() {
        c[(i, i)] += 1e-10 * sigma2;
    }
    let l = c.cholesky().expect("prior covariance factorizes").l();
    let z = DVector::from_fn(points.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    (l * z).iter().copied().collect()
}

/// One point per stratum of `[0, 1]`, smooth response.
pub fn stratified_smooth(rng: &mut impl Rng, n: usize) -> Dataset {
    let w = rng.random_range(4.0..12.0);
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random_range(0.2..0.8)) / n as f64).collect();
    line_data(&xs, |x| (w * x).sin() + x * x, 0.0, 1.0, NoiseModel::NoiseFree)
}
