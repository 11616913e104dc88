mod common;

use proptest::prelude::*;
use utilgasp::derivatives::{
    classify_curvature, classify_curvature_li, local_risk_aversion, predict_derivative, prob_concave_at,
    CurvatureOptions,
};
use utilgasp::gasp::fit;
use utilgasp::{CurvatureLabel, FitConfig, FittedGasp, MeanBasis, NoiseModel, NuggetMode, PredictiveT};

use common::*;

fn fitted(xs: &[f64], f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> FittedGasp {
    let d = line_data(xs, f, lo, hi, NoiseModel::NoiseFree);
    fit(&d, &FitConfig::matern52(1, MeanBasis::constant())).unwrap()
}

fn interior(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| lo + (hi - lo) * (i as f64 - 0.5) / k as f64).collect()
}

#[test]
fn first_derivative_matches_finite_differences() {
    let m = fitted(&equally_spaced(0.0, 2.0, 10), |x| (2.0 * x).sin() + 0.3 * x, 0.0, 2.0);
    let h = 1e-4 * 2.0;
    for x in interior(0.0, 2.0, 20) {
        let loc = |t: f64| m.predict(&[t]).unwrap().location;
        let fd = (loc(x + h) - loc(x - h)) / (2.0 * h);
        let d1 = predict_derivative(&m, x, 1).unwrap().location;
        assert!((d1 - fd).abs() < 1e-3 * fd.abs().max(1e-2), "x={x}: {d1} vs {fd}");
    }
}

#[test]
fn second_derivative_matches_finite_differences() {
    let m = fitted(&equally_spaced(0.0, 2.0, 10), |x| (2.0 * x).sin() + 0.3 * x, 0.0, 2.0);
    let h = 1e-4 * 2.0;
    for x in interior(0.0, 2.0, 20) {
        let loc = |t: f64| m.predict(&[t]).unwrap().location;
        let fd = (loc(x + h) - 2.0 * loc(x) + loc(x - h)) / (h * h);
        let d2 = predict_derivative(&m, x, 2).unwrap().location;
        assert!((d2 - fd).abs() < 1e-2 * fd.abs().max(1e-1), "x={x}: {d2} vs {fd}");
    }
}

#[test]
fn straight_line_has_no_curvature() {
    let span = 1e5;
    let m = fitted(&equally_spaced(0.0, span, 8), |x| x / span, 0.0, span);
    let g = m.gamma()[0];
    let p = predict_derivative(&m, span / 2.0, 2).unwrap();
    let bound = 1e-6 * (5.0 / (3.0 * g * g)).sqrt() * m.sigma2().sqrt();
    assert!(p.location.abs() < bound.max(f64::MIN_POSITIVE), "{} vs {bound}", p.location);
    let lambda = local_risk_aversion(&m, span / 2.0).unwrap();
    assert!(lambda.abs() < 1e-3 / span, "lambda {lambda}");
}

#[test]
fn linear_truth_is_mixed() {
    let m = fitted(&equally_spaced(0.0, 1.0, 8), |x| 2.0 * x + 1.0, 0.0, 1.0);
    let r = classify_curvature(&m, 1000, CurvatureOptions::default()).unwrap();
    assert_eq!(r.label, CurvatureLabel::Mixed, "{r:?}");
}

#[test]
fn exponential_risk_aversion_is_one_over_rho() {
    for rho in [0.5, 2.0] {
        let m = fitted(&equally_spaced(0.0, 1.0, 20), |x| 1.0 - (-x / rho).exp(), 0.0, 1.0);
        let lambda = local_risk_aversion(&m, 0.5).unwrap();
        assert!((lambda * rho - 1.0).abs() < 0.05, "rho={rho}: lambda {lambda}");
    }
}

#[test]
fn concave_exponential_is_concave_almost_everywhere() {
    let rho = 2.0 / 3.0;
    let truth = |x: f64| (1.0 - (-x / rho).exp()) / (1.0 - (-1.0 / rho).exp());
    let m = fitted(&equally_spaced(0.0, 1.0, 15), truth, 0.0, 1.0);
    let grid = utilgasp::derivatives::inset_grid(0.0, 1.0, 10_000);
    let hits = grid.iter().filter(|&&x| prob_concave_at(&m, x).unwrap() > 0.5).count();
    assert!(hits as f64 >= 0.95 * grid.len() as f64, "{hits}/10000");
}

#[test]
fn derivative_locations_are_linear_in_residuals() {
    let xs = equally_spaced(0.0, 1.0, 9);
    let d = line_data(&xs, |x| (4.0 * x).cos(), 0.0, 1.0, NoiseModel::NoiseFree);
    let m = fit(&d, &FitConfig::matern52(1, MeanBasis::constant())).unwrap();
    let theta = m.theta()[0];
    let doubled: Vec<f64> = d.tuples().iter().map(|t| theta + 2.0 * (t.u - theta)).collect();
    let m2 = FittedGasp::at_parameters(&d.with_utilities(&doubled).unwrap(), m.basis(), m.kernel().clone(), 0.0, NuggetMode::None)
        .unwrap();
    assert!((m2.theta()[0] - theta).abs() < 1e-9);
    for x in interior(0.0, 1.0, 10) {
        for order in [1, 2] {
            let a = predict_derivative(&m, x, order).unwrap().location;
            let b = predict_derivative(&m2, x, order).unwrap().location;
            assert!((b - 2.0 * a).abs() < 1e-8 * (1.0 + a.abs()), "order {order} x={x}: {b} vs 2*{a}");
        }
    }
}

#[test]
fn convex_quadratic_agrees_between_methods() {
    let xs = equally_spaced(-1.0, 2.0, 15);
    let d = line_data(&xs, |x| 0.5 * x * x - x, -1.0, 2.0, NoiseModel::NoiseFree);
    let m = fit(&d, &FitConfig::matern52(1, MeanBasis::constant())).unwrap();
    let gasp = classify_curvature(&m, 10_000, CurvatureOptions::default()).unwrap();
    let li = classify_curvature_li(&d, CurvatureOptions::default()).unwrap();
    assert_eq!(gasp.label, CurvatureLabel::Convex);
    assert_eq!(li.label, CurvatureLabel::Convex);
}

#[test]
fn t_cdf_at_three_with_ten_dof() {
    let p = PredictiveT { location: -3.0, scale2: 1.0, dof: 10 };
    assert!((p.cdf(0.0) - 0.993_328_172_488_715).abs() < 1e-9);
    let z = PredictiveT { location: 0.0, scale2: 4.0, dof: 3 };
    assert_eq!(z.cdf(0.0), 0.5);
}

proptest! {
    #[test]
    fn concavity_probability_decreases_with_location(a in -50.0f64..50.0, gap in 1e-3f64..10.0, s in 0.1f64..5.0, dof in 1usize..30) {
        let lo = PredictiveT { location: a, scale2: s * s, dof };
        let hi = PredictiveT { location: a + gap, scale2: s * s, dof };
        prop_assert!(hi.cdf(0.0) <= lo.cdf(0.0));
    }
}
