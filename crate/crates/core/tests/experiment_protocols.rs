use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use utilgasp::baselines::{randmau_evaluate, RandMauModel};
use utilgasp::derivatives::CurvatureOptions;
use utilgasp::experiments::{
    dataset_from_fn, generate_design, run_benchmark, run_cell, run_curvature_study, run_holdout, run_loo,
    table_configs, truth_inverse, truth_value, BenchmarkConfig, Estimator, Truth,
};
use utilgasp::{AttributeDomain, MeanBasis};

fn truth_strategy() -> impl Strategy<Value = Truth> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|alpha| Truth::Power { alpha }),
        prop_oneof![-3.0f64..-0.2, 0.2f64..3.0].prop_map(|rho| Truth::Exponential { rho }),
        prop_oneof![-3.0f64..-0.2, 0.2f64..3.0].prop_map(|rho| Truth::ExponentialRate { rho }),
    ]
}

proptest! {
    #[test]
    fn truths_are_normalized_and_invertible(truth in truth_strategy(), lo in -10.0f64..10.0, w in 0.5f64..1e5, u in 0.01f64..0.99) {
        let hi = lo + w;
        prop_assert!(truth_value(&truth, lo, hi, lo).abs() < 1e-12);
        prop_assert!((truth_value(&truth, lo, hi, hi) - 1.0).abs() < 1e-12);
        let x = truth_inverse(&truth, lo, hi, u).unwrap();
        prop_assert!(x >= lo && x <= hi);
        prop_assert!((truth_value(&truth, lo, hi, x) - u).abs() < 1e-9);
    }
}

#[test]
fn exponential_midpoint_by_formula() {
    let rho: f64 = 1.5;
    let s = 1e5;
    let expect = (1.0 - (-0.5 * s / (rho * s)).exp()) / (1.0 - (-s / (rho * s)).exp());
    let v = truth_value(&Truth::Exponential { rho }, 0.0, s, 0.5 * s);
    assert!((v - expect).abs() < 1e-14);
}

#[test]
fn noise_has_half_normal_absolute_mean() {
    let mut c = BenchmarkConfig::new("noise", Truth::Power { alpha: 0.7 }, 10);
    c.noise_sd = 0.005;
    c.seed = 99;
    let mut total = 0.0;
    let mut count = 0;
    for r in 0..400 {
        let d = generate_design(&c, r).unwrap();
        for t in d.tuples() {
            total += (t.u - truth_value(&c.truth, c.lower, c.upper, t.x[0])).abs();
            count += 1;
        }
    }
    let expect = 0.005 * (2.0 / PI).sqrt();
    let got = total / count as f64;
    assert!((got / expect - 1.0).abs() < 0.05, "{got} vs {expect}");
}

#[test]
fn tables_are_bit_identical_across_runs() {
    let mut configs = table_configs(4, 11, Some(3)).unwrap();
    configs.truncate(2);
    let a = run_benchmark("det", &configs).unwrap();
    let b = run_benchmark("det", &configs).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.config_hash, b.config_hash);
}

#[test]
fn single_cell_matches_the_full_table() {
    let configs = table_configs(3, 0, None).unwrap();
    let table = run_benchmark("table3", &configs).unwrap();
    let c = configs.iter().find(|c| c.n_interior == 4 && c.truth == Truth::ExponentialRate { rho: -1.5 }).unwrap();
    for est in [Estimator::Gasp, Estimator::Pow, Estimator::Qpd] {
        let alone = run_cell(c, est).unwrap();
        assert_eq!(alone.value.to_bits(), table.value(est, &c.truth.label(), 4).to_bits());
    }
}

#[test]
fn table2_alpha_09_gasp_cell() {
    let configs = table_configs(2, 0, None).unwrap();
    let c = configs.iter().find(|c| c.n_interior == 7 && c.truth == Truth::Power { alpha: 0.9 }).unwrap();
    let gasp = run_cell(c, Estimator::Gasp).unwrap().value;
    let li = run_cell(c, Estimator::Li).unwrap().value;
    assert!(gasp > 1.1e-8 && gasp < 1.1e-6, "{gasp}");
    assert!(5.0 * gasp <= li, "{gasp} vs {li}");
}

#[test]
fn table3_rho_1_gasp_cell() {
    let configs = table_configs(3, 0, None).unwrap();
    let c = configs.iter().find(|c| c.n_interior == 7 && c.truth == Truth::ExponentialRate { rho: 1.0 }).unwrap();
    let gasp = run_cell(c, Estimator::Gasp).unwrap().value;
    assert!(gasp <= 1e-6, "{gasp}");
}

#[test]
fn gasp_improves_with_more_points() {
    let mut exceptions = 0;
    let mut cells = 0;
    for table in [2u8, 3] {
        let configs: Vec<BenchmarkConfig> = table_configs(table, 0, None)
            .unwrap()
            .into_iter()
            .map(|mut c| {
                c.estimators = vec![Estimator::Gasp];
                c
            })
            .collect();
        let t = run_benchmark("mono", &configs).unwrap();
        for c in configs.iter().filter(|c| c.n_interior == 4) {
            let label = c.truth.label();
            cells += 1;
            if t.value(Estimator::Gasp, &label, 7) > t.value(Estimator::Gasp, &label, 4) {
                exceptions += 1;
            }
        }
    }
    assert_eq!(cells, 12);
    assert!(exceptions * 8 <= cells, "{exceptions} exceptions");
}

#[test]
fn table4_alpha_07_cell() {
    let configs = table_configs(4, 0, None).unwrap();
    let mut c = configs.into_iter().find(|c| c.truth == Truth::Power { alpha: 0.7 }).unwrap();
    assert_eq!(c.replicates, 200);
    c.estimators = vec![Estimator::Gasp, Estimator::Li];
    let t = run_benchmark("table4", &[c]).unwrap();
    let gasp = t.value(Estimator::Gasp, "alpha=0.7", 10);
    let li = t.value(Estimator::Li, "alpha=0.7", 10);
    assert!(gasp > 9.7e-6 / 3.0 && gasp < 9.7e-6 * 3.0, "{gasp}");
    assert!(gasp <= li, "{gasp} vs {li}");
}

#[test]
fn noise_free_concave_truth_is_concave_everywhere() {
    let mut c = BenchmarkConfig::new("curv", Truth::Exponential { rho: 2.0 / 3.0 }, 15);
    c.lower = 0.0;
    c.upper = 1.0;
    let s = run_curvature_study(&c, 10_000, CurvatureOptions::default()).unwrap();
    assert_eq!(s.gasp, vec![1.0]);
}

fn sinusoid_dataset(n: usize) -> utilgasp::Dataset {
    let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
    dataset_from_fn(AttributeDomain::interval(0.0, 1.0).unwrap(), &xs, |x| {
        3.0 * (5.0 * PI * x[0]).sin() + (7.0 * PI * x[0]).cos()
    })
    .unwrap()
}

#[test]
fn holdout_prefers_gasp_on_smooth_truth() {
    let d = sinusoid_dataset(16);
    let t = run_holdout("holdout", &d, 4, 100, 5, &[Estimator::Gasp, Estimator::Li], &MeanBasis::constant()).unwrap();
    let gasp = t.cells.iter().find(|c| c.estimator == Estimator::Gasp).unwrap().value;
    let li = t.cells.iter().find(|c| c.estimator == Estimator::Li).unwrap().value;
    assert!(gasp < li, "{gasp} vs {li}");
}

#[test]
fn loo_on_randmau_data_is_finite() {
    let truth = RandMauModel::new(vec![0.3, 0.45, 0.5], vec![0.7, 1.4, 2.2], vec![0.0; 3], vec![1.0; 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let d = dataset_from_fn(AttributeDomain::new(vec![0.0; 3], vec![1.0; 3]).unwrap(), &xs, |x| {
        randmau_evaluate(&truth, x).unwrap()
    })
    .unwrap();
    let t = run_loo("loo", &d, &[Estimator::Gasp, Estimator::RandMau], None, &MeanBasis::linear(3)).unwrap();
    for row in &t.rows {
        assert!(row.mse.is_finite() && row.r2.is_finite(), "{row:?}");
    }
}
