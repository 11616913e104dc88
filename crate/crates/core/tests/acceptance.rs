//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use utilgasp::baselines::{
    linear_interpolate, randmau_evaluate, randmau_fit_nls, wiener_predict, RandMauModel, WienerPosterior,
};
use utilgasp::derivatives::CurvatureOptions;
use utilgasp::experiments::{
    dataset_from_fn, median, run_benchmark, run_curvature_study, run_holdout, run_interpolation_comparison,
    table_configs, BenchmarkConfig, Estimator, ResultTable, Truth,
};
use utilgasp::gasp::fit;
use utilgasp::kernels::{corr_1d, cross_cov_first, cross_cov_second, deriv_variances};
use utilgasp::{AttributeDomain, Dataset, FitConfig, KernelFamily, KernelSpec, MeanBasis, NoiseModel};

use common::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_budget(elapsed: Duration, budget: Option<Duration>) -> Result<(), String> {
    match budget {
        Some(b) if elapsed > b => Err(format!("took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64())),
        _ => Ok(()),
    }
}

struct Runner {
    failed: usize,
}

impl Runner {
    fn check(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let out = out.and_then(|msg| within_budget(elapsed, budget).map(|_| msg));
        let secs = elapsed.as_secs_f64();
        match out {
            Ok(msg) => println!("PASS {name}: {msg} [{secs:.2}s]"),
            Err(msg) => {
                self.failed += 1;
                println!("FAIL {name}: {msg} [{secs:.2}s]");
            }
        }
    }
}

fn design_point_interpolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_loc = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for k in 0..50 {
        let p = 1 + k % 3;
        let n = rng.random_range(4..=20);
        let d = random_smooth(&mut rng, p, n);
        let m = fit(&d, &FitConfig::matern52(p, MeanBasis::constant())).map_err(|e| e.to_string())?;
        for t in d.tuples() {
            let pred = m.predict(&t.x).map_err(|e| e.to_string())?;
            worst_loc = worst_loc.max((pred.location - t.u).abs());
            worst_ratio = worst_ratio.max(pred.scale2 / m.sigma2());
        }
    }
    ensure(
        worst_loc < 1e-6 && worst_ratio < 1e-8,
        format!("max |loc - u| = {worst_loc:.2e}, max scale2/sigma2 = {worst_ratio:.2e}"),
    )
}

fn li_wiener_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut ts = [0.0; 3];
        let mut acc = 0.0;
        for t in &mut ts {
            acc += rng.random_range(0.1..2.0);
            *t = acc;
        }
        let ws: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let post = WienerPosterior::new(ts.to_vec(), ws.clone()).map_err(|e| e.to_string())?;
        let t = rng.random_range(ts[0]..ts[2]);
        let (m, v) = wiener_predict(&post, t).map_err(|e| e.to_string())?;
        let k = DMatrix::from_fn(3, 3, |i, j| ts[i].min(ts[j]));
        let kx = DVector::from_fn(3, |i, _| ts[i].min(t));
        let kinv = k.try_inverse().ok_or("singular covariance")?;
        let mo = (kx.transpose() * &kinv * DVector::from_vec(ws))[0];
        let vo = t - (kx.transpose() * &kinv * &kx)[0];
        worst = worst.max((m - mo).abs()).max((v - vo).abs());
    }
    let mut li_worst = 0.0f64;
    let mut t = 0.0;
    let mut w = 0.0;
    let (mut ts, mut ws) = (Vec::new(), Vec::new());
    for _ in 0..15 {
        t += rng.random_range(0.05..1.0);
        w += rng.random_range(-1.0..1.0);
        ts.push(t);
        ws.push(w);
    }
    let d = Dataset::from_pairs(AttributeDomain::interval(ts[0], t).unwrap(), &ts, &ws, NoiseModel::NoiseFree)
        .map_err(|e| e.to_string())?;
    let post = WienerPosterior::from_dataset(&d).map_err(|e| e.to_string())?;
    for _ in 0..1000 {
        let q = rng.random_range(ts[0]..t);
        let li = linear_interpolate(&d, q).map_err(|e| e.to_string())?;
        li_worst = li_worst.max((li - wiener_predict(&post, q).unwrap().0).abs());
    }
    ensure(worst < 1e-9 && li_worst < 1e-12, format!("MVN max diff {worst:.2e}, LI vs Wiener {li_worst:.2e}"))
}

fn derivative_kernels() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let gamma = rng.random_range(0.05..3.0);
        let xi = rng.random_range(0.0..4.0);
        let xstar = rng.random_range(0.0..4.0);
        let f = |t: f64| corr_1d(KernelFamily::Matern52, (xi - t).abs(), gamma).unwrap();
        let h1 = 1e-5 * gamma;
        let h2 = 1e-3 * gamma;
        let d1 = (f(xstar + h1) - f(xstar - h1)) / (2.0 * h1);
        let d2 = (f(xstar + h2) - 2.0 * f(xstar) + f(xstar - h2)) / (h2 * h2);
        let c01 = cross_cov_first(&[xi], xstar, gamma).map_err(|e| e.to_string())?[0];
        let c02 = cross_cov_second(&[xi], xstar, gamma).map_err(|e| e.to_string())?[0];
        // Relative to the derivative's own scale so near-zero crossings do not dominate.
        e1 = e1.max((c01 - d1).abs() / d1.abs().max(1e-3 * (5.0f64 / 3.0).sqrt() / gamma));
        e2 = e2.max((c02 - d2).abs() / d2.abs().max(1e-2 * 5.0 / (gamma * gamma)));
    }
    let (c11, c22) = deriv_variances(1.0).map_err(|e| e.to_string())?;
    ensure(
        e1 < 1e-5 && e2 < 1e-4 && c11 == 5.0 / 3.0 && c22 == 25.0,
        format!("c01 rel {e1:.1e}, c02 rel {e2:.1e}, c11(1) = {c11}, c22(1) = {c22}"),
    )
}

fn sinusoid_comparison() -> Outcome {
    let mut c = BenchmarkConfig::new("sinusoid", Truth::sinusoid(), 10);
    c.lower = 0.0;
    c.upper = 1.0;
    c.gasp_basis = MeanBasis::constant();
    let r = run_interpolation_comparison(&c).map_err(|e| e.to_string())?;
    ensure(
        r.gasp_mse <= 0.1 * r.wiener_mse && r.gasp_coverage >= 0.85 && r.wiener_coverage < 0.80,
        format!(
            "GaSP MSE {:.3e} vs Wiener {:.3e}; coverage {:.3} vs {:.3}",
            r.gasp_mse, r.wiener_mse, r.gasp_coverage, r.wiener_coverage
        ),
    )
}

fn noise_free_table(table: u8, cells: &[(&str, f64)], rivals: &[Estimator]) -> Outcome {
    let configs: Vec<BenchmarkConfig> = table_configs(table, 0, None)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|c| c.n_interior == 7 && cells.iter().any(|(l, _)| *l == c.truth.label()))
        .collect();
    let t = run_benchmark(&format!("table{table}"), &configs).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, target) in cells {
        let g = t.value(Estimator::Gasp, label, 7);
        let in_band = g > target / 10.0 && g < target * 10.0;
        let below = rivals.iter().all(|&r| g < t.value(r, label, 7));
        ok &= in_band && below;
        let rivals: Vec<String> = rivals.iter().map(|&r| format!("{r} {:.2e}", t.value(r, label, 7))).collect();
        parts.push(format!("{label}: GaSP {g:.2e} (target {target:.1e}), {}", rivals.join(", ")));
    }
    ensure(ok, parts.join("; "))
}

fn table4() -> Outcome {
    let configs = table_configs(4, 0, Some(50)).map_err(|e| e.to_string())?;
    let t: ResultTable = run_benchmark("table4", &configs).map_err(|e| e.to_string())?;
    let a = t.value(Estimator::Gasp, "alpha=0.7", 10);
    let r = t.value(Estimator::Gasp, "rho=1", 10);
    let wins = [0.7, 0.8, 0.9, 1.5, 2.0, 2.5]
        .iter()
        .filter(|alpha| {
            let l = format!("alpha={alpha}");
            t.value(Estimator::Gasp, &l, 10) <= t.value(Estimator::Li, &l, 10)
        })
        .count();
    let ok_a = a > 9.7e-6 / 3.0 && a < 9.7e-6 * 3.0;
    let ok_r = r > 1.0e-5 / 3.0 && r < 1.0e-5 * 3.0;
    ensure(
        ok_a && ok_r && wins >= 4,
        format!("alpha=0.7 GaSP {a:.2e} (target 9.7e-6), rho=1 GaSP {r:.2e} (target 1.0e-5), GaSP <= LI in {wins}/6 power cells"),
    )
}

fn curvature_study() -> Outcome {
    let study = |rho: f64| {
        let mut c = BenchmarkConfig::new("curvature", Truth::Exponential { rho }, 15);
        c.noise_sd = 0.01;
        c.replicates = 100;
        c.seed = 1;
        run_curvature_study(&c, 10_000, CurvatureOptions::default()).map_err(|e| e.to_string())
    };
    let concave = study(2.0 / 3.0)?;
    let convex = study(-0.5)?;
    let (gc, lc) = (median(&concave.gasp), median(&concave.li));
    let (gv, lv) = (median(&convex.gasp), median(&convex.li));
    ensure(
        gc > 0.9 && lc > 1.0 / 3.0 && lc < 2.0 / 3.0 && gv < 0.1 && lv > 1.0 / 3.0 && lv < 2.0 / 3.0,
        format!("rho=2/3: GaSP median {gc:.3}, LI median {lc:.3}; rho=-1/2: GaSP median {gv:.3}, LI median {lv:.3}"),
    )
}

fn calibration() -> Outcome {
    let spec = KernelSpec::matern52(vec![0.3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(95);
    let (mut hit, mut total) = (0usize, 0usize);
    for _ in 0..200 {
        let train = equally_spaced(0.0, 1.0, 10);
        let held: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        let all: Vec<f64> = train.iter().chain(&held).copied().collect();
        let draw = prior_draw(&mut rng, &spec, &all, 1.0);
        let d = Dataset::from_pairs(AttributeDomain::interval(0.0, 1.0).unwrap(), &train, &draw[..10], NoiseModel::NoiseFree)
            .map_err(|e| e.to_string())?;
        let m = fit(&d, &FitConfig::matern52(1, MeanBasis::constant())).map_err(|e| e.to_string())?;
        for (x, y) in held.iter().zip(&draw[10..]) {
            let (lo, hi) = m.predict(&[*x]).map_err(|e| e.to_string())?.interval(0.95);
            total += 1;
            if *y >= lo && *y <= hi {
                hit += 1;
            }
        }
    }
    let cov = hit as f64 / total as f64;
    ensure((0.85..=0.99).contains(&cov), format!("coverage {cov:.3} over {total} held-out points"))
}

fn affine_and_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = FitConfig::matern52(1, MeanBasis::constant());
    let mut worst = 0.0f64;
    for _ in 0..16 {
        let d = stratified_smooth(&mut rng, 8);
        let a = rng.random_range(-5.0..5.0);
        let b = rng.random_range(0.1..10.0);
        let m = fit(&d, &cfg).map_err(|e| e.to_string())?;
        let us: Vec<f64> = d.tuples().iter().map(|t| a + b * t.u).collect();
        let m2 = fit(&d.with_utilities(&us).unwrap(), &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((m2.gamma()[0] / m.gamma()[0] - 1.0).abs());
        for k in 0..20 {
            let x = k as f64 / 19.0;
            let (p, q) = (m.predict(&[x]).unwrap(), m2.predict(&[x]).unwrap());
            worst = worst.max((q.location - a - b * p.location).abs() / (1.0 + a.abs() + b * p.location.abs()));
            worst = worst.max((q.scale() - b * p.scale()).abs() / (b * p.scale() + 1e-9 * b) * 1e-2);
        }
    }
    let mut configs = table_configs(4, 3, Some(4)).map_err(|e| e.to_string())?;
    configs.truncate(3);
    let one = run_benchmark("det", &configs).map_err(|e| e.to_string())?.to_csv();
    let two = run_benchmark("det", &configs).map_err(|e| e.to_string())?.to_csv();
    ensure(worst < 1e-6 && one == two, format!("max affine deviation {worst:.1e}, repeated table CSV identical: {}", one == two))
}

fn holdout_and_loo() -> Outcome {
    let xs: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64 / 15.0]).collect();
    let d = dataset_from_fn(AttributeDomain::interval(0.0, 1.0).unwrap(), &xs, |x| {
        3.0 * (5.0 * PI * x[0]).sin() + (7.0 * PI * x[0]).cos()
    })
    .map_err(|e| e.to_string())?;
    let t = run_holdout("holdout", &d, 4, 100, 5, &[Estimator::Gasp, Estimator::Li], &MeanBasis::constant())
        .map_err(|e| e.to_string())?;
    let gasp = t.cells.iter().find(|c| c.estimator == Estimator::Gasp).unwrap().value;
    let li = t.cells.iter().find(|c| c.estimator == Estimator::Li).unwrap().value;

    let truth = RandMauModel::new(vec![0.3, 0.5, 0.4], vec![0.6, 1.8, 1.0], vec![0.0; 3], vec![1.0; 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inputs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let rd = dataset_from_fn(AttributeDomain::new(vec![0.0; 3], vec![1.0; 3]).unwrap(), &inputs, |x| {
        randmau_evaluate(&truth, x).unwrap()
    })
    .map_err(|e| e.to_string())?;
    let sse = randmau_fit_nls(&rd).map_err(|e| e.to_string())?.sse;

    let mut corner = 0.0f64;
    for _ in 0..20 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..0.9)).collect();
        let e: Vec<f64> = (0..3).map(|_| rng.random_range(0.3..3.0)).collect();
        let m = RandMauModel::new(w, e, vec![0.0; 3], vec![2.0; 3]).map_err(|e| e.to_string())?;
        corner = corner.max((randmau_evaluate(&m, &[2.0; 3]).unwrap() - 1.0).abs());
    }
    ensure(
        gasp < li && sse < 1e-8 && corner < 1e-10,
        format!("holdout GaSP {gasp:.3e} vs LI {li:.3e}; RandMAU SSE {sse:.1e}; corner error {corner:.1e}"),
    )
}

fn main() -> ExitCode {
    let mut r = Runner { failed: 0 };
    let secs = Duration::from_secs;
    r.check("interpolation at design points", Some(secs(30)), design_point_interpolation);
    r.check("LI and Wiener match the conditional-normal oracle", None, li_wiener_oracle);
    r.check("derivative cross-covariances", None, derivative_kernels);
    r.check("GaSP against Wiener on the sinusoid", Some(secs(5)), sinusoid_comparison);
    r.check("table 2 preset", Some(secs(60)), || {
        noise_free_table(2, &[("alpha=0.7", 2.8e-7), ("alpha=0.9", 1.1e-7), ("alpha=2.5", 5.0e-6)], &[Estimator::Li, Estimator::Exp])
    });
    r.check("table 3 preset", None, || {
        noise_free_table(3, &[("rho=1", 7.9e-9), ("rho=-1", 1.7e-8)], &[Estimator::Li, Estimator::Pow])
    });
    r.check("table 4 preset", Some(secs(600)), table4);
    r.check("noisy curvature study", Some(secs(600)), curvature_study);
    r.check("calibration", None, calibration);
    r.check("affine equivariance and determinism", None, affine_and_determinism);
    r.check("holdout and LOO on synthetic data", None, holdout_and_loo);
    println!("{} failed", r.failed);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
