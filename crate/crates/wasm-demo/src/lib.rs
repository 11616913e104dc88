//! Browser bindings: fit a single-attribute GaSP from CSV text, label its
//! curvature, and compare it with the Wiener interpolant on a test function.
//! Every export returns a JSON string.

use serde::Serialize;
use utilgasp::derivatives::{classify_curvature, local_risk_aversion, CurvatureOptions};
use utilgasp::domain::{parse_dataset, CsvSchema};
use utilgasp::experiments::{run_interpolation_comparison, BenchmarkConfig, Truth};
use utilgasp::{gasp, CurvatureReport, FitConfig, FittedGasp, MeanBasis, NoiseModel, NuggetMode};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct BandPoint {
    pub x: f64,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Serialize)]
pub struct FitView {
    pub gamma: f64,
    pub nugget: f64,
    pub sigma2: f64,
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    pub band: Vec<BandPoint>,
}

#[derive(Debug, Serialize)]
pub struct CurvatureView {
    pub report: CurvatureReport,
    /// Posterior-mean Arrow–Pratt coefficient on an inset grid.
    pub lambda: Vec<(f64, Option<f64>)>,
}

fn fit_csv(csv: &str, basis: &str, noisy: bool) -> Result<FittedGasp, String> {
    let noise_model = if noisy { NoiseModel::Noisy } else { NoiseModel::NoiseFree };
    let data = parse_dataset(csv, &CsvSchema { domain: None, noise_model }).map_err(|e| e.to_string())?;
    if data.domain().dim() != 1 {
        return Err("the demo takes one attribute and one utility column".into());
    }
    let nugget = if noisy { NuggetMode::Estimated } else { NuggetMode::None };
    let basis = MeanBasis::parse(basis, 1).map_err(|e| e.to_string())?;
    gasp::fit(&data, &FitConfig::matern52(1, basis).with_nugget(nugget)).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn fit_view(csv: &str, basis: &str, noisy: bool, points: usize) -> Result<String, String> {
    let model = fit_csv(csv, basis, noisy)?;
    let dom = model.dataset().domain();
    let (lo, hi) = (dom.lower()[0], dom.upper()[0]);
    let m = points.max(2);
    let grid: Vec<Vec<f64>> = (0..m).map(|k| vec![lo + (hi - lo) * k as f64 / (m - 1) as f64]).collect();
    let preds = model.predict_grid(&grid).map_err(|e| e.to_string())?;
    let band = grid
        .iter()
        .zip(&preds)
        .map(|(x, t)| {
            let (lo95, hi95) = t.interval(0.95);
            BandPoint { x: x[0], mean: t.location, lo95, hi95 }
        })
        .collect();
    let tuples = model.dataset().tuples();
    to_json(&FitView {
        gamma: model.gamma()[0],
        nugget: model.nugget(),
        sigma2: model.sigma2(),
        xs: tuples.iter().map(|t| t.x[0]).collect(),
        us: tuples.iter().map(|t| t.u).collect(),
        band,
    })
}

pub fn curvature_view(csv: &str, basis: &str, noisy: bool, grid: usize) -> Result<String, String> {
    let model = fit_csv(csv, basis, noisy)?;
    let report = classify_curvature(&model, grid, CurvatureOptions::default()).map_err(|e| e.to_string())?;
    let dom = model.dataset().domain();
    let lambda = utilgasp::derivatives::inset_grid(dom.lower()[0], dom.upper()[0], 101)
        .into_iter()
        .map(|x| (x, local_risk_aversion(&model, x).ok().filter(|v| v.is_finite())))
        .collect();
    to_json(&CurvatureView { report, lambda })
}

/// GaSP against the Wiener interpolant on 3 sin(5πt) + cos(7πt), with
/// `n_interior` equally spaced points plus both ends of [0, 1].
pub fn wiener_view(n_interior: usize) -> Result<String, String> {
    let mut c = BenchmarkConfig::new("wiener", Truth::sinusoid(), n_interior);
    c.lower = 0.0;
    c.upper = 1.0;
    c.test_grid = 201;
    c.gasp_basis = MeanBasis::constant();
    to_json(&run_interpolation_comparison(&c).map_err(|e| e.to_string())?)
}

/// Fit and 95% band over `points` equally spaced outcomes.
#[wasm_bindgen]
pub fn fit_band(csv: &str, basis: &str, noisy: bool, points: usize) -> Result<String, JsError> {
    fit_view(csv, basis, noisy, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn curvature(csv: &str, basis: &str, noisy: bool, grid: usize) -> Result<String, JsError> {
    curvature_view(csv, basis, noisy, grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_wiener(n_interior: usize) -> Result<String, JsError> {
    wiener_view(n_interior).map_err(|e| JsError::new(&e))
}
