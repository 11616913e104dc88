//! Seeded simulation studies and holdout / leave-one-out protocols.
//!
//! Every replicate draws from its own ChaCha stream of one master seed, so
//! results do not depend on thread scheduling or on which estimators run.

use std::fmt::Write as _;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{
    fit_parametric, fit_qpd, linear_interpolate, qpd_estimate_many, randmau_evaluate, randmau_fit_nls,
    wiener_predict, ParametricFamily, WienerPosterior,
};
use crate::basis::MeanBasis;
use crate::derivatives::{classify_curvature, classify_curvature_li, CurvatureOptions};
use crate::domain::{AssessedTuple, AttributeDomain, Dataset, NoiseModel};
use crate::error::{Error, Result};
use crate::gasp::{fit, FitConfig, NuggetMode};

/// Scalar function used as a custom truth.
pub type TruthFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Underlying utility function of a simulation.
///
/// The parametric truths are normalized so that `U(lower) = 0` and
/// `U(upper) = 1`. With `t = (x - lower) / (upper - lower)`, `Exponential`
/// is `∝ 1 - exp(-t/rho)` and `ExponentialRate` is `∝ 1 - exp(-rho·t)`.
/// `Custom` is evaluated as is.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    Power { alpha: f64 },
    Exponential { rho: f64 },
    ExponentialRate { rho: f64 },
    Custom {
        name: String,
        #[serde(skip)]
        func: Option<TruthFn>,
    },
}

impl fmt::Debug for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialEq for Truth {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Power { alpha: a }, Self::Power { alpha: b }) => a == b,
            (Self::Exponential { rho: a }, Self::Exponential { rho: b }) => a == b,
            (Self::ExponentialRate { rho: a }, Self::ExponentialRate { rho: b }) => a == b,
            (Self::Custom { name: a, .. }, Self::Custom { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Truth {
    pub fn custom(name: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.into(), func: Some(Arc::new(func)) }
    }

    /// `3 sin(5πt) + cos(7πt)`.
    pub fn sinusoid() -> Self {
        use std::f64::consts::PI;
        Self::custom("3sin(5pi t)+cos(7pi t)", |t| 3.0 * (5.0 * PI * t).sin() + (7.0 * PI * t).cos())
    }

    /// Parameter label used as a table column key, e.g. `alpha=0.7`.
    pub fn label(&self) -> String {
        match self {
            Self::Power { alpha } => format!("alpha={alpha}"),
            Self::Exponential { rho } | Self::ExponentialRate { rho } => format!("rho={rho}"),
            Self::Custom { name, .. } => name.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Power { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::Validation(format!("power truth needs alpha > 0, got {alpha}")))
            }
            Self::Exponential { rho } | Self::ExponentialRate { rho } if !(rho != 0.0 && rho.is_finite()) => {
                Err(Error::Validation(format!("exponential truth needs a finite rho != 0, got {rho}")))
            }
            Self::Custom { ref name, func: None } => {
                Err(Error::Validation(format!("custom truth '{name}' has no function attached")))
            }
            _ => Ok(()),
        }
    }
}

fn signed_pow(x: f64, alpha: f64) -> f64 {
    x.signum() * x.abs().powf(alpha)
}

/// Value of the truth at `x` on `[lower, upper]`.
pub fn truth_value(truth: &Truth, lower: f64, upper: f64, x: f64) -> f64 {
    match truth {
        Truth::Power { alpha } => {
            let s = lower.abs().max(upper.abs());
            let (g0, g1) = (signed_pow(lower / s, *alpha), signed_pow(upper / s, *alpha));
            (signed_pow(x / s, *alpha) - g0) / (g1 - g0)
        }
        Truth::Exponential { rho } => {
            let t = (x - lower) / (upper - lower);
            (-t / rho).exp_m1() / (-1.0 / rho).exp_m1()
        }
        Truth::ExponentialRate { rho } => {
            let t = (x - lower) / (upper - lower);
            (-t * rho).exp_m1() / (-rho).exp_m1()
        }
        Truth::Custom { func, .. } => func.as_ref().map_or(f64::NAN, |f| f(x)),
    }
}

/// Outcome with normalized utility `p`, for the parametric truths.
pub fn truth_inverse(truth: &Truth, lower: f64, upper: f64, p: f64) -> Result<f64> {
    let span = upper - lower;
    let x = match *truth {
        Truth::Power { alpha } => {
            let s = lower.abs().max(upper.abs());
            let (g0, g1) = (signed_pow(lower / s, alpha), signed_pow(upper / s, alpha));
            s * signed_pow(g0 + p * (g1 - g0), 1.0 / alpha)
        }
        Truth::Exponential { rho } => lower - span * rho * (p * (-1.0 / rho).exp_m1()).ln_1p(),
        Truth::ExponentialRate { rho } => lower - span * (p * (-rho).exp_m1()).ln_1p() / rho,
        Truth::Custom { ref name, .. } => {
            return Err(Error::Unsupported(format!("custom truth '{name}' has no inverse")))
        }
    };
    Ok(x.clamp(lower, upper))
}

/// Placement of the design points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSpacing {
    /// Equally spaced outcomes.
    #[default]
    EqualOutcome,
    /// Outcomes whose true utilities are equally spaced, as when each
    /// assessment asks for the outcome at a fixed utility level.
    EqualUtility,
}

/// Estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "GaSP")]
    Gasp,
    #[serde(rename = "LI")]
    Li,
    #[serde(rename = "Exp")]
    Exp,
    #[serde(rename = "Pow")]
    Pow,
    #[serde(rename = "QPD")]
    Qpd,
    #[serde(rename = "RandMAU")]
    RandMau,
    #[serde(rename = "Mean")]
    Mean,
}

impl Estimator {
    pub const ALL: [Estimator; 7] =
        [Self::Gasp, Self::Li, Self::Exp, Self::Pow, Self::Qpd, Self::RandMau, Self::Mean];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gasp => "GaSP",
            Self::Li => "LI",
            Self::Exp => "Exp",
            Self::Pow => "Pow",
            Self::Qpd => "QPD",
            Self::RandMau => "RandMAU",
            Self::Mean => "Mean",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown estimator '{s}'")))
    }
}

/// One simulation column: a truth, a design size and the estimators to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub name: String,
    pub truth: Truth,
    pub n_interior: usize,
    pub include_endpoints: bool,
    #[serde(default)]
    pub spacing: DesignSpacing,
    pub lower: f64,
    pub upper: f64,
    pub noise_sd: f64,
    pub replicates: usize,
    pub test_grid: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    /// Mean basis of the GaSP estimator.
    pub gasp_basis: MeanBasis,
}

impl BenchmarkConfig {
    pub fn new(name: impl Into<String>, truth: Truth, n_interior: usize) -> Self {
        Self {
            name: name.into(),
            truth,
            n_interior,
            include_endpoints: true,
            spacing: DesignSpacing::EqualOutcome,
            lower: 0.0,
            upper: 1e5,
            noise_sd: 0.0,
            replicates: 1,
            test_grid: 1001,
            seed: 0,
            estimators: vec![Estimator::Gasp, Estimator::Li, Estimator::Exp, Estimator::Pow, Estimator::Qpd],
            gasp_basis: MeanBasis::constant_and_power(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if !(self.lower < self.upper && self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::Validation("benchmark domain needs finite lower < upper".into()));
        }
        if self.test_grid < 2 {
            return Err(Error::Validation("test grid needs at least 2 points".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Validation("at least one replicate is required".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Validation("noise_sd must be finite and >= 0".into()));
        }
        let n = self.n_interior + if self.include_endpoints { 2 } else { 0 };
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        self.gasp_basis.validate(1)
    }

    /// Equally spaced grid of `test_grid` points including both ends.
    pub fn grid(&self) -> Vec<f64> {
        equally_spaced(self.lower, self.upper, self.test_grid)
    }

    fn truth_at(&self, x: f64) -> f64 {
        truth_value(&self.truth, self.lower, self.upper, x)
    }
}

pub fn equally_spaced(lower: f64, upper: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![lower];
    }
    (0..m).map(|k| lower + (upper - lower) * k as f64 / (m - 1) as f64).collect()
}

/// Generator for replicate `index`, independent of every other replicate.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Assessed tuples for one replicate: `n_interior` interior points (plus the
/// endpoints) with optional additive Gaussian noise on the utilities.
pub fn generate_design(config: &BenchmarkConfig, replicate: usize) -> Result<Dataset> {
    config.validate()?;
    let (lo, hi) = (config.lower, config.upper);
    let m = config.n_interior + 1;
    let mut xs: Vec<f64> = match config.spacing {
        DesignSpacing::EqualOutcome => (1..m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect(),
        DesignSpacing::EqualUtility => (1..m)
            .map(|i| truth_inverse(&config.truth, lo, hi, i as f64 / m as f64))
            .collect::<Result<_>>()?,
    };
    if config.include_endpoints {
        xs.insert(0, lo);
        xs.push(hi);
    }
    let mut us: Vec<f64> = xs.iter().map(|&x| config.truth_at(x)).collect();
    let noise_model = if config.noise_sd > 0.0 {
        let normal = Normal::new(0.0, config.noise_sd).map_err(|e| Error::Validation(e.to_string()))?;
        let mut rng = replicate_rng(config.seed, replicate);
        for u in &mut us {
            *u += normal.sample(&mut rng);
        }
        NoiseModel::Noisy
    } else {
        NoiseModel::NoiseFree
    };
    Dataset::from_pairs(AttributeDomain::interval(lo, hi)?, &xs, &us, noise_model)
}

/// Mean squared difference.
pub fn mse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::Length { left: estimates.len(), right: truths.len() });
    }
    if estimates.is_empty() {
        return Err(Error::Validation("MSE of an empty vector".into()));
    }
    Ok(estimates.iter().zip(truths).map(|(e, t)| (e - t) * (e - t)).sum::<f64>() / estimates.len() as f64)
}

/// Mean of per-replicate MSEs.
pub fn avg_mse(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Validation("average of no replicates".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

fn gasp_config(train: &Dataset, basis: &MeanBasis) -> FitConfig {
    let nugget = match train.noise_model() {
        NoiseModel::NoiseFree => NuggetMode::None,
        NoiseModel::Noisy => NuggetMode::Estimated,
    };
    FitConfig::matern52(train.dim(), basis.clone()).with_nugget(nugget)
}

/// Fits `estimator` on `train` and returns its utility estimate at each query.
pub fn fit_and_predict(
    estimator: Estimator,
    train: &Dataset,
    queries: &[Vec<f64>],
    basis: &MeanBasis,
) -> Result<Vec<f64>> {
    let scalar = || -> Result<Vec<f64>> {
        if train.dim() != 1 {
            return Err(Error::Unsupported(format!("{estimator} needs a single attribute")));
        }
        Ok(queries.iter().map(|q| q[0]).collect())
    };
    match estimator {
        Estimator::Gasp => {
            let model = fit(train, &gasp_config(train, basis))?;
            Ok(model.predict_grid(queries)?.into_iter().map(|p| p.location).collect())
        }
        Estimator::Li => scalar()?.into_iter().map(|x| linear_interpolate(train, x)).collect(),
        Estimator::Exp | Estimator::Pow => {
            let family =
                if estimator == Estimator::Exp { ParametricFamily::Exponential } else { ParametricFamily::Power };
            let f = fit_parametric(train, family)?;
            Ok(scalar()?.into_iter().map(|x| f.eval(x)).collect())
        }
        Estimator::Qpd => {
            let xs = scalar()?;
            let f = fit_qpd(train)?;
            Ok(qpd_estimate_many(&f, &xs))
        }
        Estimator::RandMau => {
            let f = randmau_fit_nls(train)?;
            let dom = train.domain();
            queries
                .iter()
                .map(|q| {
                    let clamped: Vec<f64> =
                        q.iter().enumerate().map(|(i, v)| v.clamp(dom.lower()[i], dom.upper()[i])).collect();
                    randmau_evaluate(&f.model, &clamped)
                })
                .collect()
        }
        Estimator::Mean => {
            let m = train.tuples().iter().map(|t| t.u).sum::<f64>() / train.len() as f64;
            Ok(vec![m; queries.len()])
        }
    }
}

/// A failed (estimator, replicate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureLog {
    pub estimator: Estimator,
    pub parameter: String,
    pub n: usize,
    pub replicate: usize,
    pub message: String,
}

/// One table cell: the MSE (or AvgMSE over the replicates that succeeded).
/// `value` is NaN when every replicate failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub estimator: Estimator,
    pub parameter: String,
    pub n: usize,
    pub value: f64,
    pub replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    /// `MSE`, `AvgMSE`, `LOO-MSE` and so on.
    pub metric: String,
    pub seed: u64,
    pub config_hash: String,
    pub runtime_secs: f64,
    pub configs: Vec<BenchmarkConfig>,
    pub cells: Vec<Cell>,
    pub failures: Vec<FailureLog>,
}

impl ResultTable {
    pub fn cell(&self, estimator: Estimator, parameter: &str, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.parameter == parameter && c.n == n)
    }

    pub fn value(&self, estimator: Estimator, parameter: &str, n: usize) -> f64 {
        self.cell(estimator, parameter, n).map_or(f64::NAN, |c| c.value)
    }

    /// Long-format CSV; contains no timing so reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimator,parameter,n,value,replicates,failures\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.estimator,
                c.parameter,
                c.n,
                crate::domain::format_f64(c.value),
                c.replicates,
                c.failures
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv())?;
        std::fs::write(dir.join(format!("{}.json", self.name)), self.to_json()?)?;
        Ok(())
    }
}

fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Per-replicate MSE of each estimator, `Err` for failed fits.
fn replicate_errors(config: &BenchmarkConfig, replicate: usize) -> Vec<std::result::Result<f64, String>> {
    let grid = config.grid();
    let truths: Vec<f64> = grid.iter().map(|&x| config.truth_at(x)).collect();
    let queries: Vec<Vec<f64>> = grid.iter().map(|&x| vec![x]).collect();
    let data = match generate_design(config, replicate) {
        Ok(d) => d,
        Err(e) => return vec![Err(e.to_string()); config.estimators.len()],
    };
    config
        .estimators
        .iter()
        .map(|&est| {
            fit_and_predict(est, &data, &queries, &config.gasp_basis)
                .and_then(|p| mse(&p, &truths))
                .map_err(|e| e.to_string())
                .and_then(|v| if v.is_finite() { Ok(v) } else { Err("non-finite prediction".into()) })
        })
        .collect()
}

/// Runs every config (column) and collects one cell per estimator.
pub fn run_benchmark(name: &str, configs: &[BenchmarkConfig]) -> Result<ResultTable> {
    let start = Instant::now();
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> =
        configs.iter().enumerate().flat_map(|(ci, c)| (0..c.replicates).map(move |r| (ci, r))).collect();
    let results = par_map(&jobs, |&(ci, r)| replicate_errors(&configs[ci], r));
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (ci, config) in configs.iter().enumerate() {
        let parameter = config.truth.label();
        let n = config.n_interior;
        for (ei, &estimator) in config.estimators.iter().enumerate() {
            let mut ok = Vec::new();
            for (&(cj, r), res) in jobs.iter().zip(&results) {
                if cj != ci {
                    continue;
                }
                match &res[ei] {
                    Ok(v) => ok.push(*v),
                    Err(message) => failures.push(FailureLog {
                        estimator,
                        parameter: parameter.clone(),
                        n,
                        replicate: r,
                        message: message.clone(),
                    }),
                }
            }
            let value = avg_mse(&ok).unwrap_or(f64::NAN);
            cells.push(Cell {
                estimator,
                parameter: parameter.clone(),
                n,
                value,
                replicates: config.replicates,
                failures: config.replicates - ok.len(),
            });
        }
    }
    let metric = if configs.iter().any(|c| c.replicates > 1) { "AvgMSE" } else { "MSE" };
    Ok(ResultTable {
        name: name.to_string(),
        metric: metric.into(),
        seed: configs.first().map_or(0, |c| c.seed),
        config_hash: hash_json(&configs),
        runtime_secs: start.elapsed().as_secs_f64(),
        configs: configs.to_vec(),
        cells,
        failures,
    })
}

/// Re-runs a single (estimator, truth) cell of a config.
pub fn run_cell(config: &BenchmarkConfig, estimator: Estimator) -> Result<Cell> {
    let mut one = config.clone();
    one.estimators = vec![estimator];
    let table = run_benchmark(&config.name, &[one])?;
    Ok(table.cells.into_iter().next().expect("one estimator gives one cell"))
}

/// Published simulation layouts on equal-utility designs. Tables 2 and 3 are
/// noise-free at n = 4 and 7; table 4 is noisy at n = 10 with `replicates`
/// draws (default 200). Exponential columns use the rate form.
pub fn table_configs(table: u8, seed: u64, replicates: Option<usize>) -> Result<Vec<BenchmarkConfig>> {
    use Estimator::*;
    let powers = [0.7, 0.8, 0.9, 1.5, 2.0, 2.5];
    let rhos = [2.0, 1.5, 1.0, -1.0, -1.5, -2.0];
    let make = |truth: Truth, n: usize, estimators: Vec<Estimator>, noise_sd: f64, reps: usize| {
        let mut c = BenchmarkConfig::new(format!("table{table}"), truth, n);
        c.estimators = estimators;
        c.noise_sd = noise_sd;
        c.replicates = reps;
        c.seed = seed;
        c.spacing = DesignSpacing::EqualUtility;
        c
    };
    let mut out = Vec::new();
    match table {
        2 => {
            for n in [4, 7] {
                for &alpha in &powers {
                    out.push(make(Truth::Power { alpha }, n, vec![Exp, Li, Gasp, Qpd], 0.0, 1));
                }
            }
        }
        3 => {
            for n in [4, 7] {
                for &rho in &rhos {
                    out.push(make(Truth::ExponentialRate { rho }, n, vec![Pow, Li, Gasp, Qpd], 0.0, 1));
                }
            }
        }
        4 => {
            let reps = replicates.unwrap_or(200);
            for &alpha in &powers {
                out.push(make(Truth::Power { alpha }, 10, vec![Exp, Li, Gasp, Qpd], 0.005, reps));
            }
            for &rho in &rhos {
                out.push(make(Truth::ExponentialRate { rho }, 10, vec![Pow, Li, Gasp, Qpd], 0.005, reps));
            }
        }
        _ => return Err(Error::Validation(format!("unknown table {table}; expected 2, 3 or 4"))),
    }
    if let Some(r) = replicates {
        for c in &mut out {
            c.replicates = r;
        }
    }
    Ok(out)
}

/// Mean error and 95% band coverage of GaSP against the (unit-variance)
/// Wiener process on one noise-free design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationComparison {
    pub gasp_mse: f64,
    pub wiener_mse: f64,
    pub gasp_coverage: f64,
    pub wiener_coverage: f64,
    pub points: Vec<ComparisonPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    pub x: f64,
    pub truth: f64,
    pub gasp_mean: f64,
    pub gasp_lo95: f64,
    pub gasp_hi95: f64,
    pub wiener_mean: f64,
    pub wiener_lo95: f64,
    pub wiener_hi95: f64,
}

fn covers(lo: f64, hi: f64, y: f64) -> bool {
    let tol = 1e-8 * y.abs().max(1.0);
    y >= lo - tol && y <= hi + tol
}

/// Compares the GaSP fit with the Wiener interpolant on `config`'s design
/// (replicate 0) over its test grid.
pub fn run_interpolation_comparison(config: &BenchmarkConfig) -> Result<InterpolationComparison> {
    let data = generate_design(config, 0)?;
    let model = fit(&data, &gasp_config(&data, &config.gasp_basis))?;
    let wiener = WienerPosterior::from_dataset(&data)?;
    let z = statrs::distribution::ContinuousCDF::inverse_cdf(&statrs::distribution::Normal::standard(), 0.975);
    let grid = config.grid();
    let queries: Vec<Vec<f64>> = grid.iter().map(|&x| vec![x]).collect();
    let preds = model.predict_grid(&queries)?;
    let mut points = Vec::with_capacity(grid.len());
    for (&x, p) in grid.iter().zip(&preds) {
        let (wm, wv) = wiener_predict(&wiener, x)?;
        let (glo, ghi) = p.interval(0.95);
        let half = z * wv.sqrt();
        points.push(ComparisonPoint {
            x,
            truth: config.truth_at(x),
            gasp_mean: p.location,
            gasp_lo95: glo,
            gasp_hi95: ghi,
            wiener_mean: wm,
            wiener_lo95: wm - half,
            wiener_hi95: wm + half,
        });
    }
    let m = points.len() as f64;
    let truths: Vec<f64> = points.iter().map(|p| p.truth).collect();
    let gm: Vec<f64> = points.iter().map(|p| p.gasp_mean).collect();
    let wm: Vec<f64> = points.iter().map(|p| p.wiener_mean).collect();
    Ok(InterpolationComparison {
        gasp_mse: mse(&gm, &truths)?,
        wiener_mse: mse(&wm, &truths)?,
        gasp_coverage: points.iter().filter(|p| covers(p.gasp_lo95, p.gasp_hi95, p.truth)).count() as f64 / m,
        wiener_coverage: points.iter().filter(|p| covers(p.wiener_lo95, p.wiener_hi95, p.truth)).count() as f64 / m,
        points,
    })
}

/// Per-replicate proportions of grid points (GaSP) or interior assessed
/// points (LI) classified as concave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStudy {
    pub config: BenchmarkConfig,
    pub grid_size: usize,
    pub gasp: Vec<f64>,
    pub li: Vec<f64>,
    pub failures: Vec<FailureLog>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

impl CurvatureStudy {
    pub fn gasp_median(&self) -> f64 {
        median(&self.gasp)
    }

    pub fn li_median(&self) -> f64 {
        median(&self.li)
    }

    /// `replicate,gasp,li` rows for box plots.
    pub fn points_csv(&self) -> String {
        let mut out = String::from("replicate,gasp,li\n");
        for (r, (g, l)) in self.gasp.iter().zip(&self.li).enumerate() {
            let _ = writeln!(out, "{r},{},{}", crate::domain::format_f64(*g), crate::domain::format_f64(*l));
        }
        out
    }
}

pub fn run_curvature_study(config: &BenchmarkConfig, grid_size: usize, options: CurvatureOptions) -> Result<CurvatureStudy> {
    config.validate()?;
    let reps: Vec<usize> = (0..config.replicates).collect();
    let rows = par_map(&reps, |&r| -> (std::result::Result<f64, String>, std::result::Result<f64, String>) {
        let data = match generate_design(config, r) {
            Ok(d) => d,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        let g = fit(&data, &gasp_config(&data, &config.gasp_basis))
            .and_then(|m| classify_curvature(&m, grid_size, options))
            .map(|rep| rep.proportion_concave)
            .map_err(|e| e.to_string());
        let l = classify_curvature_li(&data, options).map(|rep| rep.proportion_concave).map_err(|e| e.to_string());
        (g, l)
    });
    let mut study = CurvatureStudy {
        config: config.clone(),
        grid_size,
        gasp: Vec::new(),
        li: Vec::new(),
        failures: Vec::new(),
    };
    for (r, (g, l)) in rows.into_iter().enumerate() {
        for (est, res, out) in [(Estimator::Gasp, g, &mut study.gasp), (Estimator::Li, l, &mut study.li)] {
            match res {
                Ok(v) => out.push(v),
                Err(message) => {
                    out.push(f64::NAN);
                    study.failures.push(FailureLog {
                        estimator: est,
                        parameter: config.truth.label(),
                        n: config.n_interior,
                        replicate: r,
                        message,
                    });
                }
            }
        }
    }
    Ok(study)
}

/// Random train/test splits. Test points are drawn from the interior (all
/// but the smallest and largest outcome of a single attribute) so that
/// interpolators never have to extrapolate.
pub fn run_holdout(
    name: &str,
    dataset: &Dataset,
    n_test: usize,
    replicates: usize,
    seed: u64,
    estimators: &[Estimator],
    basis: &MeanBasis,
) -> Result<ResultTable> {
    let start = Instant::now();
    if n_test == 0 {
        return Err(Error::Validation("holdout needs at least one test point".into()));
    }
    if replicates == 0 {
        return Err(Error::Validation("at least one replicate is required".into()));
    }
    let order: Vec<usize> = if dataset.dim() == 1 {
        let mut idx: Vec<usize> = (0..dataset.len()).collect();
        idx.sort_by(|&a, &b| dataset.tuples()[a].x[0].total_cmp(&dataset.tuples()[b].x[0]));
        idx[1..idx.len() - 1].to_vec()
    } else {
        (0..dataset.len()).collect()
    };
    if n_test >= order.len() || dataset.len() - n_test < 2 {
        return Err(Error::Validation(format!(
            "n_test = {n_test} leaves too few points (dataset has {} eligible test points)",
            order.len()
        )));
    }
    let reps: Vec<usize> = (0..replicates).collect();
    let per_rep = par_map(&reps, |&r| {
        let mut rng = replicate_rng(seed, r);
        let mut test: Vec<usize> = sample(&mut rng, order.len(), n_test).into_iter().map(|i| order[i]).collect();
        test.sort_unstable();
        let train: Vec<usize> = (0..dataset.len()).filter(|i| !test.contains(i)).collect();
        let queries: Vec<Vec<f64>> = test.iter().map(|&i| dataset.tuples()[i].x.clone()).collect();
        let truths: Vec<f64> = test.iter().map(|&i| dataset.tuples()[i].u).collect();
        estimators
            .iter()
            .map(|&est| {
                dataset
                    .subset(&train)
                    .and_then(|tr| fit_and_predict(est, &tr, &queries, basis))
                    .and_then(|p| mse(&p, &truths))
                    .map_err(|e| e.to_string())
            })
            .collect::<Vec<_>>()
    });
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (ei, &estimator) in estimators.iter().enumerate() {
        let mut ok = Vec::new();
        for (r, res) in per_rep.iter().enumerate() {
            match &res[ei] {
                Ok(v) => ok.push(*v),
                Err(message) => failures.push(FailureLog {
                    estimator,
                    parameter: "holdout".into(),
                    n: dataset.len(),
                    replicate: r,
                    message: message.clone(),
                }),
            }
        }
        cells.push(Cell {
            estimator,
            parameter: "holdout".into(),
            n: dataset.len(),
            value: avg_mse(&ok).unwrap_or(f64::NAN),
            replicates,
            failures: replicates - ok.len(),
        });
    }
    Ok(ResultTable {
        name: name.to_string(),
        metric: "AvgMSE".into(),
        seed,
        config_hash: hash_json(&(n_test, replicates, seed, estimators, basis)),
        runtime_secs: start.elapsed().as_secs_f64(),
        configs: Vec::new(),
        cells,
        failures,
    })
}

/// Leave-one-out scores of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRow {
    pub estimator: Estimator,
    pub mse: f64,
    pub r2: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooTable {
    pub name: String,
    pub evaluated: Vec<usize>,
    pub rows: Vec<LooRow>,
    pub failures: Vec<FailureLog>,
}

impl LooTable {
    pub fn row(&self, estimator: Estimator) -> Option<&LooRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimator,mse,r2,failures\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.estimator,
                crate::domain::format_f64(r.mse),
                crate::domain::format_f64(r.r2),
                r.failures
            );
        }
        out
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv())?;
        std::fs::write(dir.join(format!("{}.json", self.name)), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Leaves each point of `subset` (default: all) out in turn, refits on the
/// rest and scores the held-out predictions. `R² = 1 - SSE/SST` with SST
/// about the mean of the evaluated utilities; failed points are skipped.
pub fn run_loo(
    name: &str,
    dataset: &Dataset,
    estimators: &[Estimator],
    subset: Option<&[usize]>,
    basis: &MeanBasis,
) -> Result<LooTable> {
    if dataset.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: dataset.len() });
    }
    let evaluated: Vec<usize> = match subset {
        Some(s) => {
            if let Some(&bad) = s.iter().find(|&&i| i >= dataset.len()) {
                return Err(Error::Validation(format!("LOO index {bad} is out of range")));
            }
            s.to_vec()
        }
        None => (0..dataset.len()).collect(),
    };
    if evaluated.is_empty() {
        return Err(Error::Validation("LOO subset is empty".into()));
    }
    let preds = par_map(&evaluated, |&i| {
        let train: Vec<usize> = (0..dataset.len()).filter(|&j| j != i).collect();
        let query = vec![dataset.tuples()[i].x.clone()];
        estimators
            .iter()
            .map(|&est| {
                dataset
                    .subset(&train)
                    .and_then(|tr| fit_and_predict(est, &tr, &query, basis))
                    .map(|p| p[0])
                    .map_err(|e| e.to_string())
            })
            .collect::<Vec<_>>()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (ei, &estimator) in estimators.iter().enumerate() {
        let mut est = Vec::new();
        let mut obs = Vec::new();
        for (k, &i) in evaluated.iter().enumerate() {
            match &preds[k][ei] {
                Ok(v) => {
                    est.push(*v);
                    obs.push(dataset.tuples()[i].u);
                }
                Err(message) => failures.push(FailureLog {
                    estimator,
                    parameter: "loo".into(),
                    n: dataset.len(),
                    replicate: i,
                    message: message.clone(),
                }),
            }
        }
        let (m, r2) = if est.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let m = mse(&est, &obs)?;
            let mean = obs.iter().sum::<f64>() / obs.len() as f64;
            let sst: f64 = obs.iter().map(|u| (u - mean) * (u - mean)).sum();
            (m, 1.0 - m * obs.len() as f64 / sst)
        };
        rows.push(LooRow { estimator, mse: m, r2, failures: evaluated.len() - est.len() });
    }
    Ok(LooTable { name: name.to_string(), evaluated, rows, failures })
}

/// Evaluates a truth on the design points of a multi-attribute dataset.
pub fn dataset_from_fn(
    domain: AttributeDomain,
    inputs: &[Vec<f64>],
    f: impl Fn(&[f64]) -> f64,
) -> Result<Dataset> {
    let tuples = inputs.iter().map(|x| AssessedTuple::new(x.clone(), f(x))).collect();
    Dataset::new(domain, tuples, NoiseModel::NoiseFree)
}
