//! Objective-Bayes GaSP: reference-prior marginal posterior for the range
//! parameters, its mode, and the closed-form Student-t predictive.
//!
//! With `C~ = C + eta I` (eta = 0 for noise-free data) and basis matrix `H`:
//!
//! * `theta = (H' C~^-1 H)^-1 H' C~^-1 u` (GLS),
//! * `S^2 = (u - H theta)' C~^-1 (u - H theta)`, `sigma^2 = S^2 / (n - q)`,
//! * `log L(gamma) = -1/2 log|C~| - 1/2 log|H' C~^-1 H| - (n - q)/2 log S^2`,
//! * `log pi(gamma) = 1/2 log|I*(gamma)|` with the expected Fisher
//!   information built from `W_l = dC/dgamma_l Q`.
//!
//! Constants independent of the parameters are dropped throughout.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::basis::MeanBasis;
use crate::domain::{AttributeDomain, Dataset, NoiseModel};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linalg::{chol_logdet, cholesky_with_jitter};
use crate::optim::{log_spaced, NelderMead};

/// Format version of the serialized model document.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NuggetMode {
    #[default]
    None,
    Estimated,
}

/// Parameterization in which the marginal posterior mode is taken. The
/// reference prior transforms with the Jacobian, so the mode in `ln gamma`
/// (and `ln eta`) maximizes the density times `∏ gamma_l (· eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeScale {
    #[default]
    Log,
    Natural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default)]
    pub mode_scale: ModeScale,
    pub starts: usize,
    pub max_iter: usize,
    pub obj_tol: f64,
    /// Per-attribute bounds on `ln gamma`; defaults to
    /// `[ln(1e-3 span), ln(1e3 span)]`.
    pub log_gamma_bounds: Option<Vec<(f64, f64)>>,
    /// Bounds on `ln eta` when the nugget is estimated.
    pub log_nugget_bounds: (f64, f64),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mode_scale: ModeScale::Log,
            starts: 5,
            max_iter: 400,
            obj_tol: 1e-9,
            log_gamma_bounds: None,
            log_nugget_bounds: (1e-12f64.ln(), 10f64.ln()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Correlation family per attribute; the range parameters are estimated.
    pub kernel: Vec<KernelFamily>,
    pub basis: MeanBasis,
    pub nugget: NuggetMode,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl FitConfig {
    /// Matérn-5/2 on every attribute, no nugget.
    pub fn matern52(p: usize, basis: MeanBasis) -> Self {
        Self {
            kernel: vec![KernelFamily::Matern52; p],
            basis,
            nugget: NuggetMode::None,
            optimizer: OptimizerConfig::default(),
        }
    }

    pub fn with_nugget(mut self, nugget: NuggetMode) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.kernel.len() != p {
            return Err(Error::Dimension { expected: p, got: self.kernel.len() });
        }
        self.basis.validate(p)?;
        let o = &self.optimizer;
        if o.starts == 0 || !(o.obj_tol > 0.0) {
            return Err(Error::Validation("optimizer needs starts >= 1 and obj_tol > 0".into()));
        }
        if let Some(b) = &o.log_gamma_bounds {
            if b.len() != p || b.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return Err(Error::Validation("log_gamma_bounds must be p finite intervals".into()));
            }
        }
        let (lo, hi) = o.log_nugget_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Validation("log_nugget_bounds must be a finite interval".into()));
        }
        Ok(())
    }

    fn gamma_bounds(&self, domain: &AttributeDomain) -> Vec<(f64, f64)> {
        self.optimizer.log_gamma_bounds.clone().unwrap_or_else(|| {
            (0..domain.dim())
                .map(|l| {
                    let s = domain.span(l);
                    ((1e-3 * s).ln(), (1e3 * s).ln())
                })
                .collect()
        })
    }
}

/// GLS quantities at fixed correlation parameters.
pub(crate) struct Gls {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
    pub logdet_c: f64,
    /// `C~^-1 H`
    pub cinv_h: DMatrix<f64>,
    pub hth_chol: Cholesky<f64, Dyn>,
    pub logdet_hth: f64,
    pub theta: DVector<f64>,
    pub s2: f64,
}

impl Gls {
    pub fn new(rows: &[Vec<f64>], u: &DVector<f64>, h: &DMatrix<f64>, spec: &KernelSpec, eta: f64) -> Result<Self> {
        let n = rows.len();
        let q = h.ncols();
        if h.nrows() != n {
            return Err(Error::Dimension { expected: n, got: h.nrows() });
        }
        if q >= n {
            return Err(Error::Rank(format!("need n > q, got n = {n}, q = {q}")));
        }
        let mut c = spec.gram_rows(rows);
        if eta > 0.0 {
            for i in 0..n {
                c[(i, i)] += eta;
            }
        }
        let (chol, jitter) = cholesky_with_jitter(&c)?;
        let logdet_c = chol_logdet(&chol);
        let cinv_h = chol.solve(h);
        let hth = h.transpose() * &cinv_h;
        let hth_chol = Cholesky::new(hth.clone())
            .ok_or_else(|| Error::Rank("H' C^-1 H is not positive definite".into()))?;
        let logdet_hth = chol_logdet(&hth_chol);
        if !logdet_hth.is_finite() {
            return Err(Error::Rank("H' C^-1 H is singular".into()));
        }
        let theta = hth_chol.solve(&(cinv_h.transpose() * u));
        let resid = u - h * &theta;
        let alpha = chol.solve(&resid);
        let s2 = resid.dot(&alpha).max(0.0);
        Ok(Self { chol, jitter, logdet_c, cinv_h, hth_chol, logdet_hth, theta, s2 })
    }

    pub fn log_likelihood(&self, n: usize, q: usize) -> f64 {
        -0.5 * self.logdet_c - 0.5 * self.logdet_hth - 0.5 * (n - q) as f64 * self.s2.ln()
    }

    /// `Q = C~^-1 - C~^-1 H (H' C~^-1 H)^-1 H' C~^-1`
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let n = self.cinv_h.nrows();
        let cinv = self.chol.solve(&DMatrix::identity(n, n));
        let proj = &self.cinv_h * self.hth_chol.solve(&self.cinv_h.transpose());
        let q = cinv - proj;
        (&q + q.transpose()) * 0.5
    }
}

fn fisher_from_parts(gls: &Gls, rows: &[Vec<f64>], spec: &KernelSpec, nugget_row: bool, q_cols: usize) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let qm = gls.q_matrix();
    let mut ws: Vec<DMatrix<f64>> = (0..spec.dim())
        .map(|l| spec.gram_dgamma(rows, l).map(|cd| cd * &qm))
        .collect::<Result<_>>()?;
    if nugget_row {
        ws.push(qm.clone());
    }
    let k = ws.len();
    let mut info = DMatrix::zeros(k + 1, k + 1);
    info[(0, 0)] = (n - q_cols) as f64;
    for a in 0..k {
        let t = ws[a].trace();
        info[(0, a + 1)] = t;
        info[(a + 1, 0)] = t;
        for b in 0..=a {
            let t = ws[a].component_mul(&ws[b].transpose()).sum();
            info[(a + 1, b + 1)] = t;
            info[(b + 1, a + 1)] = t;
        }
    }
    Ok(info)
}

fn log_half_det(info: &DMatrix<f64>) -> Result<f64> {
    let det = info.clone().lu().determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NonPositiveDet(det));
    }
    Ok(0.5 * det.ln())
}

/// Log marginal likelihood of the range parameters (theta and sigma^2
/// integrated out), up to an additive constant. `nugget` is the ratio
/// `eta = sigma_eps^2 / sigma^2`; `None` means noise-free.
pub fn log_marginal_likelihood(dataset: &Dataset, h: &DMatrix<f64>, spec: &KernelSpec, nugget: Option<f64>) -> Result<f64> {
    let rows = dataset.inputs();
    let gls = Gls::new(&rows, &dataset.utilities(), h, spec, nugget.unwrap_or(0.0))?;
    Ok(gls.log_likelihood(rows.len(), h.ncols()))
}

/// Expected Fisher information, `(p+1) x (p+1)`, or `(p+2) x (p+2)` with a
/// trailing nugget row (`dC~/deta = I`) when `nugget` is `Some`.
pub fn fisher_info(dataset: &Dataset, h: &DMatrix<f64>, spec: &KernelSpec, nugget: Option<f64>) -> Result<DMatrix<f64>> {
    let rows = dataset.inputs();
    let gls = Gls::new(&rows, &dataset.utilities(), h, spec, nugget.unwrap_or(0.0))?;
    fisher_from_parts(&gls, &rows, spec, nugget.is_some(), h.ncols())
}

/// `1/2 log |I*(gamma)|`.
pub fn log_reference_prior(dataset: &Dataset, h: &DMatrix<f64>, spec: &KernelSpec, nugget: Option<f64>) -> Result<f64> {
    log_half_det(&fisher_info(dataset, h, spec, nugget)?)
}

pub fn log_marginal_posterior(dataset: &Dataset, h: &DMatrix<f64>, spec: &KernelSpec, nugget: Option<f64>) -> Result<f64> {
    let rows = dataset.inputs();
    let gls = Gls::new(&rows, &dataset.utilities(), h, spec, nugget.unwrap_or(0.0))?;
    let info = fisher_from_parts(&gls, &rows, spec, nugget.is_some(), h.ncols())?;
    Ok(gls.log_likelihood(rows.len(), h.ncols()) + log_half_det(&info)?)
}

/// Student-t predictive distribution `t(location, scale2, dof)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveT {
    pub location: f64,
    pub scale2: f64,
    pub dof: usize,
}

impl PredictiveT {
    pub fn scale(&self) -> f64 {
        self.scale2.sqrt()
    }

    /// Upper quantile `t_{(1+level)/2, dof}` of the standard t.
    pub fn t_quantile(dof: usize, level: f64) -> f64 {
        let t = StudentsT::new(0.0, 1.0, dof as f64).expect("dof >= 1");
        t.inverse_cdf(0.5 + level / 2.0)
    }

    /// Central interval with the given coverage, e.g. `0.95`.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let half = Self::t_quantile(self.dof, level) * self.scale();
        (self.location - half, self.location + half)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            return if v < self.location {
                0.0
            } else if v > self.location {
                1.0
            } else {
                0.5
            };
        }
        let t = StudentsT::new(0.0, 1.0, self.dof as f64).expect("dof >= 1");
        t.cdf((v - self.location) / s)
    }
}

/// A trained model. Immutable; prediction is read-only.
#[derive(Debug, Clone)]
pub struct FittedGasp {
    dataset: Dataset,
    basis: MeanBasis,
    spec: KernelSpec,
    nugget: f64,
    nugget_mode: NuggetMode,
    h: DMatrix<f64>,
    rows: Vec<Vec<f64>>,
    gls: std::sync::Arc<GlsCache>,
    sigma2: f64,
    log_posterior: f64,
    converged: bool,
}

#[derive(Debug)]
struct GlsCache {
    l: DMatrix<f64>,
    jitter: f64,
    hth_chol: Cholesky<f64, Dyn>,
    theta: DVector<f64>,
    /// `L^-1 (u - H theta)`
    white_resid: DVector<f64>,
    /// `L^-1 H`
    white_h: DMatrix<f64>,
}

/// Serialized form of [`FittedGasp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub dataset: Dataset,
    pub basis: MeanBasis,
    pub kernel: Vec<KernelFamily>,
    pub gamma: Vec<f64>,
    pub nugget: f64,
    pub nugget_mode: NuggetMode,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub log_posterior: f64,
    pub converged: bool,
}

impl FittedGasp {
    /// Builds the model at fixed correlation parameters (no optimization).
    pub fn at_parameters(dataset: &Dataset, basis: &MeanBasis, spec: KernelSpec, nugget: f64, nugget_mode: NuggetMode) -> Result<Self> {
        if spec.dim() != dataset.dim() {
            return Err(Error::Dimension { expected: dataset.dim(), got: spec.dim() });
        }
        basis.validate(dataset.dim())?;
        let rows = dataset.inputs();
        let h = basis.matrix(&rows)?;
        let gls = Gls::new(&rows, &dataset.utilities(), &h, &spec, nugget)?;
        let n = rows.len();
        let q = h.ncols();
        let sigma2 = gls.s2 / (n - q) as f64;
        let nugget_row = nugget_mode == NuggetMode::Estimated;
        let log_posterior = fisher_from_parts(&gls, &rows, &spec, nugget_row, q)
            .and_then(|info| log_half_det(&info))
            .map(|lp| lp + gls.log_likelihood(n, q))
            .unwrap_or(f64::NEG_INFINITY);
        let l = gls.chol.l();
        let resid = dataset.utilities() - &h * &gls.theta;
        let white = |b: &DMatrix<f64>| l.solve_lower_triangular(b).expect("Cholesky factor has a positive diagonal");
        let white_resid = white(&DMatrix::from_column_slice(n, 1, resid.as_slice())).column(0).into_owned();
        let white_h = white(&h);
        let cache = GlsCache { l, jitter: gls.jitter, hth_chol: gls.hth_chol, theta: gls.theta, white_resid, white_h };
        Ok(Self {
            dataset: dataset.clone(),
            basis: basis.clone(),
            spec,
            nugget,
            nugget_mode,
            h,
            rows,
            gls: std::sync::Arc::new(cache),
            sigma2,
            log_posterior,
            converged: true,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn basis(&self) -> &MeanBasis {
        &self.basis
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn gamma(&self) -> &[f64] {
        self.spec.gammas()
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.gls.theta
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn dof(&self) -> usize {
        self.rows.len() - self.h.ncols()
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_posterior
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Diagonal jitter the Cholesky factorization needed (0 if none).
    pub fn jitter(&self) -> f64 {
        self.gls.jitter
    }

    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Lower Cholesky factor of `C + eta I` (plus jitter).
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.gls.l.clone()
    }

    pub(crate) fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `location` and `c**`-style variance factor for a generic linear
    /// functional with cross-covariance `cross`, prior variance `prior_var`,
    /// and basis row `h_star`.
    pub(crate) fn predictive_parts(&self, cross: &DVector<f64>, prior_var: f64, h_star: &DVector<f64>) -> (f64, f64) {
        let w = self.gls.l.solve_lower_triangular(cross).expect("Cholesky factor has a positive diagonal");
        let location = h_star.dot(&self.gls.theta) + w.dot(&self.gls.white_resid);
        let resid_h = h_star - self.gls.white_h.transpose() * &w;
        let correction = resid_h.dot(&self.gls.hth_chol.solve(&resid_h));
        let var = prior_var - w.dot(&w) + correction;
        (location, var)
    }

    pub fn predict(&self, x: &[f64]) -> Result<PredictiveT> {
        if x.len() != self.spec.dim() {
            return Err(Error::Dimension { expected: self.spec.dim(), got: x.len() });
        }
        let h_star = self.basis.row(x)?;
        let cross = self.spec.cross(&self.rows, x);
        let (location, c_star) = self.predictive_parts(&cross, 1.0, &h_star);
        Ok(PredictiveT { location, scale2: (self.sigma2 * c_star).max(0.0), dof: self.dof() })
    }

    /// Unclamped `c**` at `x`; exposed for diagnostics.
    pub fn variance_factor(&self, x: &[f64]) -> Result<f64> {
        let h_star = self.basis.row(x)?;
        let cross = self.spec.cross(&self.rows, x);
        Ok(self.predictive_parts(&cross, 1.0, &h_star).1)
    }

    /// Batch prediction at the rows of `grid`.
    pub fn predict_grid(&self, grid: &[Vec<f64>]) -> Result<Vec<PredictiveT>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if grid.len() >= 256 {
                return grid.par_iter().map(|x| self.predict(x)).collect();
            }
        }
        grid.iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            version: MODEL_VERSION,
            dataset: self.dataset.clone(),
            basis: self.basis.clone(),
            kernel: self.spec.families().to_vec(),
            gamma: self.spec.gammas().to_vec(),
            nugget: self.nugget,
            nugget_mode: self.nugget_mode,
            theta: self.gls.theta.iter().copied().collect(),
            sigma2: self.sigma2,
            log_posterior: self.log_posterior,
            converged: self.converged,
        }
    }

    /// Rebuilds a model from its document without re-optimizing.
    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        if doc.version != MODEL_VERSION {
            return Err(Error::Validation(format!("unsupported model version {}", doc.version)));
        }
        let spec = KernelSpec::new(doc.kernel.clone(), doc.gamma.clone())?;
        let mut model = Self::at_parameters(&doc.dataset, &doc.basis, spec, doc.nugget, doc.nugget_mode)?;
        model.converged = doc.converged;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}

/// Fits the GaSP: range parameters (and nugget, if estimated) at the mode
/// of the reference-prior marginal posterior, found by multi-start
/// Nelder–Mead in log space.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FittedGasp> {
    let p = dataset.dim();
    config.validate(p)?;
    let rows = dataset.inputs();
    let u = dataset.utilities();
    let h = config.basis.matrix(&rows)?;
    let n = rows.len();
    let q = h.ncols();
    if q >= n {
        return Err(Error::Rank(format!("need n > q, got n = {n}, q = {q}")));
    }
    // Full column rank of H itself.
    if Cholesky::new(h.transpose() * &h).is_none() || h.clone().svd(false, false).rank(1e-10 * h.norm()) < q {
        return Err(Error::Rank("basis design matrix is rank deficient".into()));
    }
    let estimate_nugget = config.nugget == NuggetMode::Estimated;
    let mut bounds = config.gamma_bounds(dataset.domain());
    if estimate_nugget {
        bounds.push(config.optimizer.log_nugget_bounds);
    }

    let objective = |params: &[f64]| -> f64 {
        let gammas: Vec<f64> = params[..p].iter().map(|v| v.exp()).collect();
        let Ok(spec) = KernelSpec::new(config.kernel.clone(), gammas) else {
            return f64::INFINITY;
        };
        let eta = if estimate_nugget { params[p].exp() } else { 0.0 };
        let Ok(gls) = Gls::new(&rows, &u, &h, &spec, eta) else {
            return f64::INFINITY;
        };
        let Ok(info) = fisher_from_parts(&gls, &rows, &spec, estimate_nugget, q) else {
            return f64::INFINITY;
        };
        let jacobian = match config.optimizer.mode_scale {
            ModeScale::Log => params.iter().sum::<f64>(),
            ModeScale::Natural => 0.0,
        };
        match log_half_det(&info) {
            Ok(lp) => -(gls.log_likelihood(n, q) + lp + jacobian),
            Err(_) => f64::INFINITY,
        }
    };

    let starts = config.optimizer.starts;
    let gamma_starts: Vec<Vec<f64>> = (0..p)
        .map(|l| {
            let s = dataset.domain().span(l);
            log_spaced(0.03 * s, 30.0 * s, starts).into_iter().map(f64::ln).collect()
        })
        .collect();
    let nugget_starts: Vec<f64> = log_spaced(1e-4, 1e-1, starts).into_iter().map(f64::ln).collect();
    let nm = NelderMead {
        max_iter: config.optimizer.max_iter,
        f_tol: config.optimizer.obj_tol,
        x_tol: 1e-6,
        initial_step: 0.05,
    };

    let mut best: Option<crate::optim::Minimum> = None;
    for s in 0..starts {
        let mut x0: Vec<f64> = gamma_starts.iter().map(|g| g[s]).collect();
        if estimate_nugget {
            x0.push(nugget_starts[s]);
        }
        let m = nm.minimize(objective, &x0, &bounds);
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| Error::OptFailure("no start produced a finite marginal posterior".into()))?;
    let gammas: Vec<f64> = best.x[..p].iter().map(|v| v.exp()).collect();
    let eta = if estimate_nugget { best.x[p].exp() } else { 0.0 };
    let spec = KernelSpec::new(config.kernel.clone(), gammas)?;
    let mut model = FittedGasp::at_parameters(dataset, &config.basis, spec, eta, config.nugget)?;
    model.converged = best.converged;
    Ok(model)
}

/// Convenience: default Matérn-5/2 fit with the given basis, with the nugget
/// estimated when the dataset is marked noisy.
pub fn fit_default(dataset: &Dataset, basis: MeanBasis) -> Result<FittedGasp> {
    let nugget = match dataset.noise_model() {
        NoiseModel::NoiseFree => NuggetMode::None,
        NoiseModel::Noisy => NuggetMode::Estimated,
    };
    fit(dataset, &FitConfig::matern52(dataset.dim(), basis).with_nugget(nugget))
}
