//! Session state and the numeric payloads served for it. Nothing here knows
//! about HTTP.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use utilgasp::derivatives::{classify_curvature, inset_grid, local_risk_aversion, CurvatureOptions};
use utilgasp::gasp::fit;
use utilgasp::{
    AssessedTuple, AttributeDomain, CurvatureReport, Dataset, Error, FitConfig, FittedGasp, NoiseModel, NuggetMode,
};

/// Candidate grids for `suggest` are capped at this many points.
pub const MAX_CANDIDATES: usize = 4096;

#[derive(Debug)]
pub enum SessionError {
    /// Bad input from the client.
    Invalid(String),
    /// The request needs a fitted model but the session has fewer than two tuples.
    NotFitted(usize),
    NoSuchTuple(usize),
    /// The refit itself failed.
    Numeric(String),
}

impl From<Error> for SessionError {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            SessionError::Invalid(e.to_string())
        } else {
            SessionError::Numeric(e.to_string())
        }
    }
}

pub type SessionResult<T> = std::result::Result<T, SessionError>;

/// The persisted part of a session; the fit is rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub domain: AttributeDomain,
    pub noise_model: NoiseModel,
    pub config: FitConfig,
    pub tuples: Vec<AssessedTuple>,
    pub revision: u64,
    pub created: u64,
    pub updated: u64,
}

pub struct Session {
    state: Snapshot,
    fit: Option<FittedGasp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub id: String,
    pub revision: u64,
    pub n: usize,
    pub tuples: Vec<AssessedTuple>,
    pub fitted: bool,
    pub gamma: Option<Vec<f64>>,
    pub nugget: Option<f64>,
    pub theta: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    pub log_posterior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub scale2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub revision: u64,
    pub points: Vec<BandPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub x: f64,
    /// `None` where the slope is too close to zero.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Risk {
    pub revision: u64,
    pub report: CurvatureReport,
    pub lambda: Vec<LambdaPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub revision: u64,
    pub x: Vec<f64>,
    pub scale2: f64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Default fit settings for a session: Matérn-5/2, a nugget when noisy.
pub fn default_config(p: usize, basis: utilgasp::MeanBasis, noise_model: NoiseModel) -> FitConfig {
    let nugget = match noise_model {
        NoiseModel::NoiseFree => NuggetMode::None,
        NoiseModel::Noisy => NuggetMode::Estimated,
    };
    FitConfig::matern52(p, basis).with_nugget(nugget)
}

impl Session {
    pub fn new(
        domain: AttributeDomain,
        noise_model: NoiseModel,
        config: FitConfig,
        tuples: Vec<AssessedTuple>,
    ) -> SessionResult<Self> {
        config.validate(domain.dim())?;
        let t = now();
        let state = Snapshot {
            id: uuid::Uuid::new_v4().simple().to_string(),
            domain,
            noise_model,
            config,
            tuples: Vec::new(),
            revision: 0,
            created: t,
            updated: t,
        };
        let mut s = Self { state, fit: None };
        if !tuples.is_empty() {
            s.replace_tuples(tuples)?;
            s.state.revision = 0;
        }
        Ok(s)
    }

    pub fn restore(snapshot: Snapshot) -> SessionResult<Self> {
        snapshot.config.validate(snapshot.domain.dim())?;
        let fit = Self::refit(&snapshot, &snapshot.tuples)?;
        Ok(Self { state: snapshot, fit })
    }

    pub fn id(&self) -> &str {
        &self.state.id
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.state
    }

    pub fn model(&self) -> Option<&FittedGasp> {
        self.fit.as_ref()
    }

    fn refit(state: &Snapshot, tuples: &[AssessedTuple]) -> SessionResult<Option<FittedGasp>> {
        let dim = state.domain.dim();
        for (i, t) in tuples.iter().enumerate() {
            if t.x.len() != dim {
                return Err(SessionError::Invalid(format!("tuple {i}: expected {dim} attributes, got {}", t.x.len())));
            }
            if !state.domain.contains(&t.x) {
                return Err(SessionError::Invalid(format!("tuple {i}: x = {:?} lies outside the domain", t.x)));
            }
            if !t.u.is_finite() {
                return Err(SessionError::Invalid(format!("tuple {i}: utility is not finite")));
            }
        }
        if state.noise_model == NoiseModel::NoiseFree {
            for i in 1..tuples.len() {
                if tuples[..i].iter().any(|t| t.x == tuples[i].x) {
                    return Err(SessionError::Invalid(format!("x = {:?} is already assessed", tuples[i].x)));
                }
            }
        }
        if tuples.len() < 2 {
            return Ok(None);
        }
        let d = Dataset::new(state.domain.clone(), tuples.to_vec(), state.noise_model)?;
        Ok(Some(fit(&d, &state.config)?))
    }

    /// Validates and refits with `tuples`; the session is unchanged on error.
    fn replace_tuples(&mut self, tuples: Vec<AssessedTuple>) -> SessionResult<()> {
        let fit = Self::refit(&self.state, &tuples)?;
        self.state.tuples = tuples;
        self.fit = fit;
        self.state.revision += 1;
        self.state.updated = now();
        Ok(())
    }

    pub fn add_tuple(&mut self, tuple: AssessedTuple) -> SessionResult<FitSummary> {
        let mut tuples = self.state.tuples.clone();
        tuples.push(tuple);
        self.replace_tuples(tuples)?;
        Ok(self.summary())
    }

    pub fn remove_tuple(&mut self, index: usize) -> SessionResult<FitSummary> {
        if index >= self.state.tuples.len() {
            return Err(SessionError::NoSuchTuple(index));
        }
        let mut tuples = self.state.tuples.clone();
        tuples.remove(index);
        self.replace_tuples(tuples)?;
        Ok(self.summary())
    }

    pub fn summary(&self) -> FitSummary {
        let m = self.fit.as_ref();
        FitSummary {
            id: self.state.id.clone(),
            revision: self.state.revision,
            n: self.state.tuples.len(),
            tuples: self.state.tuples.clone(),
            fitted: m.is_some(),
            gamma: m.map(|m| m.gamma().to_vec()),
            nugget: m.map(|m| m.nugget()),
            theta: m.map(|m| m.theta().iter().copied().collect()),
            sigma2: m.map(|m| m.sigma2()),
            log_posterior: m.map(|m| m.log_posterior()),
        }
    }

    fn fitted(&self) -> SessionResult<&FittedGasp> {
        self.fit.as_ref().ok_or(SessionError::NotFitted(self.state.tuples.len()))
    }

    fn interval(&self) -> SessionResult<(f64, f64)> {
        let d = &self.state.domain;
        if d.dim() != 1 {
            return Err(SessionError::Invalid(format!("this view needs a single attribute, session has {}", d.dim())));
        }
        Ok((d.lower()[0], d.upper()[0]))
    }

    pub fn band(&self, m: usize) -> SessionResult<Band> {
        if m < 2 {
            return Err(SessionError::Invalid("band needs m >= 2".into()));
        }
        let model = self.fitted()?;
        let (lo, hi) = self.interval()?;
        let xs: Vec<Vec<f64>> = (0..m).map(|i| vec![lo + (hi - lo) * i as f64 / (m - 1) as f64]).collect();
        let preds = model.predict_grid(&xs)?;
        let points = xs
            .iter()
            .zip(preds)
            .map(|(x, p)| {
                let (lo95, hi95) = p.interval(0.95);
                BandPoint { x: x[0], mean: p.location, lo95, hi95, scale2: p.scale2 }
            })
            .collect();
        Ok(Band { revision: self.state.revision, points })
    }

    pub fn risk(&self, grid_size: usize, m: usize) -> SessionResult<Risk> {
        if grid_size == 0 || m == 0 {
            return Err(SessionError::Invalid("risk grids need at least one point".into()));
        }
        let model = self.fitted()?;
        let (lo, hi) = self.interval()?;
        let report = classify_curvature(model, grid_size, CurvatureOptions::default())?;
        let lambda = inset_grid(lo, hi, m)
            .into_iter()
            .map(|x| match local_risk_aversion(model, x) {
                Ok(v) => Ok(LambdaPoint { x, lambda: Some(v) }),
                Err(Error::NearZeroSlope(_)) => Ok(LambdaPoint { x, lambda: None }),
                Err(e) => Err(SessionError::from(e)),
            })
            .collect::<SessionResult<_>>()?;
        Ok(Risk { revision: self.state.revision, report, lambda })
    }

    /// Candidate lattice with `k` points per attribute, `k^p <= MAX_CANDIDATES`.
    fn candidates(&self, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = &self.state.domain;
        let p = d.dim();
        let cap = (MAX_CANDIDATES as f64).powf(1.0 / p as f64).floor() as usize;
        let k = m.min(cap).max(2);
        let steps: Vec<f64> = (0..p).map(|l| d.span(l) / (k - 1) as f64).collect();
        let total = k.pow(p as u32);
        let points = (0..total)
            .map(|mut idx| {
                let mut x = vec![0.0; p];
                for l in (0..p).rev() {
                    x[l] = d.lower()[l] + steps[l] * (idx % k) as f64;
                    idx /= k;
                }
                x
            })
            .collect();
        (points, steps)
    }

    /// Candidate point of largest predictive scale², skipping points within
    /// one grid step of the design.
    pub fn suggest(&self, m: usize) -> SessionResult<Suggestion> {
        if m < 2 {
            return Err(SessionError::Invalid("suggest needs m >= 2".into()));
        }
        let model = self.fitted()?;
        let (points, steps) = self.candidates(m);
        let near = |x: &[f64]| {
            self.state.tuples.iter().any(|t| {
                t.x.iter().zip(x).zip(&steps).all(|((a, b), s)| (a - b).abs() < s * (1.0 - 1e-9))
            })
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in points.iter().enumerate() {
            if near(x) {
                continue;
            }
            let s2 = model.predict(x)?.scale2;
            if best.is_none_or(|(_, b)| s2 > b) {
                best = Some((i, s2));
            }
        }
        let (i, scale2) =
            best.ok_or_else(|| SessionError::Invalid("every candidate lies within one step of the design".into()))?;
        Ok(Suggestion { revision: self.state.revision, x: points[i].clone(), scale2 })
    }
}
