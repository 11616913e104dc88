//! Assessed tuples, their attribute domain, and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed box `[lower_l, upper_l]` for each of the `p` attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AttributeDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Validation("domain needs at least one attribute".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Length { left: lower.len(), right: upper.len() });
        }
        for (l, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Validation(format!(
                    "attribute {l}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn span(&self, attribute: usize) -> f64 {
        self.upper[attribute] - self.lower[attribute]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Smallest box containing every row of `points`.
    pub fn bounding(points: &[Vec<f64>]) -> Result<Self> {
        let p = points.first().map(Vec::len).unwrap_or(0);
        let mut lower = vec![f64::INFINITY; p];
        let mut upper = vec![f64::NEG_INFINITY; p];
        for x in points {
            for l in 0..p {
                lower[l] = lower[l].min(x[l]);
                upper[l] = upper[l].max(x[l]);
            }
        }
        Self::new(lower, upper)
    }
}

/// One assessment `(x, u(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessedTuple {
    pub x: Vec<f64>,
    pub u: f64,
}

impl AssessedTuple {
    pub fn new(x: Vec<f64>, u: f64) -> Self {
        Self { x, u }
    }

    pub fn scalar(x: f64, u: f64) -> Self {
        Self { x: vec![x], u }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NoiseModel {
    #[default]
    NoiseFree,
    Noisy,
}

/// Validated training data. Row order is preserved as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    domain: AttributeDomain,
    tuples: Vec<AssessedTuple>,
    noise_model: NoiseModel,
    columns: Vec<String>,
}

fn default_columns(p: usize) -> Vec<String> {
    if p == 1 {
        vec!["x".into(), "u".into()]
    } else {
        (1..=p).map(|l| format!("x{l}")).chain(std::iter::once("u".into())).collect()
    }
}

impl Dataset {
    pub fn new(
        domain: AttributeDomain,
        tuples: Vec<AssessedTuple>,
        noise_model: NoiseModel,
    ) -> Result<Self> {
        let columns = default_columns(domain.dim());
        Self::with_columns(domain, tuples, noise_model, columns)
    }

    /// Like [`Dataset::new`] but with explicit column names (attributes first,
    /// utility last).
    pub fn with_columns(
        domain: AttributeDomain,
        tuples: Vec<AssessedTuple>,
        noise_model: NoiseModel,
        columns: Vec<String>,
    ) -> Result<Self> {
        let p = domain.dim();
        if columns.len() != p + 1 {
            return Err(Error::Dimension { expected: p + 1, got: columns.len() });
        }
        if tuples.len() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 assessed tuples, got {}",
                tuples.len()
            )));
        }
        for (i, t) in tuples.iter().enumerate() {
            if t.x.len() != p {
                return Err(Error::Validation(format!(
                    "row {}: expected {p} attributes, got {}",
                    i + 1,
                    t.x.len()
                )));
            }
            if !t.u.is_finite() {
                return Err(Error::Validation(format!("row {}: utility is not finite", i + 1)));
            }
            if !domain.contains(&t.x) {
                return Err(Error::Validation(format!(
                    "row {}: x = {:?} lies outside the domain",
                    i + 1,
                    t.x
                )));
            }
        }
        if noise_model == NoiseModel::NoiseFree {
            for i in 1..tuples.len() {
                if let Some(j) = (0..i).find(|&j| tuples[j].x == tuples[i].x) {
                    return Err(Error::Validation(format!(
                        "row {} duplicates the input of row {}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { domain, tuples, noise_model, columns })
    }

    /// Single-attribute convenience constructor.
    pub fn from_pairs(
        domain: AttributeDomain,
        xs: &[f64],
        us: &[f64],
        noise_model: NoiseModel,
    ) -> Result<Self> {
        if xs.len() != us.len() {
            return Err(Error::Length { left: xs.len(), right: us.len() });
        }
        let tuples = xs.iter().zip(us).map(|(&x, &u)| AssessedTuple::scalar(x, u)).collect();
        Self::new(domain, tuples, noise_model)
    }

    pub fn domain(&self) -> &AttributeDomain {
        &self.domain
    }

    pub fn tuples(&self) -> &[AssessedTuple] {
        &self.tuples
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise_model
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `n x p` design matrix.
    pub fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.dim(), |i, l| self.tuples[i].x[l])
    }

    pub fn utilities(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.tuples.iter().map(|t| t.u))
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.tuples.iter().map(|t| t.x.clone()).collect()
    }

    /// Same dataset with the utilities replaced.
    pub fn with_utilities(&self, us: &[f64]) -> Result<Self> {
        if us.len() != self.len() {
            return Err(Error::Length { left: us.len(), right: self.len() });
        }
        let tuples = self
            .tuples
            .iter()
            .zip(us)
            .map(|(t, &u)| AssessedTuple::new(t.x.clone(), u))
            .collect();
        Self::with_columns(self.domain.clone(), tuples, self.noise_model, self.columns.clone())
    }

    /// Keeps the tuples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let tuples = indices.iter().map(|&i| self.tuples[i].clone()).collect();
        Self::with_columns(self.domain.clone(), tuples, self.noise_model, self.columns.clone())
    }

    pub fn with_noise_model(&self, noise_model: NoiseModel) -> Result<Self> {
        Self::with_columns(self.domain.clone(), self.tuples.clone(), noise_model, self.columns.clone())
    }

    /// Single-attribute copy sorted by `x`.
    pub fn sorted_by_x(&self) -> Self {
        let mut out = self.clone();
        out.tuples.sort_by(|a, b| a.x[0].total_cmp(&b.x[0]));
        out
    }
}

/// How to interpret a CSV file: the attribute box (inferred from the data
/// when absent) and the noise model used for validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub domain: Option<AttributeDomain>,
    pub noise_model: NoiseModel,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, schema)
}

pub fn parse_dataset(text: &str, schema: &CsvSchema) -> Result<Dataset> {
    read_dataset(text.as_bytes(), schema)
}

/// Reads a header row followed by rows of `p` attribute values and one
/// utility value.
pub fn read_dataset<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(Error::Parse {
            row: 0,
            message: "header must name at least one attribute and the utility".into(),
        });
    }
    let p = header.len() - 1;
    if let Some(domain) = &schema.domain {
        if domain.dim() != p {
            return Err(Error::Dimension { expected: domain.dim(), got: p });
        }
    }
    let mut tuples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if record.len() != p + 1 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", p + 1, record.len()),
            });
        }
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    row,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        tuples.push(AssessedTuple::new(values[..p].to_vec(), values[p]));
    }
    let domain = match &schema.domain {
        Some(d) => d.clone(),
        None => {
            let xs: Vec<Vec<f64>> = tuples.iter().map(|t| t.x.clone()).collect();
            AttributeDomain::bounding(&xs)?
        }
    };
    Dataset::with_columns(domain, tuples, schema.noise_model, header)
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset<W: Write>(writer: W, d: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(d.columns()).map_err(csv_err)?;
    for t in d.tuples() {
        let row: Vec<String> = t.x.iter().chain(std::iter::once(&t.u)).map(|&v| format_f64(v)).collect();
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, d: &Dataset) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::File::create(path)?;
    write_dataset(file, d)
}

/// Affinely maps the utilities so their minimum becomes `new_min` and their
/// maximum `new_max`.
pub fn rescale_utilities(d: &Dataset, new_min: f64, new_max: f64) -> Result<Dataset> {
    let (lo, hi) = d
        .tuples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t.u), hi.max(t.u)));
    if hi <= lo {
        return Err(Error::Degenerate("all utilities are equal".into()));
    }
    if lo == new_min && hi == new_max {
        return Ok(d.clone());
    }
    let scale = (new_max - new_min) / (hi - lo);
    let us: Vec<f64> = d
        .tuples()
        .iter()
        .map(|t| {
            if t.u == lo {
                new_min
            } else if t.u == hi {
                new_max
            } else {
                new_min + (t.u - lo) * scale
            }
        })
        .collect();
    d.with_utilities(&us)
}
