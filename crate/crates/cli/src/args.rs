use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use utilgasp::{NoiseModel, TieRule};

#[derive(Debug, Parser)]
#[command(name = "utilgasp", version, about = "Estimate utility functions with Gaussian stochastic processes")]
pub struct Cli {
    /// JSON file of per-subcommand defaults, e.g. {"bench": {"seed": 3}}
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a GaSP to assessed tuples and save the model
    Fit(FitArgs),
    /// Predictive mean and 95% band of a saved model, as CSV
    Predict(PredictArgs),
    /// Label a single-attribute model concave, convex or mixed
    Curvature(CurvatureArgs),
    /// Run one of the simulation tables
    Bench(BenchArgs),
    /// Random train/test splits of a dataset
    Holdout(HoldoutArgs),
    /// Leave-one-out scores on a dataset
    Loo(LooArgs),
    /// Start the HTTP elicitation service
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fit(_) => "fit",
            Self::Predict(_) => "predict",
            Self::Curvature(_) => "curvature",
            Self::Bench(_) => "bench",
            Self::Holdout(_) => "holdout",
            Self::Loo(_) => "loo",
            Self::Serve(_) => "serve",
        }
    }

    pub const NAMES: [&'static str; 7] = ["fit", "predict", "curvature", "bench", "holdout", "loo", "serve"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    NoiseFree,
    Noisy,
}

impl From<Noise> for NoiseModel {
    fn from(n: Noise) -> Self {
        match n {
            Noise::NoiseFree => NoiseModel::NoiseFree,
            Noise::Noisy => NoiseModel::Noisy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ties {
    CountConvex,
    Drop,
}

impl From<Ties> for TieRule {
    fn from(t: Ties) -> Self {
        match t {
            Ties::CountConvex => TieRule::CountConvex,
            Ties::Drop => TieRule::Drop,
        }
    }
}

/// Input CSV: a header, then one row per tuple with the utility last.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DataArgs {
    /// CSV of assessed tuples
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Whether assessed utilities carry error
    #[arg(long, value_enum)]
    pub noise: Option<Noise>,
    /// Lower domain bounds, one per attribute (default: data minimum)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Option<Vec<f64>>,
    /// Upper domain bounds, one per attribute (default: data maximum)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Mean basis, e.g. `const`, `power:0.5`, `linear+power:2@1`
    #[arg(long)]
    pub basis: Option<String>,
    /// Model file to write (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Equally spaced points over a single-attribute domain
    #[arg(long)]
    pub grid: Option<usize>,
    /// CSV of query points (header, one column per attribute)
    #[arg(long, value_name = "FILE")]
    pub points: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CurvatureArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Share of the grid needed for a concave or convex label
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub ties: Option<Ties>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BenchArgs {
    /// 2 or 3 (noise-free power and exponential truths) or 4 (noisy)
    #[arg(long)]
    pub table: Option<u8>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// One cell only, as ESTIMATOR:PARAMETER:N, e.g. `GaSP:alpha=0.7:7`
    #[arg(long)]
    pub cell: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct HoldoutArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Test points per split
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LooArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Row indices to leave out (default: all)
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    /// Directory for session snapshots
    #[arg(long, value_name = "DIR")]
    pub persist: Option<PathBuf>,
}
