use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Parser)]
#[command(
    name = "idmse",
    version,
    about = "Population size estimation from overlapping lists under explicit identifying assumptions"
)]
pub struct Cli {
    /// Worker threads for parallel sampling (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point estimate and intervals for N under one assumption.
    Estimate(EstimateArgs),
    /// Estimates across a list of xi values, or the xi matching a target N.
    Sensitivity(SensitivityArgs),
    /// Whether J-class latent class models on K lists are conditionally identifiable.
    CheckIdent(IdentArgs),
    /// Two latent class models with equal observed-cell probabilities and different pi0.
    Counterexample(CounterexampleArgs),
    /// Repeated-sampling study of an estimator on tables drawn from a latent class model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Freq,
    Bayes,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DataArgs {
    /// Bundled data set (`kosovo`).
    #[arg(long, conflicts_with = "data")]
    pub fixture: Option<String>,
    /// Table file: CSV with one 0/1 column per list and a count column, or JSON.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// List columns to read (default: every column except the count).
    #[arg(long, value_delimiter = ',')]
    pub lists: Option<Vec<String>>,
    #[arg(long)]
    pub count_column: Option<String>,
    /// Add a constant to every observed cell before estimating (0.5 if given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
    pub add_constant: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BayesArgs {
    /// Prior on N: scale, uniform, fienberg:L, poisson:M, nb:M,A, binomial:M,Q,
    /// beta_binomial:NMAX,A,B, truncated:FILE (CSV of N,weight).
    #[arg(long)]
    pub prior: Option<String>,
    /// Working draws of the observed-cell probabilities.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chunk_size: Option<usize>,
    /// Use working draws from a CSV file instead of the Dirichlet sampler.
    #[arg(long)]
    pub draws_file: Option<PathBuf>,
    /// observed_probs or full_probs.
    #[arg(long)]
    pub draws_format: Option<String>,
    /// Dirichlet prior weight for every cell.
    #[arg(long)]
    pub dirichlet_alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write report files and a manifest into this directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// JSON file with default values for any of the long options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// nhoi[:xi=X] or marginal_nhoi:LIST,LIST[:xi=X], or the JSON form.
    #[arg(long)]
    pub assumption: Option<String>,
    /// Overrides xi in the assumption; accepts ratios like 2/3.
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Interval levels.
    #[arg(long, value_delimiter = ',')]
    pub level: Option<Vec<f64>>,
    /// Histogram bins for the posterior of N.
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub bayes: BayesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SensitivityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Assumption family; its xi is replaced by each swept value.
    #[arg(long)]
    pub assumption: Option<String>,
    /// Values of xi, e.g. 1,0.9,2/3.
    #[arg(long, value_delimiter = ',', conflicts_with = "invert")]
    pub xis: Option<Vec<String>>,
    /// Find the xi whose point estimate equals this N.
    #[arg(long)]
    pub invert: Option<f64>,
    /// Search interval for --invert, as LO,HI.
    #[arg(long, value_delimiter = ',', requires = "invert")]
    pub bracket: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub level: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub bayes: BayesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct IdentArgs {
    #[arg(long = "J")]
    #[serde(rename = "J")]
    pub j: Option<usize>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct CounterexampleArgs {
    #[arg(long = "J")]
    #[serde(rename = "J")]
    pub j: Option<usize>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Must lie in (0, 1/(2J)); default 0.99/(2J).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Freq,
    Bayes,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Latent class model as JSON: {"nu": [...], "q": [[...], ...]}.
    #[arg(long)]
    pub lcm: Option<PathBuf>,
    /// Population size.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub big_n: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorChoice>,
    /// Assumption used by the estimator; simulated lists are named L1..LK.
    #[arg(long)]
    pub assumption: Option<String>,
    /// N or pi0.
    #[arg(long)]
    pub estimand: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub level: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub bayes: BayesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// Fills options not given on the command line from the `--config` file.
pub fn merge_config<T>(flags: T, config: Option<&PathBuf>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let Value::Object(file) = serde_json::from_str::<Value>(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?
    else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    let known = match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("argument structs serialize to objects"),
    };
    if let Some(bad) = file.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::Config(format!("unknown config key {bad:?}")));
    }
    let Ok(Value::Object(given)) = serde_json::to_value(&flags) else {
        unreachable!("argument structs serialize to objects")
    };
    let mut merged = file;
    for key in ["xi", "xis"] {
        if let Some(v) = merged.get_mut(key) {
            numbers_to_strings(v);
        }
    }
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(format!("config: {e}")))
}

/// `xi` values are strings on the command line (to allow ratios); config files may use plain numbers.
fn numbers_to_strings(v: &mut Value) {
    match v {
        Value::Number(n) => *v = Value::String(n.to_string()),
        Value::Array(items) => items.iter_mut().for_each(numbers_to_strings),
        _ => {}
    }
}
