// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fused_changepoint::cv::DEFAULT_FOLDS;
use fused_changepoint::sim::{Experiment, DEFAULT_NOISE_SD, DEFAULT_PERMUTATIONS, DEFAULT_Q};
use fused_changepoint::trend::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::manifest::TOOL_VERSION;

#[derive(Parser, Debug)]
#[command(name = "fcp", version = TOOL_VERSION, about = "Changepoint estimation with fused lasso and Haar post-filtering")]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Fit a fused lasso, trend filter or graph fused lasso.
    Fit(FitArgs),
    /// Post-process a 1-D fit with the Haar filter.
    Filter(FilterArgs),
    /// Choose the filter threshold by residual permutation.
    SelectTau(SelectTauArgs),
    /// Build the lower interpolant of a signal.
    Interpolant(InterpolantArgs),
    /// Distances between changepoint sets.
    Metrics(MetricsArgs),
    /// Run a simulation experiment.
    Simulate(SimulateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// `auto` or an explicit value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AutoOr<T> {
    Auto,
    Value(T),
}

impl<T: FromStr> FromStr for AutoOr<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        s.parse()
            .map(AutoOr::Value)
            .map_err(|_| format!("expected `auto` or a number, got {s:?}"))
    }
}

impl<T: fmt::Display> fmt::Display for AutoOr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutoOr::Auto => f.write_str("auto"),
            AutoOr::Value(v) => v.fmt(f),
        }
    }
}

impl<T: Serialize> Serialize for AutoOr<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => v.serialize(s),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for AutoOr<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Value(T),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Value(v) => Ok(AutoOr::Value(v)),
            Repr::Word(w) if w == "auto" => Ok(AutoOr::Auto),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"auto\", got {w:?}"
            ))),
        }
    }
}

/// `k=<folds>,grid=<auto|points>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub folds: usize,
    /// Number of geometric grid points; `None` is the default grid.
    pub grid_points: Option<usize>,
}

impl FromStr for CvSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut spec = CvSpec {
            folds: DEFAULT_FOLDS,
            grid_points: None,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            match key.trim() {
                "k" => {
                    spec.folds = value
                        .trim()
                        .parse()
                        .map_err(|_| format!("bad fold count {value:?}"))?
                }
                "grid" => {
                    spec.grid_points = match value.trim().parse::<AutoOr<usize>>()? {
                        AutoOr::Auto => None,
                        AutoOr::Value(v) => Some(v),
                    }
                }
                other => return Err(format!("unknown cross-validation option {other:?}")),
            }
        }
        Ok(spec)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// 1-D fused lasso.
    Fl1d,
    /// Linear trend filtering.
    Tf1,
    /// Graph fused lasso.
    Gfl,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Signal file: one value per line, or a single-column CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, conflicts_with = "cv")]
    pub lambda: Option<f64>,
    /// Cross-validated penalty (fl1d only), e.g. `k=5,grid=auto`.
    #[arg(long)]
    pub cv: Option<CvSpec>,
    /// Edge list, one `i j` pair per line (gfl only).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Full,
    Reduced,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FilterArgs {
    /// Output of `fit` (fl1d or tf1).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "auto")]
    pub bandwidth: AutoOr<usize>,
    #[arg(long, default_value = "auto")]
    pub tau: AutoOr<f64>,
    #[arg(long, value_enum, default_value_t = VariantArg::Reduced)]
    pub variant: VariantArg,
    /// Original data, required by `--tau auto`.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    #[arg(long = "B", default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = DEFAULT_Q)]
    pub q: f64,
    #[arg(long, env = "FCP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitterArg {
    /// Fused lasso with cross-validated penalty.
    Fl1dCv,
    /// Fused lasso with the penalty given by `--lambda`.
    Fl1d,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SelectTauArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = FitterArg::Fl1dCv)]
    pub fitter: FitterArg,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long = "B", default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = DEFAULT_Q)]
    pub q: f64,
    #[arg(long, default_value = "auto")]
    pub bandwidth: AutoOr<usize>,
    #[arg(long, env = "FCP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InterpolantArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON array of 1-based changepoints.
    #[arg(long)]
    pub changepoints: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Append the property report.
    #[arg(long)]
    pub verify: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistArg {
    /// `d(A|B)` on index sets.
    Screen,
    Hausdorff,
    /// `d_G(A|B)` on edge sets.
    Dg,
    DgHausdorff,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MetricsArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Node count for `--graph`; defaults to the largest index in the file.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Written to standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentArg {
    HausVsN,
    TauSweep,
    QSweep,
    L2Scaling,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::HausVsN => Experiment::HausVsN,
            ExperimentArg::TauSweep => Experiment::TauSweep,
            ExperimentArg::QSweep => Experiment::QSweep,
            ExperimentArg::L2Scaling => Experiment::L2Scaling,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, env = "FCP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, visible_alias = "output")]
    pub out: PathBuf,
    /// Comma-separated sweep values replacing the experiment's default grid.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Sample size for the threshold and quantile sweeps.
    #[arg(long, default_value_t = 774)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = DEFAULT_Q)]
    pub q: f64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = DEFAULT_NOISE_SD)]
    pub noise_sd: f64,
    /// Also write one row per trial next to the summary.
    #[arg(long)]
    pub emit_plots_data: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A sidecar manifest, or a JSON output with an embedded manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
