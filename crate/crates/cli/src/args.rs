//! Command-line grammar. Every struct here serializes back into the `# key=value`
//! header of the output, so a run can be repeated from its own output file.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
#[command(name = "recordlab", version, about = "Exact and simulated record statistics of dependent sequences")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Absolute tolerance of each Gaussian integral (default 1e-6 up to dimension 10, 1e-5 above).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Root seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 12345)]
    pub seed: u64,
    /// Largest Gaussian integral dimension attempted.
    #[arg(long, global = true, default_value_t = 30)]
    pub max_dim: usize,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Replace R by (R + ε·I)/(1 + ε) before factorization (exploratory use only).
    #[arg(long, global = true)]
    pub jitter: Option<f64>,
}

/// Univariate correlation model.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// iid | ar1:PHI | equi:RHO | tab:R1,R2,... | unit-gamma
    #[arg(long, default_value = "iid")]
    pub model: String,
    /// CSV of `lag,value` rows or an explicit correlation matrix; overrides --model.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Extension of tabulated autocorrelations: zero | geometric:RATIO
    #[arg(long, default_value = "zero")]
    pub tail: String,
}

/// d-dimensional cross-correlation model.
#[derive(Debug, Args, Serialize)]
pub struct MultiModelArgs {
    #[command(flatten)]
    pub base: ModelArgs,
    /// Number of coordinates.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Equicorrelated cross-correlation of a separable model; independent copies when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub cross: Option<f64>,
    /// CSV of lag-stamped d×d blocks (`lag,H` line followed by d rows).
    #[arg(long, conflicts_with_all = ["cross", "model_file"])]
    pub blocks_file: Option<PathBuf>,
}

/// Truncation of the infinite series.
#[derive(Debug, Args, Serialize)]
pub struct SeriesArgs {
    #[arg(long, default_value_t = 1e-7)]
    pub eps_tail: f64,
    #[arg(long, default_value_t = 5)]
    pub run: usize,
    #[arg(long, default_value_t = 500)]
    pub max_terms: usize,
    #[arg(long, default_value_t = 0.05)]
    pub max_residual: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub term_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalArg {
    AtJ,
    AtN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Gumbel,
    Frechet,
    NegWeibull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessArg {
    Gaussian,
    Multi,
    Chernick,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    Iid,
    Ar1,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// P(record at n).
    RecordProb {
        #[command(flatten)]
        model: ModelArgs,
        /// Times: N, A..B or a comma list.
        #[arg(long)]
        n: String,
    },
    /// P(X_n ≤ x | record at n).
    RecordCdf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: String,
        /// Points: comma list or LO:HI:STEP.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// P(the first k records occur at 1, j2, …, jk).
    ArrivalTimes {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma list j2,…,jk.
        #[arg(long)]
        times: String,
    },
    /// P(T(2) = n).
    T2Pmf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: String,
    },
    /// P(X_{T(2)} − X_1 ≤ x).
    IncrementCdf {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// P(X_{T(3)} − X_{T(2)} ≤ x).
    Increment2Cdf {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Σ_n P(record at n) with a divergence classification.
    ExpectedRecords {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// P(records at j and n).
    JointProb {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
    },
    /// Joint CDF of the record values at j and n, or one marginal with --marginal.
    JointCdf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "marginal")]
        x1: Option<f64>,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "marginal")]
        x2: Option<f64>,
        #[arg(long, value_enum, requires = "x")]
        marginal: Option<MarginalArg>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
    },
    /// P(records at j and n and none in between).
    ConsJointProb {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
    },
    /// Joint CDF of consecutive record values at j and n.
    ConsJointCdf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
    },
    /// P(complete record at n).
    CompleteProb {
        #[command(flatten)]
        model: MultiModelArgs,
        #[arg(long)]
        n: String,
    },
    /// P(X_n ≤ x | complete record at n), x one value per coordinate.
    CompleteCdf {
        #[command(flatten)]
        model: MultiModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// P(complete records at j and n).
    JointCompleteProb {
        #[command(flatten)]
        model: MultiModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
    },
    /// Joint CDF of complete record vectors at j and n.
    JointCompleteCdf {
        #[command(flatten)]
        model: MultiModelArgs,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        x1: String,
        #[arg(long, allow_hyphen_values = true)]
        x2: String,
    },
    /// Extremal index, analytic or estimated from a raw dump.
    Theta {
        #[arg(long, group = "source")]
        chernick_m: Option<u32>,
        /// Moving-average coefficients of a stable process.
        #[arg(long, group = "source", allow_hyphen_values = true)]
        stable_coeffs: Option<String>,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        kappa: f64,
        /// Triangular-array limits `LAG:DELTA,...`; DELTA may be `inf`.
        #[arg(long, group = "source")]
        deltas: Option<String>,
        /// CSV of `lag,delta` rows.
        #[arg(long, group = "source")]
        deltas_file: Option<PathBuf>,
        /// Raw dump of univariate paths (one per row) for the runs estimator.
        #[arg(long, group = "source")]
        dump: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        run_length: usize,
        #[arg(long, default_value_t = 0.95)]
        quantile: f64,
        /// Also report the approximation 1/(nθ) of P(record at n).
        #[arg(long)]
        record_n: Option<u64>,
    },
    /// Extreme-value limit law G^θ.
    Gev {
        #[arg(long, value_enum, default_value_t = FamilyArg::Gumbel)]
        family: FamilyArg,
        /// Tail index of the Fréchet and negative Weibull families.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Monte-Carlo record statistics of a process.
    Simulate {
        #[arg(long, value_enum, default_value_t = ProcessArg::Gaussian)]
        process: ProcessArg,
        #[command(flatten)]
        model: MultiModelArgs,
        #[arg(long, default_value_t = 2)]
        chernick_m: u32,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        stable_coeffs: String,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        kappa: f64,
        /// Path length.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// exp | cube | sinh | affine:SCALE:SHIFT
        #[arg(long)]
        margin: Option<String>,
        /// Write the simulated paths as a raw dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Closed forms against exact reductions and Monte Carlo.
    Validate {
        #[arg(long, value_enum, default_value_t = SuiteArg::Iid)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        /// AR(1) coefficient of the ar1 suite.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        phi: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RecordProb { .. } => "record-prob",
            Command::RecordCdf { .. } => "record-cdf",
            Command::ArrivalTimes { .. } => "arrival-times",
            Command::T2Pmf { .. } => "t2-pmf",
            Command::IncrementCdf { .. } => "increment-cdf",
            Command::Increment2Cdf { .. } => "increment2-cdf",
            Command::ExpectedRecords { .. } => "expected-records",
            Command::JointProb { .. } => "joint-prob",
            Command::JointCdf { .. } => "joint-cdf",
            Command::ConsJointProb { .. } => "cons-joint-prob",
            Command::ConsJointCdf { .. } => "cons-joint-cdf",
            Command::CompleteProb { .. } => "complete-prob",
            Command::CompleteCdf { .. } => "complete-cdf",
            Command::JointCompleteProb { .. } => "joint-complete-prob",
            Command::JointCompleteCdf { .. } => "joint-complete-cdf",
            Command::Theta { .. } => "theta",
            Command::Gev { .. } => "gev",
            Command::Simulate { .. } => "simulate",
            Command::Validate { .. } => "validate",
        }
    }
}
