//! Command-line flags. Every subcommand accepts `--config FILE`, a JSON object
//! whose keys are the flag names in snake_case; flags given on the command
//! line win over the file, the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use memrk_core::{Method, ProblemKind};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "memrk",
    version,
    about = "Extended Kaczmarz solvers for inconsistent least-squares systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a test problem directory.
    Gen(GenArgs),
    /// Run one method on a problem directory.
    Solve(SolveArgs),
    /// Run an experiment spec (JSON) and write the results table.
    Bench(BenchArgs),
    /// Reconstruct the phantom with each method and score PSNR.
    Tomo(TomoArgs),
    /// Print spectral constants and error-bound tables for a problem.
    Theory(TheoryArgs),
}

/// Overlay `file` under `self`: fields set on the command line are kept.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),+ $(,)?) => {{
        let mut out = $flags;
        let file = $file;
        $( if out.$field.is_none() { out.$field = file.$field; } )+
        out
    }};
}

pub fn read_config<T: for<'de> Deserialize<'de> + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeometryPreset {
    /// 24×24 grid, 30 angles, 75 rays (2250×576).
    Reduced,
    /// 40×40 grid, 76 angles, 125 rays (9500×1600).
    Full,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<ProblemKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Nonzero fraction of the sparse family.
    #[arg(long)]
    pub density: Option<f64>,
    /// Required (flag or config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace the last row by the mean of the first two (default: only when m ≤ n).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rank_deficient: Option<bool>,
    /// ‖r̃‖ / ‖A x*‖ for the Gaussian families.
    #[arg(long)]
    pub rhs_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryPreset>,
    /// Relative noise level (tomography).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl GenArgs {
    pub fn resolve(self) -> Result<GenArgs, CliError> {
        let file: GenArgs = read_config(self.config.as_deref())?;
        Ok(
            overlay!(self, file; kind, m, n, density, seed, rank_deficient, rhs_scale, geometry, noise, out),
        )
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Problem directory written by `gen`.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub omega: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-it")]
    pub max_it: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trace_every: Option<usize>,
    /// Also record ‖x_k − A†b‖² (SVD oracle; desk-scale problems only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub with_error: Option<bool>,
    /// Results CSV with the single report row (standard output if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV (k,res[,err_sq]).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Final iterate, one value per line.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

impl SolveArgs {
    pub fn resolve(self) -> Result<SolveArgs, CliError> {
        let file: SolveArgs = read_config(self.config.as_deref())?;
        Ok(
            overlay!(self, file; problem, method, omega, tol, max_it, seed, trace_every, with_error, out, trace, solution),
        )
    }
}

#[derive(Debug, Default, Args)]
pub struct BenchArgs {
    /// Experiment spec (JSON). Its `seed` is required unless `--seed` is given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-it")]
    pub max_it: Option<usize>,
    /// Results CSV (standard output if absent and the spec names none).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metadata JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Directory for per-method trace CSVs of the first trial.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryPreset>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Outer iterations per method, in multiples of the row count.
    #[arg(long)]
    pub budget_factor: Option<usize>,
    /// Comma-separated labels: rek, prek, emrk, memrk<ω>.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for results.csv and the images.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl TomoArgs {
    pub fn resolve(self) -> Result<TomoArgs, CliError> {
        let file: TomoArgs = read_config(self.config.as_deref())?;
        Ok(overlay!(self, file; geometry, noise, budget_factor, methods, seed, out))
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Young parameter in [0.5, 1).
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub omega: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub k_step: Option<usize>,
    /// Write the spectral profile as JSON.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Write the z-contraction table (k,empirical_mean,envelope).
    #[arg(long)]
    pub rate_out: Option<PathBuf>,
    #[arg(long)]
    pub rate_trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TheoryArgs {
    pub fn resolve(self) -> Result<TheoryArgs, CliError> {
        let file: TheoryArgs = read_config(self.config.as_deref())?;
        Ok(
            overlay!(self, file; problem, alpha1, omega, k_max, k_step, profile, rate_out, rate_trials, seed),
        )
    }
}

/// Parse `rek`, `prek`, `emrk`, `memrk`, `memrk4`, `memrk:4`.
pub fn parse_method_label(s: &str) -> Result<memrk_core::MethodSpec, CliError> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(rest) = t.strip_prefix("memrk") {
        let digits = rest.trim_start_matches([':', '(']).trim_end_matches(')');
        let omega = if digits.is_empty() {
            1
        } else {
            digits
                .parse()
                .map_err(|_| CliError::Usage(format!("bad method label '{s}'")))?
        };
        return Ok(memrk_core::MethodSpec::new(Method::Memrk, omega));
    }
    t.parse::<Method>()
        .map(|m| memrk_core::MethodSpec::new(m, 1))
        .map_err(|_| CliError::Usage(format!("unknown method '{s}'")))
}
