//! Extended Kaczmarz iterations: REK, PREK, EMRK and MEMRK.
//!
//! Every method keeps two sequences. The auxiliary vector `z` starts at `b`
//! and is driven towards the component of `b` orthogonal to `range(A)` by
//! column projections; `x` is updated by projecting onto the hyperplane of a
//! selected row of `A x = b − z`.
//!
//! | method | z-update per outer step               | row rule                 | `z` used by the x-step |
//! |--------|---------------------------------------|--------------------------|------------------------|
//! | REK    | one norm-weighted random column       | norm-weighted random     | before the z-update    |
//! | PREK   | one column in cyclic order            | norm-weighted random     | after the z-update     |
//! | EMRK   | one norm-weighted random column       | maximum `|b − Ax − z|`   | after the z-update     |
//! | MEMRK  | `omega` norm-weighted random columns  | maximum `|b − Ax − z|`   | after the z-updates    |
//!
//! The stopping statistic is `RES_k = ‖b − A x_k − z_k‖² / ‖b − A x₀‖²`,
//! evaluated after every outer step. The trace row for `k = 0` records the
//! normalization itself (`RES_0 = 1`).

pub mod kernels;
pub mod select;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, MatrixHandle};

pub use kernels::{residual, x_project_row, z_project_column};
pub use select::{
    next_column_cyclic, sample_column_weighted, sample_row_weighted, select_max_residual_row,
};

/// Iterates whose magnitude exceeds this are treated as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rek,
    Prek,
    Emrk,
    Memrk,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rek, Method::Prek, Method::Emrk, Method::Memrk];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rek => "rek",
            Method::Prek => "prek",
            Method::Emrk => "emrk",
            Method::Memrk => "memrk",
        }
    }

    /// Whether the row is chosen by the maximum-residual rule.
    pub fn is_greedy(self) -> bool {
        matches!(self, Method::Emrk | Method::Memrk)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rek" => Ok(Method::Rek),
            "prek" => Ok(Method::Prek),
            "emrk" => Ok(Method::Emrk),
            "memrk" => Ok(Method::Memrk),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    /// Column projections per outer iteration (MEMRK only; 1 otherwise).
    pub omega: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub seed: u64,
    /// Initial iterate; zeros when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Record every `trace_every`-th outer iteration (the final one is always
    /// recorded).
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Memrk,
            omega: 1,
            tol: 1e-6,
            max_outer: 50_000,
            seed: 0,
            x0: None,
            trace_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method, omega: usize) -> Self {
        SolverConfig {
            method,
            omega,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega < 1 {
            return Err(Error::InvalidConfig("omega must be at least 1".into()));
        }
        if self.method != Method::Memrk && self.omega != 1 {
            return Err(Error::InvalidConfig(format!(
                "{} uses omega = 1, got {}",
                self.method, self.omega
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_outer < 1 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        if self.trace_every < 1 {
            return Err(Error::InvalidConfig(
                "trace_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One sampled point of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: usize,
    pub res: f64,
    /// `‖x_k − x_ref‖²` when a reference solution was supplied.
    pub err_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub omega: usize,
    pub x_final: Vec<f64>,
    pub outer_iters: usize,
    pub final_res: f64,
    pub converged: bool,
    pub wall_time: f64,
    pub trace: Vec<TracePoint>,
}

impl SolveReport {
    /// Write the trace as CSV: `k,res,err_sq` when errors were recorded,
    /// otherwise `k,res`.
    pub fn write_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_trace_csv(&self.trace, path)
    }
}

pub fn write_trace_csv(trace: &[TracePoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let with_err = trace.iter().any(|t| t.err_sq.is_some());
    let io = |e| Error::io(path, e);
    if with_err {
        writeln!(w, "k,res,err_sq").map_err(io)?;
    } else {
        writeln!(w, "k,res").map_err(io)?;
    }
    for t in trace {
        match (with_err, t.err_sq) {
            (true, Some(e)) => writeln!(w, "{},{:e},{:e}", t.k, t.res, e),
            (true, None) => writeln!(w, "{},{:e},", t.k, t.res),
            (false, _) => writeln!(w, "{},{:e}", t.k, t.res),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// What one outer iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Row used by the x-update; `None` when the greedy rule landed on an
    /// empty equation with zero residual and the step was skipped.
    pub row: Option<usize>,
}

/// How the z-update picks its columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRule {
    /// Column `j` with probability `‖A₍ⱼ₎‖² / ‖A‖_F²`.
    Weighted,
    /// Columns in order, skipping empty ones.
    Cyclic,
}

/// Column-projection sweep that drives `z` towards the part of `b` outside
/// `range(A)`.
#[derive(Debug, Clone)]
pub struct ZSweep {
    pub rule: ColumnRule,
    rng: ChaCha8Rng,
    /// Next column for the cyclic rule.
    pub cursor: usize,
}

impl ZSweep {
    pub fn new(rule: ColumnRule, seed: u64) -> Self {
        ZSweep {
            rule,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cursor: 0,
        }
    }

    /// Apply `omega` column projections to `z`.
    pub fn run(&mut self, a: &MatrixHandle, z: &mut [f64], omega: usize) -> Result<()> {
        for _ in 0..omega {
            let j = match self.rule {
                ColumnRule::Cyclic => next_column_cyclic(&mut self.cursor, a)?,
                ColumnRule::Weighted => sample_column_weighted(&mut self.rng, a)?,
            };
            z_project_column(z, a, j)?;
        }
        Ok(())
    }
}

/// Mutable iteration state of one solve.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub method: Method,
    pub omega: usize,
    x: Vec<f64>,
    pub z: Vec<f64>,
    /// Completed outer iterations.
    pub k: usize,
    sweep: ZSweep,
    /// `A x` for the current `x`.
    ax: Vec<f64>,
    scratch: Vec<f64>,
    res_sq: f64,
}

impl SolverState {
    /// Initialize with `z₀ = b` and `x₀` from the config (zeros by default).
    pub fn new(config: &SolverConfig, a: &MatrixHandle, b: &[f64]) -> Result<Self> {
        config.validate()?;
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!(
                "b has length {}, A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if a.frob_sq() <= 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let x = match &config.x0 {
            Some(x0) if x0.len() != a.cols() => {
                return Err(Error::Dimension(format!(
                    "x0 has length {}, A has {} columns",
                    x0.len(),
                    a.cols()
                )))
            }
            Some(x0) => x0.clone(),
            None => vec![0.0; a.cols()],
        };
        let ax = a.matvec(&x)?;
        let mut state = SolverState {
            method: config.method,
            omega: config.omega,
            x,
            z: b.to_vec(),
            k: 0,
            sweep: ZSweep::new(
                if config.method == Method::Prek {
                    ColumnRule::Cyclic
                } else {
                    ColumnRule::Weighted
                },
                config.seed,
            ),
            ax,
            scratch: vec![0.0; a.rows()],
            res_sq: 0.0,
        };
        state.res_sq = state.current_residual_sq(b);
        Ok(state)
    }

    fn current_residual_sq(&self, b: &[f64]) -> f64 {
        b.iter()
            .zip(&self.ax)
            .zip(&self.z)
            .map(|((bi, ai), zi)| {
                let r = bi - ai - zi;
                r * r
            })
            .sum()
    }

    /// Current `x`. It is read-only so the cached `A x` stays valid.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `‖b − A x − z‖²` for the current iterates.
    pub fn residual_sq(&self) -> f64 {
        self.res_sq
    }

    /// Apply `omega` column projections to `z` (random weighted columns, or
    /// cyclic columns for PREK).
    pub fn z_multi_step(&mut self, a: &MatrixHandle, omega: usize) -> Result<()> {
        self.sweep.run(a, &mut self.z, omega)
    }

    /// Cursor of the cyclic column rule.
    pub fn cursor(&self) -> usize {
        self.sweep.cursor
    }

    /// Run one outer iteration and refresh the cached residual.
    pub fn step(&mut self, a: &MatrixHandle, b: &[f64]) -> Result<StepInfo> {
        let row = match self.method {
            Method::Rek => {
                let j = sample_column_weighted(&mut self.sweep.rng, a)?;
                let i = sample_row_weighted(&mut self.sweep.rng, a)?;
                let rhs = b[i] - self.z[i];
                z_project_column(&mut self.z, a, j)?;
                x_project_row(&mut self.x, a, i, rhs)?;
                Some(i)
            }
            Method::Prek => {
                self.z_multi_step(a, 1)?;
                let i = sample_row_weighted(&mut self.sweep.rng, a)?;
                x_project_row(&mut self.x, a, i, b[i] - self.z[i])?;
                Some(i)
            }
            Method::Emrk | Method::Memrk => {
                self.z_multi_step(a, self.omega)?;
                for (((r, bi), ai), zi) in self.scratch.iter_mut().zip(b).zip(&self.ax).zip(&self.z)
                {
                    *r = bi - ai - zi;
                }
                let i = select_max_residual_row(&self.scratch);
                if a.row_norms_sq()[i] > 0.0 {
                    x_project_row(&mut self.x, a, i, b[i] - self.z[i])?;
                    Some(i)
                } else if self.scratch[i] == 0.0 {
                    None
                } else {
                    return Err(Error::ZeroRow(i));
                }
            }
        };
        self.k += 1;
        if !bounded(&self.x) || !bounded(&self.z) {
            return Err(Error::Diverged { iteration: self.k });
        }
        a.matvec_into(&self.x, &mut self.ax)?;
        self.res_sq = self.current_residual_sq(b);
        Ok(StepInfo { row })
    }
}

fn bounded(v: &[f64]) -> bool {
    v.iter().all(|x| x.abs() <= DIVERGENCE_LIMIT)
}

/// Run the configured method until `RES < tol` or `max_outer` iterations.
pub fn solve(config: &SolverConfig, a: &MatrixHandle, b: &[f64]) -> Result<SolveReport> {
    solve_with_reference(config, a, b, None)
}

/// As [`solve`], additionally recording `‖x_k − x_ref‖²` in the trace.
pub fn solve_with_reference(
    config: &SolverConfig,
    a: &MatrixHandle,
    b: &[f64],
    x_ref: Option<&[f64]>,
) -> Result<SolveReport> {
    let start = Instant::now();
    let mut state = SolverState::new(config, a, b)?;
    if let Some(r) = x_ref {
        if r.len() != a.cols() {
            return Err(Error::Dimension(format!(
                "reference has length {}, A has {} columns",
                r.len(),
                a.cols()
            )));
        }
    }
    let err_sq =
        |x: &[f64]| x_ref.map(|r| x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());

    // ‖b − A x₀‖²: z is still b in `state`, so rebuild it from `ax`.
    let denom: f64 = b
        .iter()
        .zip(&state.ax)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum();
    let mut trace = vec![TracePoint {
        k: 0,
        res: 1.0,
        err_sq: err_sq(&state.x),
    }];
    if denom == 0.0 {
        return Ok(SolveReport {
            method: config.method,
            omega: config.omega,
            x_final: state.x,
            outer_iters: 0,
            final_res: 0.0,
            converged: true,
            wall_time: start.elapsed().as_secs_f64(),
            trace: vec![TracePoint {
                k: 0,
                res: 0.0,
                err_sq: trace[0].err_sq,
            }],
        });
    }

    let mut res = 1.0;
    let mut converged = false;
    while state.k < config.max_outer {
        state.step(a, b)?;
        res = state.residual_sq() / denom;
        converged = res < config.tol;
        let last = converged || state.k == config.max_outer;
        if state.k % config.trace_every == 0 || last {
            trace.push(TracePoint {
                k: state.k,
                res,
                err_sq: err_sq(&state.x),
            });
        }
        if converged {
            break;
        }
    }

    Ok(SolveReport {
        method: config.method,
        omega: config.omega,
        outer_iters: state.k,
        final_res: res,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        x_final: state.x,
    })
}

/// `‖v‖²`, re-exported for callers working with plain slices.
pub fn norm_sq(v: &[f64]) -> f64 {
    matrix::norm_sq(v)
}
