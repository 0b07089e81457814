//! Experiment runner: batches of (method, seed) cells over generated problems,
//! convergence curves, tomography reconstructions and CSV/JSON output.

mod emit;
mod psnr;

pub use emit::{emit_meta, emit_results, format_results, read_results_csv, RESULTS_HEADER};
pub use psnr::psnr;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::PseudoInverse;
use crate::problem::{self, GaussianOptions, Image, ProblemInstance, ProblemKind, TomoGeometry};
use crate::solver::{self, Method, SolverConfig, SolverState, TracePoint};

/// Environment variable capping harness parallelism (`0` = serial).
pub const THREADS_ENV: &str = "KMZ_THREADS";

/// One method column of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default = "one")]
    pub omega: usize,
}

fn one() -> usize {
    1
}

impl MethodSpec {
    pub fn new(method: Method, omega: usize) -> Self {
        MethodSpec { method, omega }
    }

    /// REK, PREK, EMRK, MEMRK(4), MEMRK(6).
    pub fn standard_set() -> Vec<MethodSpec> {
        vec![
            MethodSpec::new(Method::Rek, 1),
            MethodSpec::new(Method::Prek, 1),
            MethodSpec::new(Method::Emrk, 1),
            MethodSpec::new(Method::Memrk, 4),
            MethodSpec::new(Method::Memrk, 6),
        ]
    }

    /// `memrk4`, `emrk`, …
    pub fn label(&self) -> String {
        match self.method {
            Method::Memrk => format!("memrk{}", self.omega),
            m => m.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    /// Sparse family only.
    pub density: f64,
    #[serde(flatten)]
    pub gaussian: GaussianOptions,
    /// Tomography only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<TomoGeometry>,
    /// Tomography only: relative noise level.
    pub noise_level: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            kind: ProblemKind::Dense,
            m: 600,
            n: 50,
            density: 0.1,
            gaussian: GaussianOptions::default(),
            geometry: None,
            noise_level: 0.01,
        }
    }
}

impl ProblemSpec {
    pub fn generate(&self, seed: u64) -> Result<ProblemInstance> {
        match self.kind {
            ProblemKind::Dense => problem::dense_instance(self.m, self.n, seed, self.gaussian),
            ProblemKind::Sparse => {
                problem::sparse_instance(self.m, self.n, self.density, seed, self.gaussian)
            }
            ProblemKind::Tomo => {
                let geom = self.geometry.clone().unwrap_or_else(TomoGeometry::reduced);
                problem::tomo_instance(&geom, self.noise_level, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta_json: Option<PathBuf>,
    /// Directory for per-method trace CSVs of the first trial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    /// Number of seeds; trial `t` uses problem seed `seed + t`.
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_outer: usize,
    /// Record `‖x − A†b‖²` (needs the SVD oracle).
    pub compute_err: bool,
    pub trace_every: usize,
    pub outputs: OutputSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            problem: ProblemSpec::default(),
            methods: MethodSpec::standard_set(),
            trials: 1,
            seed: 0,
            tol: 1e-6,
            max_outer: 50_000,
            compute_err: false,
            trace_every: 1,
            outputs: OutputSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("method list is empty".into()));
        }
        for ms in &self.methods {
            self.solver_config(*ms, 0).validate()?;
        }
        Ok(())
    }

    /// Solver configuration of one cell. The solver seed mixes the experiment
    /// seed, the method and the trial index.
    pub fn solver_config(&self, ms: MethodSpec, trial: usize) -> SolverConfig {
        SolverConfig {
            method: ms.method,
            omega: ms.omega,
            tol: self.tol,
            max_outer: self.max_outer,
            seed: cell_seed(self.seed, ms, trial),
            x0: None,
            trace_every: self.trace_every,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn cell_seed(seed: u64, ms: MethodSpec, trial: usize) -> u64 {
    let tag = ms.method as u64 * 1_000_003 + ms.omega as u64;
    mix(mix(mix(seed) ^ tag) ^ trial as u64)
}

/// One line of the results table. `seed == None` marks an aggregate (median)
/// row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub omega: usize,
    pub seed: Option<u64>,
    pub iters: usize,
    pub wall_seconds: f64,
    pub final_res: f64,
    pub err_sq: Option<f64>,
    pub psnr: Option<f64>,
    pub converged: bool,
    /// Failure message; the numeric columns are then meaningless.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn method_spec(&self) -> MethodSpec {
        MethodSpec::new(self.method, self.omega)
    }

    pub fn is_aggregate(&self) -> bool {
        self.seed.is_none()
    }
}

/// Run `f` on a pool sized by `KMZ_THREADS` (unset: rayon default, `0`:
/// serial).
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    match threads {
        None => f(),
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
    }
}

struct CellOutput {
    row: ResultRow,
    trace: Vec<TracePoint>,
}

fn failed_row(ms: MethodSpec, m: usize, n: usize, seed: u64, err: &Error) -> ResultRow {
    ResultRow {
        method: ms.method,
        m,
        n,
        omega: ms.omega,
        seed: Some(seed),
        iters: 0,
        wall_seconds: 0.0,
        final_res: f64::NAN,
        err_sq: None,
        psnr: None,
        converged: false,
        error: Some(err.to_string()),
    }
}

fn run_trial(spec: &ExperimentSpec, trial: usize, keep_traces: bool) -> Vec<CellOutput> {
    let seed = spec.seed.wrapping_add(trial as u64);
    let (m, n) = (spec.problem.m, spec.problem.n);
    let instance = match spec.problem.generate(seed) {
        Ok(p) => p,
        Err(e) => {
            return spec
                .methods
                .iter()
                .map(|&ms| CellOutput {
                    row: failed_row(ms, m, n, seed, &e),
                    trace: Vec::new(),
                })
                .collect();
        }
    };
    let (m, n) = (instance.a.rows(), instance.a.cols());
    let reference = if spec.compute_err {
        // err_sq is left empty when the oracle is unavailable
        PseudoInverse::new(&instance.a)
            .and_then(|p| p.solve(&instance.b))
            .ok()
    } else {
        None
    };
    let phantom = instance
        .geometry
        .as_ref()
        .and_then(|g| problem::shepp_logan_phantom(g.n_pixels).ok());

    spec.methods
        .par_iter()
        .map(|&ms| {
            let cfg = spec.solver_config(ms, trial);
            match solver::solve_with_reference(&cfg, &instance.a, &instance.b, reference.as_deref())
            {
                Ok(report) => {
                    let psnr_db = phantom.as_ref().and_then(|ph| {
                        Image::from_column_major(ph.rows, ph.cols, &report.x_final)
                            .ok()
                            .and_then(|img| psnr(ph, &img).ok())
                    });
                    let row = ResultRow {
                        method: ms.method,
                        m,
                        n,
                        omega: ms.omega,
                        seed: Some(seed),
                        iters: report.outer_iters,
                        wall_seconds: report.wall_time,
                        final_res: report.final_res,
                        err_sq: report.trace.last().and_then(|t| t.err_sq),
                        psnr: psnr_db,
                        converged: report.converged,
                        error: None,
                    };
                    CellOutput {
                        row,
                        trace: if keep_traces {
                            report.trace
                        } else {
                            Vec::new()
                        },
                    }
                }
                Err(e) => CellOutput {
                    row: failed_row(ms, m, n, seed, &e),
                    trace: Vec::new(),
                },
            }
        })
        .collect()
}

/// Lower median (element `(len − 1) / 2` of the sorted values).
fn lower_median<T: Copy + PartialOrd>(mut v: Vec<T>) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Some(v[(v.len() - 1) / 2])
}

/// Median rows, one per method, over the successful per-seed rows.
pub fn aggregate_medians(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut specs: Vec<MethodSpec> = rows
        .iter()
        .filter(|r| !r.is_aggregate())
        .map(|r| r.method_spec())
        .collect();
    specs.sort();
    specs.dedup();
    specs
        .into_iter()
        .filter_map(|ms| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| !r.is_aggregate() && r.error.is_none() && r.method_spec() == ms)
                .collect();
            let first = group.first()?;
            Some(ResultRow {
                method: ms.method,
                m: first.m,
                n: first.n,
                omega: ms.omega,
                seed: None,
                iters: lower_median(group.iter().map(|r| r.iters).collect())?,
                wall_seconds: lower_median(group.iter().map(|r| r.wall_seconds).collect())?,
                final_res: lower_median(group.iter().map(|r| r.final_res).collect())?,
                err_sq: lower_median(group.iter().filter_map(|r| r.err_sq).collect()),
                psnr: lower_median(group.iter().filter_map(|r| r.psnr).collect()),
                converged: group.iter().all(|r| r.converged),
                error: None,
            })
        })
        .collect()
}

fn run_cells(spec: &ExperimentSpec, keep_traces_for_first: bool) -> Result<Vec<Vec<CellOutput>>> {
    spec.validate()?;
    Ok(with_thread_cap(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t, keep_traces_for_first && t == 0))
            .collect()
    }))
}

/// Run every (method, seed) cell. Per-seed rows come sorted by (method,
/// omega, seed), followed by one median row per method. Cell failures are
/// recorded in the row's `error` field. Outputs named in `spec.outputs` are
/// written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let want_traces = spec.outputs.trace_dir.is_some();
    let cells = run_cells(spec, want_traces)?;
    if let Some(dir) = &spec.outputs.trace_dir {
        if let Some(first) = cells.first() {
            write_traces(first, dir)?;
        }
    }
    let mut rows: Vec<ResultRow> = cells.into_iter().flatten().map(|c| c.row).collect();
    rows.sort_by_key(|r| (r.method, r.omega, r.seed));
    let medians = aggregate_medians(&rows);
    rows.extend(medians);
    if let Some(path) = &spec.outputs.results_csv {
        emit_results(&rows, path)?;
    }
    if let Some(path) = &spec.outputs.meta_json {
        emit_meta(spec, path)?;
    }
    Ok(rows)
}

fn trace_path(dir: &Path, ms: MethodSpec) -> PathBuf {
    dir.join(format!("trace_{}.csv", ms.label()))
}

fn write_traces(cells: &[CellOutput], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for c in cells.iter().filter(|c| c.row.error.is_none()) {
        let path = trace_path(dir, c.row.method_spec());
        solver::write_trace_csv(&c.trace, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Per-method `(k, RES)` traces for the first trial of `spec`, written as
/// `trace_<method>.csv` into `dir`. Returns the traces keyed by method.
pub fn convergence_curve(
    spec: &ExperimentSpec,
    dir: impl AsRef<Path>,
) -> Result<Vec<(MethodSpec, Vec<TracePoint>)>> {
    let single = ExperimentSpec {
        trials: 1,
        compute_err: false,
        ..spec.clone()
    };
    let cells = run_cells(&single, true)?
        .into_iter()
        .next()
        .unwrap_or_default();
    for c in &cells {
        if let Some(e) = &c.row.error {
            return Err(Error::InvalidArgument(format!(
                "{}: {e}",
                c.row.method_spec().label()
            )));
        }
    }
    write_traces(&cells, dir.as_ref())?;
    Ok(cells
        .into_iter()
        .map(|c| (c.row.method_spec(), c.trace))
        .collect())
}

/// Result of a tomography run.
#[derive(Debug, Clone)]
pub struct TomoOutcome {
    pub rows: Vec<ResultRow>,
    pub phantom: Image,
    /// Reconstruction per method, in the order of `methods`.
    pub images: Vec<(MethodSpec, Image)>,
}

/// Reconstruct the phantom with each method using exactly
/// `budget_factor · m` outer iterations (no residual stop) and score the
/// results by PSNR.
pub fn tomo_experiment(
    geom: &TomoGeometry,
    noise_level: f64,
    methods: &[MethodSpec],
    budget_factor: usize,
    seed: u64,
) -> Result<TomoOutcome> {
    let instance = problem::tomo_instance(geom, noise_level, seed)?;
    let phantom = problem::shepp_logan_phantom(geom.n_pixels)?;
    let a = &instance.a;
    let budget = budget_factor * a.rows();
    let results: Vec<Result<(ResultRow, Image)>> = with_thread_cap(|| {
        methods
            .par_iter()
            .map(|&ms| {
                let start = Instant::now();
                let cfg = SolverConfig {
                    method: ms.method,
                    omega: ms.omega,
                    seed: cell_seed(seed, ms, 0),
                    ..SolverConfig::default()
                };
                let mut state = SolverState::new(&cfg, a, &instance.b)?;
                for _ in 0..budget {
                    state.step(a, &instance.b)?;
                }
                let b_norm_sq: f64 = instance.b.iter().map(|v| v * v).sum();
                let img = Image::from_column_major(geom.n_pixels, geom.n_pixels, state.x())?;
                let row = ResultRow {
                    method: ms.method,
                    m: a.rows(),
                    n: a.cols(),
                    omega: ms.omega,
                    seed: Some(seed),
                    iters: state.k,
                    wall_seconds: start.elapsed().as_secs_f64(),
                    final_res: state.residual_sq() / b_norm_sq,
                    err_sq: instance.x_star.as_ref().map(|xs| {
                        xs.iter()
                            .zip(state.x())
                            .map(|(p, q)| (p - q) * (p - q))
                            .sum()
                    }),
                    psnr: Some(psnr(&phantom, &img)?),
                    converged: false,
                    error: None,
                };
                Ok((row, img))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut images = Vec::new();
    for (ms, r) in methods.iter().zip(results) {
        let (row, img) = r?;
        rows.push(row);
        images.push((*ms, img));
    }
    Ok(TomoOutcome {
        rows,
        phantom,
        images,
    })
}
