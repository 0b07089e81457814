use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use memrk_core::harness::{self, ExperimentSpec, MethodSpec, ResultRow};
use memrk_core::oracle::{self, BoundInputs, PseudoInverse};
use memrk_core::problem::{self, GaussianOptions, ProblemInstance};
use memrk_core::solver::{self, ColumnRule};
use memrk_core::{Error, ProblemKind, SolverConfig, TomoGeometry};

use crate::args::{self, BenchArgs, GenArgs, GeometryPreset, SolveArgs, TheoryArgs, TomoArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn required<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Usage(format!("{what} is required (flag or config)")))
}

fn geometry(preset: Option<GeometryPreset>) -> TomoGeometry {
    match preset.unwrap_or(GeometryPreset::Reduced) {
        GeometryPreset::Reduced => TomoGeometry::reduced(),
        GeometryPreset::Full => TomoGeometry::full_scale(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Domain(Error::Io {
                path: dir.into(),
                source: e,
            })
        })?;
    }
    std::fs::write(path, text).map_err(|e| {
        CliError::Domain(Error::Io {
            path: path.into(),
            source: e,
        })
    })
}

pub fn gen(a: GenArgs) -> Result<()> {
    let a = a.resolve()?;
    let seed = required(a.seed, "--seed")?;
    let out = required(a.out, "--out")?;
    let opts = GaussianOptions {
        rank_deficient: a.rank_deficient,
        rhs_scale: a.rhs_scale.unwrap_or(GaussianOptions::default().rhs_scale),
    };
    let (m, n) = (a.m.unwrap_or(600), a.n.unwrap_or(50));
    let p = match a.kind.unwrap_or(ProblemKind::Dense) {
        ProblemKind::Dense => problem::dense_instance(m, n, seed, opts)?,
        ProblemKind::Sparse => {
            problem::sparse_instance(m, n, a.density.unwrap_or(0.1), seed, opts)?
        }
        ProblemKind::Tomo => {
            problem::tomo_instance(&geometry(a.geometry), a.noise.unwrap_or(0.01), seed)?
        }
    };
    problem::write_problem_dir(&p, &out)?;
    eprintln!(
        "wrote {}x{} {:?} problem to {}",
        p.a.rows(),
        p.a.cols(),
        p.kind,
        out.display()
    );
    Ok(())
}

fn load_problem(dir: Option<PathBuf>) -> Result<ProblemInstance> {
    let dir = required(dir, "--problem")?;
    Ok(problem::read_problem_dir(dir)?)
}

pub fn solve(a: SolveArgs) -> Result<()> {
    let a = a.resolve()?;
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        method: a.method.unwrap_or(defaults.method),
        omega: a.omega.unwrap_or(defaults.omega),
        tol: a.tol.unwrap_or(defaults.tol),
        max_outer: a.max_it.unwrap_or(defaults.max_outer),
        seed: a.seed.unwrap_or(defaults.seed),
        x0: None,
        trace_every: a.trace_every.unwrap_or(defaults.trace_every),
    };
    cfg.validate()?;
    let p = load_problem(a.problem)?;
    let reference = if a.with_error.unwrap_or(false) {
        Some(PseudoInverse::new(&p.a)?.solve(&p.b)?)
    } else {
        None
    };
    let report = solver::solve_with_reference(&cfg, &p.a, &p.b, reference.as_deref())?;
    eprintln!(
        "{} omega={}: {} after {} iterations, RES={:e}",
        cfg.method,
        cfg.omega,
        if report.converged {
            "converged"
        } else {
            "stopped"
        },
        report.outer_iters,
        report.final_res
    );
    let row = ResultRow {
        method: cfg.method,
        m: p.a.rows(),
        n: p.a.cols(),
        omega: cfg.omega,
        seed: Some(cfg.seed),
        iters: report.outer_iters,
        wall_seconds: report.wall_time,
        final_res: report.final_res,
        err_sq: report.trace.last().and_then(|t| t.err_sq),
        psnr: None,
        converged: report.converged,
        error: None,
    };
    match &a.out {
        Some(path) => harness::emit_results(&[row], path)?,
        None => print!("{}", harness::format_results(&[row])),
    }
    if let Some(path) = &a.trace {
        report.write_trace_csv(path)?;
    }
    if let Some(path) = &a.solution {
        memrk_core::matrix::write_vector(&report.x_final, path)?;
    }
    Ok(())
}

fn load_spec(path: Option<&Path>) -> Result<(ExperimentSpec, bool)> {
    let Some(path) = path else {
        return Ok((ExperimentSpec::default(), false));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?;
    let has_seed = value.get("seed").is_some();
    let spec = serde_json::from_value(value)
        .map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?;
    Ok((spec, has_seed))
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let (mut spec, has_seed) = load_spec(a.config.as_deref())?;
    match a.seed {
        Some(s) => spec.seed = s,
        None if !has_seed => {
            return Err(CliError::Usage(
                "a seed is required (--seed or \"seed\" in the spec)".into(),
            ))
        }
        None => {}
    }
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(t) = a.tol {
        spec.tol = t;
    }
    if let Some(k) = a.max_it {
        spec.max_outer = k;
    }
    if a.out.is_some() {
        spec.outputs.results_csv = a.out;
    }
    if a.meta.is_some() {
        spec.outputs.meta_json = a.meta;
    }
    if a.trace_dir.is_some() {
        spec.outputs.trace_dir = a.trace_dir;
    }
    spec.validate()?;
    let rows = harness::run_experiment(&spec)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "{} seed {}: {}",
            r.method_spec().label(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or_default()
        );
    }
    if spec.outputs.results_csv.is_none() {
        print!("{}", harness::format_results(&rows));
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "{} cells, {failed} failed",
        rows.iter().filter(|r| !r.is_aggregate()).count()
    );
    Ok(())
}

pub fn tomo(a: TomoArgs) -> Result<()> {
    let a = a.resolve()?;
    let out = required(a.out, "--out")?;
    let methods = match &a.methods {
        Some(list) => list
            .split(',')
            .map(args::parse_method_label)
            .collect::<Result<Vec<_>>>()?,
        None => MethodSpec::standard_set(),
    };
    for ms in &methods {
        SolverConfig::new(ms.method, ms.omega).validate()?;
    }
    let geom = geometry(a.geometry);
    let outcome = harness::tomo_experiment(
        &geom,
        a.noise.unwrap_or(0.01),
        &methods,
        a.budget_factor.unwrap_or(10),
        a.seed.unwrap_or(0),
    )?;
    harness::emit_results(&outcome.rows, out.join("results.csv"))?;
    outcome.phantom.write_pgm(out.join("phantom.pgm"))?;
    outcome.phantom.write_text(out.join("phantom.txt"))?;
    for (ms, img) in &outcome.images {
        img.write_pgm(out.join(format!("recon_{}.pgm", ms.label())))?;
        img.write_text(out.join(format!("recon_{}.txt", ms.label())))?;
    }
    for r in &outcome.rows {
        eprintln!(
            "{:>7}: PSNR {:.2} dB after {} iterations",
            r.method_spec().label(),
            r.psnr.unwrap_or(f64::NAN),
            r.iters
        );
    }
    Ok(())
}

pub fn theory(a: TheoryArgs) -> Result<()> {
    let a = a.resolve()?;
    let alpha1 = a.alpha1.unwrap_or(0.5);
    let omega = a.omega.unwrap_or(1);
    let k_max = a.k_max.unwrap_or(100);
    let k_step = a.k_step.unwrap_or(10);
    if k_step == 0 {
        return Err(CliError::Usage("--k-step must be positive".into()));
    }
    if omega == 0 {
        return Err(CliError::Usage("--omega must be positive".into()));
    }
    oracle::young_pair(alpha1).map_err(|e| CliError::Usage(e.to_string()))?;
    let p = load_problem(a.problem)?;
    let profile = oracle::spectral_profile(&p.a)?;
    let x_ls = PseudoInverse::new(&p.a)?.solve(&p.b)?;
    let xstar_sq = solver::norm_sq(&x_ls);
    let inputs = BoundInputs::new(alpha1, omega, profile, xstar_sq, xstar_sq)?;
    eprintln!(
        "sigma_min={:e} sigma_max={:e} kappa={:e} alpha={} gamma={:e} rank={}",
        profile.sigma_min,
        profile.sigma_max,
        profile.kappa,
        profile.alpha,
        profile.gamma,
        profile.rank
    );
    if let Some(path) = &a.profile {
        let mut text =
            serde_json::to_string_pretty(&profile).map_err(|e| CliError::Domain(e.into()))?;
        text.push('\n');
        write_file(path, &text)?;
    }
    let mut table = String::from("k,nu,mu,memrk_bound,rek_bound\n");
    for k in (0..=k_max).step_by(k_step) {
        let b = oracle::memrk_bound(&inputs, k)?;
        let rek = oracle::rek_bound(&profile, k, xstar_sq, xstar_sq);
        writeln!(table, "{k},{:e},{:e},{:e},{:e}", b.nu, b.mu, b.value, rek)
            .expect("writing to a String");
    }
    print!("{table}");
    if let Some(path) = &a.rate_out {
        let rows = oracle::z_rate_check(
            &p.a,
            &p.b,
            omega,
            ColumnRule::Weighted,
            a.rate_trials.unwrap_or(30),
            k_max,
            a.seed.unwrap_or(0),
        )?;
        let mut text = String::from("k,empirical_mean,envelope\n");
        for r in rows {
            writeln!(text, "{},{:e},{:e}", r.k, r.empirical_mean, r.envelope)
                .expect("writing to a String");
        }
        write_file(path, &text)?;
    }
    Ok(())
}
