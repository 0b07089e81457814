use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentSpec, ResultRow};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "method,m,n,omega,seed,iters,wall_seconds,final_res,err_sq,psnr";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Results table as CSV text. Aggregate rows carry `median` in the seed
/// column; missing optional values are empty fields.
pub fn format_results(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let seed = r
            .seed
            .map(|s| s.to_string())
            .unwrap_or_else(|| "median".into());
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{},{}",
            r.method,
            r.m,
            r.n,
            r.omega,
            seed,
            r.iters,
            r.wall_seconds,
            r.final_res,
            opt(r.err_sq),
            opt(r.psnr)
        )
        .expect("writing to a String");
    }
    out
}

/// Write [`format_results`] to `path`, creating parent directories.
pub fn emit_results(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let out = format_results(rows);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a results CSV back into rows. `converged` and `error` are not part of
/// the file and come back as `false` / `None`.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let bad = |ln: usize, what: &str| {
        Error::InvalidArgument(format!("{}:{}: bad {what}", path.display(), ln + 2))
    };
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ln, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(bad(ln, "field count"));
            }
            let num = |s: &str, what| s.parse::<f64>().map_err(|_| bad(ln, what));
            let int = |s: &str, what| s.parse::<usize>().map_err(|_| bad(ln, what));
            let optf = |s: &str, what| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s, what).map(Some)
                }
            };
            Ok(ResultRow {
                method: f[0].parse().map_err(|_| bad(ln, "method"))?,
                m: int(f[1], "m")?,
                n: int(f[2], "n")?,
                omega: int(f[3], "omega")?,
                seed: if f[4] == "median" {
                    None
                } else {
                    Some(f[4].parse().map_err(|_| bad(ln, "seed"))?)
                },
                iters: int(f[5], "iters")?,
                wall_seconds: num(f[6], "wall_seconds")?,
                final_res: num(f[7], "final_res")?,
                err_sq: optf(f[8], "err_sq")?,
                psnr: optf(f[9], "psnr")?,
                converged: false,
                error: None,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Meta<'a> {
    spec: &'a ExperimentSpec,
    version: &'a str,
}

/// Write the full experiment spec plus the library version as JSON.
pub fn emit_meta(spec: &ExperimentSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&Meta {
        spec,
        version: crate::VERSION,
    })?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
