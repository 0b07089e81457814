//! Problem directory layout:
//!
//! ```text
//! A.mtx       Matrix Market (array for dense, coordinate for sparse)
//! b.txt       right-hand side, one value per line
//! xstar.txt   reference vector (optional)
//! rtilde.txt  b − A x* (optional)
//! meta.json   kind, seed, sizes, density, tomography geometry
//! ```
//!
//! For tomography problems `xstar.txt` is the column-major reshape of the
//! phantom image.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ProblemInstance, ProblemKind, TomoGeometry};
use crate::error::{Error, Result};
use crate::matrix::{read_matrix_market, read_vector, write_matrix_market, write_vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub kind: ProblemKind,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<TomoGeometry>,
    pub version: String,
}

pub fn write_problem_dir(p: &ProblemInstance, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_market(&p.a, dir.join("A.mtx"))?;
    write_vector(&p.b, dir.join("b.txt"))?;
    if let Some(x) = &p.x_star {
        write_vector(x, dir.join("xstar.txt"))?;
    }
    if let Some(r) = &p.r_tilde {
        write_vector(r, dir.join("rtilde.txt"))?;
    }
    let meta = ProblemMeta {
        kind: p.kind,
        seed: p.seed,
        rows: p.a.rows(),
        cols: p.a.cols(),
        density: p.density,
        geometry: p.geometry.clone(),
        version: crate::VERSION.to_string(),
    };
    let path = dir.join("meta.json");
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn read_problem_dir(dir: impl AsRef<Path>) -> Result<ProblemInstance> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: ProblemMeta = serde_json::from_str(&text)?;
    let a = read_matrix_market(dir.join("A.mtx"))?;
    if (a.rows(), a.cols()) != (meta.rows, meta.cols) {
        return Err(Error::Dimension(format!(
            "A.mtx is {}x{} but meta.json says {}x{}",
            a.rows(),
            a.cols(),
            meta.rows,
            meta.cols
        )));
    }
    let b = read_vector(dir.join("b.txt"))?;
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "b.txt has {} values, A has {} rows",
            b.len(),
            a.rows()
        )));
    }
    let optional = |name: &str, len: usize| -> Result<Option<Vec<f64>>> {
        let path = dir.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let v = read_vector(&path)?;
        if v.len() != len {
            return Err(Error::Dimension(format!(
                "{name} has {} values, expected {len}",
                v.len()
            )));
        }
        Ok(Some(v))
    };
    let x_star = optional("xstar.txt", a.cols())?;
    let r_tilde = optional("rtilde.txt", a.rows())?;
    Ok(ProblemInstance {
        a,
        b,
        x_star,
        r_tilde,
        kind: meta.kind,
        seed: meta.seed,
        density: meta.density,
        geometry: meta.geometry,
    })
}
