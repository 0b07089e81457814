//! Dense SVD oracle for small problems and evaluators for the convergence
//! constants of the extended Kaczmarz family.

mod bounds;

pub use bounds::{
    memrk_bound, rek_bound, young_pair, z_rate_check, BoundInputs, MemrkBound, RateRow,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

/// Largest `min(rows, cols)` the oracle accepts.
pub const ORACLE_LIMIT: usize = 2000;

/// Relative cutoff: singular values `σ ≤ σ_max · max(m, n) · RANK_EPS` count
/// as zero.
pub const RANK_EPS: f64 = 1e-14;

fn check_scale(a: &MatrixHandle) -> Result<()> {
    if a.rows().min(a.cols()) > ORACLE_LIMIT {
        return Err(Error::ScaleCap {
            rows: a.rows(),
            cols: a.cols(),
            limit: ORACLE_LIMIT,
        });
    }
    if a.frob_sq() <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(())
}

fn to_nalgebra(a: &MatrixHandle) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), &a.to_dense_values())
}

fn rank_cutoff(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * rows.max(cols) as f64 * RANK_EPS
}

/// Thin SVD `A = U Σ Vᵀ` truncated to the numerically nonzero singular values,
/// reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    rows: usize,
    cols: usize,
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
}

impl PseudoInverse {
    pub fn new(a: &MatrixHandle) -> Result<Self> {
        check_scale(a)?;
        let (m, n) = (a.rows(), a.cols());
        let mat = to_nalgebra(a);
        // Decompose the tall orientation; for wide A use Aᵀ = V Σ Uᵀ.
        let (u, sigma, v) = if m >= n {
            let svd = mat.svd(true, true);
            (
                svd.u.expect("u requested"),
                svd.singular_values,
                svd.v_t.expect("v requested").transpose(),
            )
        } else {
            let svd = mat.transpose().svd(true, true);
            (
                svd.v_t.expect("v requested").transpose(),
                svd.singular_values,
                svd.u.expect("u requested"),
            )
        };
        let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
        let cutoff = rank_cutoff(sigma_max, m, n);
        let keep: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > cutoff).collect();
        let u = DMatrix::from_fn(m, keep.len(), |i, c| u[(i, keep[c])]);
        let v = DMatrix::from_fn(n, keep.len(), |i, c| v[(i, keep[c])]);
        let sigma = keep.iter().map(|&k| sigma[k]).collect();
        Ok(PseudoInverse {
            rows: m,
            cols: n,
            u,
            sigma,
            v,
        })
    }

    /// Numerical rank.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Retained singular values (unsorted).
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Minimum-norm least-squares solution `A† b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::Dimension(format!(
                "b has length {}, expected {}",
                b.len(),
                self.rows
            )));
        }
        let mut coeffs = self.u.tr_mul(&DVector::from_column_slice(b));
        for (c, s) in coeffs.iter_mut().zip(&self.sigma) {
            *c /= s;
        }
        let x = &self.v * coeffs;
        Ok(x.as_slice().to_vec())
    }

    /// Component of `v` in `null(Aᵀ)`: `v − U Uᵀ v`.
    pub fn project_range_perp(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "v has length {}, expected {}",
                v.len(),
                self.rows
            )));
        }
        let vv = DVector::from_column_slice(v);
        let range = &self.u * self.u.tr_mul(&vv);
        Ok((vv - range).as_slice().to_vec())
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Minimum-norm least-squares solution `A† b` via a full SVD.
pub fn svd_least_squares(a: &MatrixHandle, b: &[f64]) -> Result<Vec<f64>> {
    PseudoInverse::new(a)?.solve(b)
}

/// Component of `v` orthogonal to `range(A)`.
pub fn project_range_perp(a: &MatrixHandle, v: &[f64]) -> Result<Vec<f64>> {
    PseudoInverse::new(a)?.project_range_perp(v)
}

/// Spectral quantities entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// Smallest nonzero singular value.
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: f64,
    pub frob_sq: f64,
    /// `1 − σ_min² / ‖A‖_F²`.
    pub alpha: f64,
    /// `m · maxᵢ ‖A⁽ⁱ⁾‖²`.
    pub gamma: f64,
    /// Smallest squared norm among the nonzero rows.
    pub min_row_norm_sq: f64,
    pub rank: usize,
}

pub fn spectral_profile(a: &MatrixHandle) -> Result<SpectralProfile> {
    check_scale(a)?;
    let sv = to_nalgebra(a).singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_cutoff(sigma_max, a.rows(), a.cols());
    let nonzero: Vec<f64> = sv.iter().cloned().filter(|&s| s > cutoff).collect();
    let sigma_min = nonzero.iter().cloned().fold(f64::INFINITY, f64::min);
    let frob_sq = a.frob_sq();
    let max_row = a.row_norms_sq().iter().cloned().fold(0.0, f64::max);
    let min_row_norm_sq = a
        .row_norms_sq()
        .iter()
        .cloned()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok(SpectralProfile {
        sigma_min,
        sigma_max,
        kappa: sigma_max / sigma_min,
        frob_sq,
        alpha: 1.0 - sigma_min * sigma_min / frob_sq,
        gamma: a.rows() as f64 * max_row,
        min_row_norm_sq,
        rank: nonzero.len(),
    })
}
