//! Test-problem generators: dense and sparse Gaussian systems with
//! inconsistent right-hand sides, and parallel-beam tomography.
//!
//! All generators are pure functions of their parameters and seed. Each
//! random ingredient draws from its own ChaCha stream of the seed, so e.g. the
//! sparsity mask and the values of a sparse matrix are reproducible
//! independently.

mod image;
mod io;
mod phantom;
mod tomo;

pub use image::Image;
pub use io::{read_problem_dir, write_problem_dir, ProblemMeta};
pub use phantom::{shepp_logan_phantom, shepp_logan_value};
pub use tomo::{angle_range, gen_parallel_tomo, trace_ray, TomoGeometry};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm_sq, MatrixHandle, Storage};
use crate::oracle::PseudoInverse;

/// Stream ids for the independent random ingredients of one seed.
mod stream {
    pub const MATRIX_VALUES: u64 = 1;
    pub const SPARSITY_MASK: u64 = 2;
    pub const RHS_DIRECTION: u64 = 3;
    pub const NOISE: u64 = 4;
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Dense,
    Sparse,
    Tomo,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(ProblemKind::Dense),
            "sparse" => Ok(ProblemKind::Sparse),
            "tomo" => Ok(ProblemKind::Tomo),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem kind '{other}'"
            ))),
        }
    }
}

/// A linear system `A x = b` with its construction references.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: MatrixHandle,
    pub b: Vec<f64>,
    /// Vector used to build the consistent part `A x*` of `b`.
    pub x_star: Option<Vec<f64>>,
    /// `b − A x*`: the null-space component (dense/sparse) or the noise (tomo).
    pub r_tilde: Option<Vec<f64>>,
    pub kind: ProblemKind,
    pub seed: u64,
    pub density: Option<f64>,
    pub geometry: Option<TomoGeometry>,
}

/// `m × n` matrix of i.i.d. standard normal entries, dense storage.
pub fn gen_dense_gaussian(m: usize, n: usize, seed: u64) -> Result<MatrixHandle> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix size {m}x{n} must be positive"
        )));
    }
    let mut rng = rng_stream(seed, stream::MATRIX_VALUES);
    let values = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    MatrixHandle::dense(m, n, values)
}

/// `m × n` CSR matrix whose entries are present independently with
/// probability `density` and standard normal when present.
pub fn gen_sparse_gaussian(m: usize, n: usize, density: f64, seed: u64) -> Result<MatrixHandle> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix size {m}x{n} must be positive"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut mask = rng_stream(seed, stream::SPARSITY_MASK);
    let mut vals = rng_stream(seed, stream::MATRIX_VALUES);
    let mut offsets = Vec::with_capacity(m + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    offsets.push(0);
    for _ in 0..m {
        for j in 0..n {
            if mask.random::<f64>() < density {
                indices.push(j);
                values.push(vals.sample(StandardNormal));
            }
        }
        offsets.push(values.len());
    }
    MatrixHandle::csr(m, n, offsets, indices, values)
}

/// Copy of `a` whose last row is the average of its first two rows.
/// Storage layout is preserved.
pub fn enforce_rank_deficiency(a: &MatrixHandle) -> Result<MatrixHandle> {
    let m = a.rows();
    let n = a.cols();
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 rows, got {m}"
        )));
    }
    let r0 = a.row_dense(0);
    let r1 = a.row_dense(1);
    let avg: Vec<f64> = r0.iter().zip(&r1).map(|(x, y)| 0.5 * (x + y)).collect();
    match a.storage() {
        Storage::Dense { values } => {
            let mut values = values.clone();
            values[(m - 1) * n..].copy_from_slice(&avg);
            MatrixHandle::dense(m, n, values)
        }
        Storage::Csr { rows, .. } => {
            let keep = rows.offsets[m - 1];
            let mut offsets = rows.offsets[..m].to_vec();
            let mut indices = rows.indices[..keep].to_vec();
            let mut values = rows.values[..keep].to_vec();
            for (j, &v) in avg.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(values.len());
            MatrixHandle::csr(m, n, offsets, indices, values)
        }
    }
}

/// Build `b = A x* + r̃` with `r̃ ∈ null(Aᵀ)`, `‖r̃‖ = scale · ‖A x*‖`.
///
/// The direction of `r̃` is a Gaussian vector projected onto `null(Aᵀ)` with
/// the SVD oracle. Returns `(b, r̃)`.
pub fn build_inconsistent_rhs(
    a: &MatrixHandle,
    x_star: &[f64],
    seed: u64,
    scale: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pinv = PseudoInverse::new(a)?;
    build_inconsistent_rhs_with(a, &pinv, x_star, seed, scale)
}

fn build_inconsistent_rhs_with(
    a: &MatrixHandle,
    pinv: &PseudoInverse,
    x_star: &[f64],
    seed: u64,
    scale: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Inconsistency(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let ax = a.matvec(x_star)?;
    let target = scale * norm_sq(&ax).sqrt();
    if target == 0.0 {
        return Err(Error::Inconsistency(
            "A x* is zero, so r̃ would be zero".into(),
        ));
    }
    let mut rng = rng_stream(seed, stream::RHS_DIRECTION);
    let w: Vec<f64> = (0..a.rows()).map(|_| rng.sample(StandardNormal)).collect();
    let perp = pinv.project_range_perp(&w)?;
    let perp_norm = norm_sq(&perp).sqrt();
    if perp_norm <= 1e-10 * norm_sq(&w).sqrt() {
        return Err(Error::Inconsistency(
            "null(Aᵀ) is trivial; make A rank-deficient or use more rows than columns".into(),
        ));
    }
    let r_tilde: Vec<f64> = perp.iter().map(|v| v * target / perp_norm).collect();
    let at_r = a.matvec_transpose(&r_tilde)?;
    let tol = 1e-8 * a.frob_sq().sqrt() * target;
    if norm_sq(&at_r).sqrt() > tol {
        return Err(Error::Inconsistency(format!(
            "Aᵀr̃ has norm {:e}, above {tol:e}",
            norm_sq(&at_r).sqrt()
        )));
    }
    let b = ax.iter().zip(&r_tilde).map(|(x, r)| x + r).collect();
    Ok((b, r_tilde))
}

/// `b = b_clean + r̃` with `r̃ = level · ‖b_clean‖ · g / ‖g‖`, `g` standard
/// normal. Returns `(b, r̃)`.
pub fn add_gaussian_noise(b_clean: &[f64], level: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be nonnegative, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok((b_clean.to_vec(), vec![0.0; b_clean.len()]));
    }
    let clean_norm = norm_sq(b_clean).sqrt();
    if clean_norm == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot scale relative noise for a zero right-hand side".into(),
        ));
    }
    let mut rng = rng_stream(seed, stream::NOISE);
    let g: Vec<f64> = (0..b_clean.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let g_norm = norm_sq(&g).sqrt();
    let r: Vec<f64> = g.iter().map(|v| level * clean_norm * v / g_norm).collect();
    let b = b_clean.iter().zip(&r).map(|(x, y)| x + y).collect();
    Ok((b, r))
}

/// Options for the Gaussian families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianOptions {
    /// Replace the last row by the average of the first two. `None` applies it
    /// only to square and wide matrices, where `null(Aᵀ)` would otherwise be
    /// trivial.
    pub rank_deficient: Option<bool>,
    /// `‖r̃‖ / ‖A x*‖`.
    pub rhs_scale: f64,
}

impl Default for GaussianOptions {
    fn default() -> Self {
        GaussianOptions {
            rank_deficient: None,
            rhs_scale: 1.0,
        }
    }
}

fn gaussian_instance(
    a: MatrixHandle,
    kind: ProblemKind,
    density: Option<f64>,
    seed: u64,
    opts: GaussianOptions,
) -> Result<ProblemInstance> {
    let deficient = opts.rank_deficient.unwrap_or(a.rows() <= a.cols());
    let a = if deficient {
        enforce_rank_deficiency(&a)?
    } else {
        a
    };
    let x_star = vec![1.0; a.cols()];
    let (b, r_tilde) = build_inconsistent_rhs(&a, &x_star, seed, opts.rhs_scale)?;
    Ok(ProblemInstance {
        a,
        b,
        x_star: Some(x_star),
        r_tilde: Some(r_tilde),
        kind,
        seed,
        density,
        geometry: None,
    })
}

/// Dense Gaussian system with `x* = (1, …, 1)` and `r̃ ∈ null(Aᵀ)`.
pub fn dense_instance(
    m: usize,
    n: usize,
    seed: u64,
    opts: GaussianOptions,
) -> Result<ProblemInstance> {
    gaussian_instance(
        gen_dense_gaussian(m, n, seed)?,
        ProblemKind::Dense,
        None,
        seed,
        opts,
    )
}

/// Sparse Gaussian system with `x* = (1, …, 1)` and `r̃ ∈ null(Aᵀ)`.
pub fn sparse_instance(
    m: usize,
    n: usize,
    density: f64,
    seed: u64,
    opts: GaussianOptions,
) -> Result<ProblemInstance> {
    gaussian_instance(
        gen_sparse_gaussian(m, n, density, seed)?,
        ProblemKind::Sparse,
        Some(density),
        seed,
        opts,
    )
}

/// Tomography system: phantom `x*`, `b = A x* + noise` with relative noise
/// `noise_level`.
pub fn tomo_instance(geom: &TomoGeometry, noise_level: f64, seed: u64) -> Result<ProblemInstance> {
    let a = gen_parallel_tomo(geom)?;
    let x_star = shepp_logan_phantom(geom.n_pixels)?.to_column_major();
    let clean = a.matvec(&x_star)?;
    let (b, r_tilde) = add_gaussian_noise(&clean, noise_level, seed)?;
    Ok(ProblemInstance {
        a,
        b,
        x_star: Some(x_star),
        r_tilde: Some(r_tilde),
        kind: ProblemKind::Tomo,
        seed,
        density: None,
        geometry: Some(geom.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_is_deterministic() {
        assert_eq!(
            gen_dense_gaussian(3, 2, 7).unwrap(),
            gen_dense_gaussian(3, 2, 7).unwrap()
        );
        assert_ne!(
            gen_dense_gaussian(3, 2, 7).unwrap(),
            gen_dense_gaussian(3, 2, 8).unwrap()
        );
        let one = gen_dense_gaussian(1, 1, 0).unwrap();
        assert!(one.get(0, 0).is_finite());
        assert!(gen_dense_gaussian(0, 3, 0).is_err());
    }

    #[test]
    fn dense_moments() {
        let a = gen_dense_gaussian(10_000, 500, 3).unwrap();
        let v = a.to_dense_values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn sparse_density_and_limits() {
        let a = gen_sparse_gaussian(2000, 400, 0.1, 5).unwrap();
        let frac = a.nnz() as f64 / (2000.0 * 400.0);
        assert!((frac - 0.1).abs() < 0.005, "{frac}");
        assert!(a.is_sparse());

        let full = gen_sparse_gaussian(5, 4, 1.0, 5).unwrap();
        assert_eq!(full.nnz(), 20);

        let tiny = gen_sparse_gaussian(2, 2, 1e-12, 5).unwrap();
        assert_eq!(tiny.nnz(), 0);
        assert!(gen_sparse_gaussian(2, 2, 0.0, 5).is_err());
        assert!(gen_sparse_gaussian(2, 2, 1.5, 5).is_err());
    }

    #[test]
    fn sparse_mask_independent_of_values() {
        // Same seed: same pattern and values; the mask stream alone fixes the pattern.
        let a = gen_sparse_gaussian(30, 20, 0.3, 9).unwrap();
        let b = gen_sparse_gaussian(30, 20, 0.3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_deficiency() {
        let a = gen_dense_gaussian(3, 5, 1).unwrap();
        let d = enforce_rank_deficiency(&a).unwrap();
        let (r0, r1, r2) = (d.row_dense(0), d.row_dense(1), d.row_dense(2));
        for j in 0..5 {
            assert_eq!(r2[j], 0.5 * (r0[j] + r1[j]));
        }
        assert_eq!(enforce_rank_deficiency(&d).unwrap(), d);
        let s = enforce_rank_deficiency(&gen_sparse_gaussian(6, 5, 0.5, 2).unwrap()).unwrap();
        assert!(s.is_sparse());
        assert_eq!(enforce_rank_deficiency(&s).unwrap(), s);

        let z = MatrixHandle::dense(3, 2, vec![0.0, 0.0, 0.0, 0.0, 5.0, 5.0]).unwrap();
        assert_eq!(
            enforce_rank_deficiency(&z).unwrap().row_dense(2),
            vec![0.0, 0.0]
        );
        assert!(enforce_rank_deficiency(&gen_dense_gaussian(2, 2, 0).unwrap()).is_err());
    }

    #[test]
    fn inconsistent_rhs_padded_identity() {
        let a = MatrixHandle::dense(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let (b, r) = build_inconsistent_rhs(&a, &[1.0, 1.0], 4, 1.0).unwrap();
        assert!(r[0].abs() < 1e-14 && r[1].abs() < 1e-14 && r[2] != 0.0);
        assert!((b[0] - 1.0).abs() < 1e-14 && (b[1] - 1.0).abs() < 1e-14);
        assert!((r[2].abs() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_rhs_errors() {
        let a = MatrixHandle::dense(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            build_inconsistent_rhs(&a, &[1.0, 1.0], 4, 0.0),
            Err(Error::Inconsistency(_))
        ));
        let sq = gen_dense_gaussian(4, 4, 1).unwrap();
        assert!(matches!(
            build_inconsistent_rhs(&sq, &[1.0; 4], 4, 1.0),
            Err(Error::Inconsistency(_))
        ));
    }

    #[test]
    fn instances_satisfy_construction() {
        let p = dense_instance(30, 40, 2, GaussianOptions::default()).unwrap();
        let ax = p.a.matvec(p.x_star.as_ref().unwrap()).unwrap();
        let r = p.r_tilde.as_ref().unwrap();
        for i in 0..30 {
            assert!((p.b[i] - ax[i] - r[i]).abs() <= 1e-10 * p.b[i].abs().max(1.0));
        }
        let atr = p.a.matvec_transpose(r).unwrap();
        assert!(norm_sq(&atr).sqrt() <= 1e-8 * p.a.frob_sq().sqrt() * norm_sq(r).sqrt());

        let s = sparse_instance(60, 20, 0.3, 2, GaussianOptions::default()).unwrap();
        assert_eq!(s.kind, ProblemKind::Sparse);
        assert!(s.a.is_sparse());
    }

    #[test]
    fn noise_examples() {
        let clean = vec![3.0, 4.0, 0.0];
        let (b, r) = add_gaussian_noise(&clean, 0.0, 1).unwrap();
        assert_eq!(b, clean);
        assert_eq!(r, vec![0.0; 3]);

        let (b, _) = add_gaussian_noise(&clean, 0.01, 1).unwrap();
        let diff: Vec<f64> = b.iter().zip(&clean).map(|(x, y)| x - y).collect();
        assert!((norm_sq(&diff).sqrt() / 5.0 - 0.01).abs() < 1e-15);
        assert_eq!(
            add_gaussian_noise(&clean, 0.01, 1).unwrap(),
            add_gaussian_noise(&clean, 0.01, 1).unwrap()
        );

        assert!(add_gaussian_noise(&[0.0, 0.0], 0.1, 1).is_err());
        assert!(add_gaussian_noise(&clean, -0.1, 1).is_err());
    }

    #[test]
    fn tomo_reshape_consistency() {
        let g = TomoGeometry::reduced();
        let p = tomo_instance(&g, 0.01, 3).unwrap();
        assert_eq!(p.b.len(), g.rows());
        assert_eq!(p.x_star.as_ref().unwrap().len(), g.cols());
    }
}
