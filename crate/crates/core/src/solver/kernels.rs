//! Single-step projections shared by all extended Kaczmarz variants.

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

/// `z ← z − (A₍ⱼ₎ᵀz / ‖A₍ⱼ₎‖²) · A₍ⱼ₎`: project `z` onto the orthogonal
/// complement of column `j`.
pub fn z_project_column(z: &mut [f64], a: &MatrixHandle, j: usize) -> Result<()> {
    let norm_sq = *a.col_norms_sq().get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        len: a.cols(),
    })?;
    if norm_sq <= 0.0 {
        return Err(Error::ZeroColumn(j));
    }
    let coef = a.col_dot(j, z)? / norm_sq;
    a.axpy_col(j, -coef, z)
}

/// `x ← x + ((rhs − A⁽ⁱ⁾x) / ‖A⁽ⁱ⁾‖²) · (A⁽ⁱ⁾)ᵀ`: project `x` onto the
/// hyperplane `A⁽ⁱ⁾x = rhs`.
pub fn x_project_row(x: &mut [f64], a: &MatrixHandle, i: usize, rhs: f64) -> Result<()> {
    let norm_sq = *a.row_norms_sq().get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: a.rows(),
    })?;
    if norm_sq <= 0.0 {
        return Err(Error::ZeroRow(i));
    }
    let coef = (rhs - a.row_dot(i, x)?) / norm_sq;
    a.axpy_row(i, coef, x)
}

/// `r = b − A x − z`, recomputed from scratch.
pub fn residual(a: &MatrixHandle, x: &[f64], b: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() || z.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "residual needs b and z of length {}, got {} and {}",
            a.rows(),
            b.len(),
            z.len()
        )));
    }
    let mut r = a.matvec(x)?;
    for ((ri, &bi), &zi) in r.iter_mut().zip(b).zip(z) {
        *ri = bi - *ri - zi;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn z_projection_examples() {
        let a = MatrixHandle::dense(3, 2, vec![1.0, 1.0, 0.0, -1.0, 1.0, 0.0]).unwrap();
        // column 0 = (1,0,1)
        let mut z = vec![1.0, 1.0, 1.0];
        z_project_column(&mut z, &a, 0).unwrap();
        assert!(close(&z, &[0.0, 1.0, 0.0], 1e-15));

        // (0,1,0) is orthogonal to column 0
        let before = z.clone();
        z_project_column(&mut z, &a, 0).unwrap();
        assert_eq!(z, before);

        let mut z = vec![1.0, 0.0, 1.0];
        z_project_column(&mut z, &a, 0).unwrap();
        assert!(close(&z, &[0.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn z_projection_rejects_zero_column() {
        let a = MatrixHandle::dense(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let mut z = vec![1.0, 1.0];
        assert!(matches!(
            z_project_column(&mut z, &a, 1),
            Err(Error::ZeroColumn(1))
        ));
    }

    #[test]
    fn x_projection_examples() {
        let a = MatrixHandle::dense(2, 2, vec![3.0, 4.0, 0.0, 1.0]).unwrap();
        let mut x = vec![0.0, 0.0];
        x_project_row(&mut x, &a, 0, 5.0).unwrap();
        assert!(close(&x, &[0.6, 0.8], 1e-15));

        let before = x.clone();
        x_project_row(&mut x, &a, 0, 5.0).unwrap();
        assert!(close(&x, &before, 1e-15));

        let mut x = vec![1.0, 1.0];
        x_project_row(&mut x, &a, 1, 7.0).unwrap();
        assert_eq!(x, vec![1.0, 7.0]);

        let zero = MatrixHandle::dense(2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            x_project_row(&mut x, &zero, 0, 1.0),
            Err(Error::ZeroRow(0))
        ));
    }

    #[test]
    fn residual_examples() {
        let a = MatrixHandle::dense(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = [1.0, 2.0, 3.0];
        assert_eq!(residual(&a, &[0.0, 0.0], &b, &b).unwrap(), vec![0.0; 3]);
        assert_eq!(
            residual(&a, &[1.0, 2.0], &b, &[0.0, 0.0, 3.0]).unwrap(),
            vec![0.0; 3]
        );
        assert_eq!(
            residual(&a, &[0.0, 0.0], &b, &[0.0; 3]).unwrap(),
            b.to_vec()
        );
        assert!(matches!(
            residual(&a, &[0.0, 0.0], &b, &[0.0; 2]),
            Err(Error::Dimension(_))
        ));
    }
}
