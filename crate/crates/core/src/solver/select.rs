//! Row and column selection rules.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

/// Inverse-CDF draw over a cumulative weight table. Zero-weight entries are
/// never returned.
fn sample_cumulative<R: Rng + ?Sized>(rng: &mut R, cumsum: &[f64]) -> Option<usize> {
    let total = *cumsum.last()?;
    if !(total > 0.0) {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let idx = cumsum.partition_point(|&c| c <= u);
    if idx < cumsum.len() {
        Some(idx)
    } else {
        // u rounded up to `total`; fall back to the last index with weight.
        let last = cumsum.iter().rposition(|&c| c < total).map_or(0, |p| p + 1);
        Some(last)
    }
}

/// Draw column `j` with probability `‖A₍ⱼ₎‖² / ‖A‖_F²`.
pub fn sample_column_weighted<R: Rng + ?Sized>(rng: &mut R, a: &MatrixHandle) -> Result<usize> {
    sample_cumulative(rng, a.col_cumsum()).ok_or(Error::ZeroMatrix)
}

/// Draw row `i` with probability `‖A⁽ⁱ⁾‖² / ‖A‖_F²`.
pub fn sample_row_weighted<R: Rng + ?Sized>(rng: &mut R, a: &MatrixHandle) -> Result<usize> {
    sample_cumulative(rng, a.row_cumsum()).ok_or(Error::ZeroMatrix)
}

/// Return the column under `cursor` (skipping zero columns) and advance the
/// cursor past it, wrapping modulo `n`.
pub fn next_column_cyclic(cursor: &mut usize, a: &MatrixHandle) -> Result<usize> {
    let n = a.cols();
    let norms = a.col_norms_sq();
    for step in 0..n {
        let j = (*cursor + step) % n;
        if norms[j] > 0.0 {
            *cursor = (j + 1) % n;
            return Ok(j);
        }
    }
    Err(Error::ZeroMatrix)
}

/// Index of the largest `|r⁽ⁱ⁾|`, smallest index on ties. A zero (or empty)
/// residual yields 0.
pub fn select_max_residual_row(r: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in r.iter().enumerate() {
        let a = v.abs();
        if a > best_val {
            best = i;
            best_val = a;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frequencies(n: usize, draws: usize, mut f: impl FnMut() -> usize) -> Vec<f64> {
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[f()] += 1;
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn single_nonzero_column_always_chosen() {
        let a = MatrixHandle::dense(2, 3, vec![0.0, 1.0, 0.0, 0.0, 2.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_column_weighted(&mut rng, &a).unwrap(), 1);
        }
    }

    #[test]
    fn column_frequencies_match_norms() {
        // column norms² [1, 3]
        let a = MatrixHandle::dense(1, 2, vec![1.0, 3f64.sqrt()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = frequencies(2, 100_000, || sample_column_weighted(&mut rng, &a).unwrap());
        assert!((f[0] - 0.25).abs() < 0.01, "{f:?}");
        assert!((f[1] - 0.75).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn row_frequencies_match_norms() {
        // row norms² [9, 16, 0]
        let a = MatrixHandle::from_triplets(3, 2, vec![(0, 0, 3.0), (1, 1, 4.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = frequencies(3, 100_000, || sample_row_weighted(&mut rng, &a).unwrap());
        assert!((f[0] - 0.36).abs() < 0.01, "{f:?}");
        assert!((f[1] - 0.64).abs() < 0.01, "{f:?}");
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn zero_matrix_has_no_distribution() {
        let a = MatrixHandle::dense(2, 2, vec![0.0; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_row_weighted(&mut rng, &a),
            Err(Error::ZeroMatrix)
        ));
        assert!(matches!(
            sample_column_weighted(&mut rng, &a),
            Err(Error::ZeroMatrix)
        ));
        let mut cursor = 0;
        assert!(matches!(
            next_column_cyclic(&mut cursor, &a),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn cyclic_sequences() {
        let full = MatrixHandle::dense(1, 3, vec![1.0, 1.0, 1.0]).unwrap();
        let mut cursor = 0;
        let seq: Vec<usize> = (0..5)
            .map(|_| next_column_cyclic(&mut cursor, &full).unwrap())
            .collect();
        assert_eq!(seq, vec![0, 1, 2, 0, 1]);

        let gap = MatrixHandle::dense(1, 3, vec![1.0, 0.0, 1.0]).unwrap();
        let mut cursor = 0;
        let seq: Vec<usize> = (0..4)
            .map(|_| next_column_cyclic(&mut cursor, &gap).unwrap())
            .collect();
        assert_eq!(seq, vec![0, 2, 0, 2]);

        let single = MatrixHandle::dense(2, 1, vec![1.0, 2.0]).unwrap();
        let mut cursor = 0;
        for _ in 0..3 {
            assert_eq!(next_column_cyclic(&mut cursor, &single).unwrap(), 0);
            assert_eq!(cursor, 0);
        }
    }

    #[test]
    fn greedy_row_choice() {
        assert_eq!(select_max_residual_row(&[1.0, -3.0, 2.0]), 1);
        assert_eq!(select_max_residual_row(&[5.0, 5.0, 1.0]), 0);
        assert_eq!(select_max_residual_row(&[0.0, 0.0]), 0);
        assert_eq!(select_max_residual_row(&[-0.0, 0.0, 0.0]), 0);
    }
}
