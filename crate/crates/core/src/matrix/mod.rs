//! Immutable matrix storage with cached norms.
//!
//! A [`MatrixHandle`] owns either a dense row-major array or a CSR triplet. CSR
//! handles also carry a compressed-sparse-column mirror so that column access
//! costs `O(nnz(column))`. All indices are zero-based.

mod market;

pub use market::{read_matrix_market, read_vector, write_matrix_market, write_vector};

use crate::error::{Error, Result};

/// Backing storage of a [`MatrixHandle`].
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Row-major values, `rows * cols` long.
    Dense { values: Vec<f64> },
    /// Compressed sparse rows plus a column-major mirror of the same entries.
    Csr { rows: Compressed, cols: Compressed },
}

/// One compressed orientation: `offsets[k]..offsets[k + 1]` indexes the stored
/// entries of major line `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    pub offsets: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Compressed {
    #[inline]
    fn line(&self, k: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[k]..self.offsets[k + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    /// Transpose the orientation (CSR -> CSC and back).
    fn transpose(&self, minor_len: usize) -> Compressed {
        let nnz = self.values.len();
        let mut counts = vec![0usize; minor_len + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for k in 0..minor_len {
            counts[k + 1] += counts[k];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let majors = self.offsets.len() - 1;
        for i in 0..majors {
            let (idx, val) = self.line(i);
            for (&j, &v) in idx.iter().zip(val) {
                let slot = next[j];
                indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Compressed {
            offsets,
            indices,
            values,
        }
    }
}

/// Immutable matrix with cached squared row norms, squared column norms,
/// squared Frobenius norm and cumulative norm tables for weighted sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixHandle {
    rows: usize,
    cols: usize,
    storage: Storage,
    row_norms_sq: Vec<f64>,
    col_norms_sq: Vec<f64>,
    frob_sq: f64,
    row_cumsum: Vec<f64>,
    col_cumsum: Vec<f64>,
}

impl MatrixHandle {
    /// Build a dense matrix from row-major values.
    pub fn dense(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} dense matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self::finish(rows, cols, Storage::Dense { values }))
    }

    /// Build a CSR matrix. Column indices must be strictly increasing within
    /// each row.
    pub fn csr(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 {
            return Err(Error::Dimension(format!(
                "CSR offsets must have {} entries, got {}",
                rows + 1,
                offsets.len()
            )));
        }
        if indices.len() != values.len() {
            return Err(Error::Dimension(format!(
                "CSR has {} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if offsets[0] != 0 || offsets[rows] != values.len() {
            return Err(Error::InvalidCsr {
                row: rows,
                reason: format!("offsets must run from 0 to {}", values.len()),
            });
        }
        for i in 0..rows {
            if offsets[i] > offsets[i + 1] {
                return Err(Error::InvalidCsr {
                    row: i,
                    reason: "offsets decrease".into(),
                });
            }
            let idx = &indices[offsets[i]..offsets[i + 1]];
            for (k, &j) in idx.iter().enumerate() {
                if j >= cols {
                    return Err(Error::InvalidCsr {
                        row: i,
                        reason: format!("column index {j} out of range for {cols} columns"),
                    });
                }
                if k > 0 && idx[k - 1] >= j {
                    let reason = if idx[k - 1] == j {
                        "duplicate column index"
                    } else {
                        "unsorted column indices"
                    };
                    return Err(Error::InvalidCsr {
                        row: i,
                        reason: format!("{reason} {j}"),
                    });
                }
                let v = values[offsets[i] + k];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let by_row = Compressed {
            offsets,
            indices,
            values,
        };
        let by_col = by_row.transpose(cols);
        Ok(Self::finish(
            rows,
            cols,
            Storage::Csr {
                rows: by_row,
                cols: by_col,
            },
        ))
    }

    /// Build a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are rejected; explicit zeros are kept.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut offsets = vec![0usize; rows + 1];
        for &(i, _, _) in &triplets {
            offsets[i + 1] += 1;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let indices = triplets.iter().map(|t| t.1).collect();
        let values = triplets.iter().map(|t| t.2).collect();
        Self::csr(rows, cols, offsets, indices, values)
    }

    fn finish(rows: usize, cols: usize, storage: Storage) -> Self {
        let mut row_norms_sq = vec![0.0; rows];
        let mut col_norms_sq = vec![0.0; cols];
        match &storage {
            Storage::Dense { values } => {
                for i in 0..rows {
                    let row = &values[i * cols..(i + 1) * cols];
                    row_norms_sq[i] = dot(row, row);
                    for (c, &v) in col_norms_sq.iter_mut().zip(row) {
                        *c += v * v;
                    }
                }
            }
            Storage::Csr {
                rows: by_row,
                cols: by_col,
            } => {
                for (i, norm) in row_norms_sq.iter_mut().enumerate() {
                    let (_, val) = by_row.line(i);
                    *norm = val.iter().map(|v| v * v).sum();
                }
                for (j, norm) in col_norms_sq.iter_mut().enumerate() {
                    let (_, val) = by_col.line(j);
                    *norm = val.iter().map(|v| v * v).sum();
                }
            }
        }
        let row_cumsum = cumsum(&row_norms_sq);
        let col_cumsum = cumsum(&col_norms_sq);
        let frob_sq = row_cumsum.last().copied().unwrap_or(0.0);
        MatrixHandle {
            rows,
            cols,
            storage,
            row_norms_sq,
            col_norms_sq,
            frob_sq,
            row_cumsum,
            col_cumsum,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr { .. })
    }

    /// Number of stored entries (`rows * cols` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense { values } => values.len(),
            Storage::Csr { rows, .. } => rows.values.len(),
        }
    }

    /// Squared Euclidean norms of the rows.
    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    /// Squared Euclidean norms of the columns.
    pub fn col_norms_sq(&self) -> &[f64] {
        &self.col_norms_sq
    }

    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    /// Running sums of the squared row norms; the last entry equals the sum
    /// of all of them.
    pub fn row_cumsum(&self) -> &[f64] {
        &self.row_cumsum
    }

    pub fn col_cumsum(&self) -> &[f64] {
        &self.col_cumsum
    }

    /// Entry `(i, j)`; zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense { values } => values[i * self.cols + j],
            Storage::Csr { rows, .. } => {
                let (idx, val) = rows.line(i);
                idx.binary_search(&j).map(|k| val[k]).unwrap_or(0.0)
            }
        }
    }

    /// Row `i` as a dense vector.
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match &self.storage {
            Storage::Dense { values } => values[i * self.cols..(i + 1) * self.cols].to_vec(),
            Storage::Csr { rows, .. } => {
                let mut out = vec![0.0; self.cols];
                let (idx, val) = rows.line(i);
                for (&j, &v) in idx.iter().zip(val) {
                    out[j] = v;
                }
                out
            }
        }
    }

    /// Row-major dense copy of all entries.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense { values } => values.clone(),
            Storage::Csr { .. } => (0..self.rows).flat_map(|i| self.row_dense(i)).collect(),
        }
    }

    /// Dense copy of this matrix.
    pub fn to_dense(&self) -> MatrixHandle {
        match &self.storage {
            Storage::Dense { .. } => self.clone(),
            Storage::Csr { .. } => Self::finish(
                self.rows,
                self.cols,
                Storage::Dense {
                    values: self.to_dense_values(),
                },
            ),
        }
    }

    /// CSR copy of this matrix. Converting a dense matrix stores only its
    /// nonzero entries.
    pub fn to_csr(&self) -> MatrixHandle {
        match &self.storage {
            Storage::Csr { .. } => self.clone(),
            Storage::Dense { values } => {
                let mut offsets = Vec::with_capacity(self.rows + 1);
                let mut indices = Vec::new();
                let mut vals = Vec::new();
                offsets.push(0);
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let v = values[i * self.cols + j];
                        if v != 0.0 {
                            indices.push(j);
                            vals.push(v);
                        }
                    }
                    offsets.push(vals.len());
                }
                let by_row = Compressed {
                    offsets,
                    indices,
                    values: vals,
                };
                let by_col = by_row.transpose(self.cols);
                Self::finish(
                    self.rows,
                    self.cols,
                    Storage::Csr {
                        rows: by_row,
                        cols: by_col,
                    },
                )
            }
        }
    }

    /// Visit the stored entries of row `i` as `(column, value)`.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense { values } => {
                for (j, &v) in values[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .enumerate()
                {
                    f(j, v);
                }
            }
            Storage::Csr { rows, .. } => {
                let (idx, val) = rows.line(i);
                for (&j, &v) in idx.iter().zip(val) {
                    f(j, v);
                }
            }
        }
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.rows,
            });
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.cols {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.cols,
            });
        }
        Ok(())
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x` into a caller-provided buffer.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.cols || y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "matvec of {}x{} with x of length {} into y of length {}",
                self.rows,
                self.cols,
                x.len(),
                y.len()
            )));
        }
        match &self.storage {
            Storage::Dense { values } => {
                if self.cols == 0 {
                    y.fill(0.0);
                } else {
                    for (yi, row) in y.iter_mut().zip(values.chunks_exact(self.cols)) {
                        *yi = dot(row, x);
                    }
                }
            }
            Storage::Csr { rows, .. } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let (idx, val) = rows.line(i);
                    *yi = sparse_dot(idx, val, x);
                }
            }
        }
        Ok(())
    }

    /// `y = Aᵀ z`.
    pub fn matvec_transpose(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.rows {
            return Err(Error::Dimension(format!(
                "transposed matvec of {}x{} with vector of length {}",
                self.rows,
                self.cols,
                z.len()
            )));
        }
        let mut y = vec![0.0; self.cols];
        match &self.storage {
            Storage::Dense { values } => {
                for (i, &zi) in z.iter().enumerate() {
                    if zi != 0.0 {
                        axpy(zi, &values[i * self.cols..(i + 1) * self.cols], &mut y);
                    }
                }
            }
            Storage::Csr { cols, .. } => {
                for (j, yj) in y.iter_mut().enumerate() {
                    let (idx, val) = cols.line(j);
                    *yj = sparse_dot(idx, val, z);
                }
            }
        }
        Ok(y)
    }

    /// `A⁽ⁱ⁾ x`, the inner product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_row(i)?;
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "row_dot with x of length {}, expected {}",
                x.len(),
                self.cols
            )));
        }
        Ok(match &self.storage {
            Storage::Dense { values } => dot(&values[i * self.cols..(i + 1) * self.cols], x),
            Storage::Csr { rows, .. } => {
                let (idx, val) = rows.line(i);
                sparse_dot(idx, val, x)
            }
        })
    }

    /// `A₍ⱼ₎ᵀ z`, the inner product of column `j` with `z`.
    pub fn col_dot(&self, j: usize, z: &[f64]) -> Result<f64> {
        self.check_col(j)?;
        if z.len() != self.rows {
            return Err(Error::Dimension(format!(
                "col_dot with z of length {}, expected {}",
                z.len(),
                self.rows
            )));
        }
        Ok(match &self.storage {
            Storage::Dense { values } => {
                let mut acc = 0.0;
                for (i, &zi) in z.iter().enumerate() {
                    acc += values[i * self.cols + j] * zi;
                }
                acc
            }
            Storage::Csr { cols, .. } => {
                let (idx, val) = cols.line(j);
                sparse_dot(idx, val, z)
            }
        })
    }

    /// `x += c · (A⁽ⁱ⁾)ᵀ`. Only coordinates stored in row `i` are touched.
    pub fn axpy_row(&self, i: usize, c: f64, x: &mut [f64]) -> Result<()> {
        self.check_row(i)?;
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "axpy_row with x of length {}, expected {}",
                x.len(),
                self.cols
            )));
        }
        if c == 0.0 {
            return Ok(());
        }
        match &self.storage {
            Storage::Dense { values } => axpy(c, &values[i * self.cols..(i + 1) * self.cols], x),
            Storage::Csr { rows, .. } => {
                let (idx, val) = rows.line(i);
                for (&j, &v) in idx.iter().zip(val) {
                    x[j] += c * v;
                }
            }
        }
        Ok(())
    }

    /// `z += c · A₍ⱼ₎`. Only coordinates stored in column `j` are touched.
    pub fn axpy_col(&self, j: usize, c: f64, z: &mut [f64]) -> Result<()> {
        self.check_col(j)?;
        if z.len() != self.rows {
            return Err(Error::Dimension(format!(
                "axpy_col with z of length {}, expected {}",
                z.len(),
                self.rows
            )));
        }
        if c == 0.0 {
            return Ok(());
        }
        match &self.storage {
            Storage::Dense { values } => {
                for (i, zi) in z.iter_mut().enumerate() {
                    *zi += c * values[i * self.cols + j];
                }
            }
            Storage::Csr { cols, .. } => {
                let (idx, val) = cols.line(j);
                for (&i, &v) in idx.iter().zip(val) {
                    z[i] += c * v;
                }
            }
        }
        Ok(())
    }
}

fn cumsum(values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Dense inner product with four independent accumulators so the loop
/// vectorizes. The summation order is fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += ca[k] * cb[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn sparse_dot(idx: &[usize], val: &[f64], x: &[f64]) -> f64 {
    idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
}

#[inline]
fn axpy(c: f64, a: &[f64], y: &mut [f64]) {
    for (yi, &ai) in y.iter_mut().zip(a) {
        *yi += c * ai;
    }
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}
