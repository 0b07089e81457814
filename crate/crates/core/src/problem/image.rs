use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} image needs {} pixels, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Image { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Unknown-vector ordering used by the tomography matrices: column-major,
    /// top row first within each column.
    pub fn to_column_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn from_column_major(rows: usize, cols: usize, v: &[f64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "cannot reshape {} values to {rows}x{cols}",
                v.len()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for c in 0..cols {
            for r in 0..rows {
                data[r * cols + c] = v[c * rows + r];
            }
        }
        Ok(Image { rows, cols, data })
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whitespace-separated text, one image row per line.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w =
            std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|c| format!("{:e}", self.get(r, c)))
                .collect();
            writeln!(w, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Binary 8-bit PGM; intensities in `[0, 1]` map linearly to `0..=255`,
    /// values outside are clipped.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        bytes.extend(
            self.data
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}
