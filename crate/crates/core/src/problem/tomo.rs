//! Parallel-beam projection matrices by Siddon ray traversal.
//!
//! The object is an `N × N` pixel grid covering `[-d, d]²`. For an angle `θ`
//! the rays run along `(cos θ, sin θ)` and are offset along the normal
//! `(−sin θ, cos θ)`; `p` offsets are spread evenly over the detector span and
//! centered on the origin. Entry `(ray, pixel)` is the length of the ray
//! inside the pixel. Rows are ordered angle-major, then by offset.
//!
//! Pixel `(row r, col c)` of the image (row 0 at the top, i.e. largest `y`)
//! is unknown number `c · N + r` (column-major reshape).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoGeometry {
    /// Pixels per side.
    pub n_pixels: usize,
    /// Half-width `d` of the square domain `[-d, d]²`.
    pub half_width: f64,
    pub angles_deg: Vec<f64>,
    pub rays_per_angle: usize,
    /// Distance between the first and last ray of each angle.
    pub span: f64,
}

/// `start, start + step, …` up to and including `stop` (with a small
/// tolerance for rounding).
pub fn angle_range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

impl TomoGeometry {
    /// 40×40 grid on `[-20, 20]²`, angles `0:2:150`, 125 rays over a span of
    /// 120, giving a 9500×1600 matrix.
    pub fn full_scale() -> Self {
        TomoGeometry {
            n_pixels: 40,
            half_width: 20.0,
            angles_deg: angle_range(0.0, 2.0, 150.0),
            rays_per_angle: 125,
            span: 120.0,
        }
    }

    /// 24×24 grid on `[-12, 12]²`, angles `0:6:174`, 75 rays over a span of 72
    /// (the full-scale ray spacing kept, 2250×576 matrix).
    pub fn reduced() -> Self {
        TomoGeometry {
            n_pixels: 24,
            half_width: 12.0,
            angles_deg: angle_range(0.0, 6.0, 174.0),
            rays_per_angle: 75,
            span: 72.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels == 0 {
            return Err(Error::InvalidArgument(
                "tomography grid needs at least one pixel".into(),
            ));
        }
        if self.angles_deg.is_empty() {
            return Err(Error::InvalidArgument("angle list is empty".into()));
        }
        if self.rays_per_angle == 0 {
            return Err(Error::InvalidArgument(
                "need at least one ray per angle".into(),
            ));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half width must be positive, got {}",
                self.half_width
            )));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "detector span must be positive, got {}",
                self.span
            )));
        }
        if self.angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite angle".into()));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.angles_deg.len() * self.rays_per_angle
    }

    pub fn cols(&self) -> usize {
        self.n_pixels * self.n_pixels
    }

    /// Normal offsets of the rays of one angle.
    pub fn ray_offsets(&self) -> Vec<f64> {
        let p = self.rays_per_angle;
        if p == 1 {
            return vec![0.0];
        }
        let step = self.span / (p - 1) as f64;
        (0..p).map(|k| -self.span / 2.0 + k as f64 * step).collect()
    }
}

/// Pixel intersections `(column index, length)` of the line
/// `origin + t · dir` (with `dir` a unit vector), sorted by column index.
pub fn trace_ray(geom: &TomoGeometry, origin: [f64; 2], dir: [f64; 2]) -> Vec<(usize, f64)> {
    let n = geom.n_pixels;
    let d = geom.half_width;
    let h = 2.0 * d / n as f64;

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for axis in 0..2 {
        if dir[axis].abs() < 1e-15 {
            // Parallel to this axis: half-open [-d, d) so a ray on a grid line
            // is assigned consistently with the floor rule below.
            if origin[axis] < -d || origin[axis] >= d {
                return Vec::new();
            }
        } else {
            let t1 = (-d - origin[axis]) / dir[axis];
            let t2 = (d - origin[axis]) / dir[axis];
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if !(t_hi > t_lo) {
        return Vec::new();
    }

    let mut ts = vec![t_lo, t_hi];
    for axis in 0..2 {
        if dir[axis].abs() < 1e-15 {
            continue;
        }
        for k in 0..=n {
            let t = (-d + k as f64 * h - origin[axis]) / dir[axis];
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let mut hits: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 * h {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let x = origin[0] + tm * dir[0];
        let y = origin[1] + tm * dir[1];
        let ix = (((x + d) / h).floor() as isize).clamp(0, n as isize - 1) as usize;
        let iy = (((y + d) / h).floor() as isize).clamp(0, n as isize - 1) as usize;
        let col = ix * n + (n - 1 - iy);
        hits.push((col, len));
    }
    hits.sort_by_key(|&(c, _)| c);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(hits.len());
    for (c, l) in hits {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += l,
            _ => merged.push((c, l)),
        }
    }
    merged
}

/// Build the parallel-beam system matrix in CSR form.
pub fn gen_parallel_tomo(geom: &TomoGeometry) -> Result<MatrixHandle> {
    geom.validate()?;
    let offsets_s = geom.ray_offsets();
    let mut offsets = Vec::with_capacity(geom.rows() + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    offsets.push(0);
    for &theta in &geom.angles_deg {
        let (s, c) = theta.to_radians().sin_cos();
        let dir = [c, s];
        let normal = [-s, c];
        for &off in &offsets_s {
            let origin = [off * normal[0], off * normal[1]];
            for (col, len) in trace_ray(geom, origin, dir) {
                indices.push(col);
                values.push(len);
            }
            offsets.push(values.len());
        }
    }
    MatrixHandle::csr(geom.rows(), geom.cols(), offsets, indices, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_ray(n: usize, d: f64, angle: f64) -> TomoGeometry {
        TomoGeometry {
            n_pixels: n,
            half_width: d,
            angles_deg: vec![angle],
            rays_per_angle: 1,
            span: 1.0,
        }
    }

    #[test]
    fn horizontal_ray_through_center() {
        let a = gen_parallel_tomo(&single_ray(4, 2.0, 0.0)).unwrap();
        let row = a.row_dense(0);
        let nonzero: Vec<f64> = row.iter().cloned().filter(|&v| v != 0.0).collect();
        assert_eq!(nonzero.len(), 4);
        assert!(nonzero.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((row.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn missing_ray_gives_empty_row() {
        let g = TomoGeometry {
            n_pixels: 4,
            half_width: 2.0,
            angles_deg: vec![0.0],
            rays_per_angle: 2,
            span: 10.0,
        };
        let a = gen_parallel_tomo(&g).unwrap();
        assert_eq!(a.row_norms_sq(), &[0.0, 0.0]);
    }

    #[test]
    fn diagonal_ray_length() {
        let g = single_ray(5, 1.0, 45.0);
        let a = gen_parallel_tomo(&g).unwrap();
        let total: f64 = a.row_dense(0).iter().sum();
        assert!((total - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn full_scale_shape() {
        let g = TomoGeometry::full_scale();
        assert_eq!(g.angles_deg.len(), 76);
        let a = gen_parallel_tomo(&g).unwrap();
        assert_eq!((a.rows(), a.cols()), (9500, 1600));
        let r = TomoGeometry::reduced();
        assert_eq!(r.angles_deg.len(), 30);
        assert_eq!((r.rows(), r.cols()), (2250, 576));
    }

    #[test]
    fn row_sums_bounded_and_nonnegative() {
        let g = TomoGeometry::reduced();
        let a = gen_parallel_tomo(&g).unwrap();
        let diam = 2.0 * 2f64.sqrt() * g.half_width;
        for i in 0..a.rows() {
            let mut sum = 0.0;
            a.for_each_in_row(i, |_, v| {
                assert!(v >= 0.0);
                sum += v;
            });
            assert!(sum <= diam + 1e-10);
        }
    }

    #[test]
    fn axis_aligned_full_crossings() {
        let g = TomoGeometry {
            n_pixels: 6,
            half_width: 3.0,
            angles_deg: vec![0.0, 90.0],
            rays_per_angle: 7,
            span: 5.4,
        };
        let a = gen_parallel_tomo(&g).unwrap();
        for i in 0..a.rows() {
            let sum: f64 = a.row_dense(i).iter().sum();
            assert!((sum - 6.0).abs() < 1e-10, "row {i}: {sum}");
        }
    }

    #[test]
    fn vertical_ray_hits_one_image_column() {
        // 90°: ray along +y at x = -offset; offset 0 sits on the grid line x = 0,
        // which the half-open rule assigns to pixel column 2 of 4.
        let a = gen_parallel_tomo(&single_ray(4, 2.0, 90.0)).unwrap();
        let cols: Vec<usize> = (0..16).filter(|&j| a.get(0, j) != 0.0).collect();
        assert_eq!(cols, vec![8, 9, 10, 11]);
    }

    #[test]
    fn degenerate_geometry() {
        let mut g = single_ray(4, 2.0, 0.0);
        g.n_pixels = 0;
        assert!(gen_parallel_tomo(&g).is_err());
        let mut g = single_ray(4, 2.0, 0.0);
        g.angles_deg.clear();
        assert!(gen_parallel_tomo(&g).is_err());
        let mut g = single_ray(4, 2.0, 0.0);
        g.span = 0.0;
        assert!(gen_parallel_tomo(&g).is_err());
    }

    #[test]
    fn angle_range_inclusive() {
        assert_eq!(angle_range(0.0, 2.0, 150.0).len(), 76);
        assert_eq!(angle_range(0.0, 6.0, 174.0).last().copied(), Some(174.0));
    }
}
