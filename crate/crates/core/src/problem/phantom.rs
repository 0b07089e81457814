use super::image::Image;
use crate::error::{Error, Result};

/// Modified Shepp–Logan ellipses: intensity, semi-axes (a, b), center (x, y),
/// rotation in degrees. Coordinates are on `[-1, 1]²`.
const ELLIPSES: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

/// Intensity of the phantom at `(x, y) ∈ [-1, 1]²`, before clipping.
pub fn shepp_logan_value(x: f64, y: f64) -> f64 {
    ELLIPSES
        .iter()
        .filter(|&&[_, a, b, x0, y0, phi]| {
            let (s, c) = phi.to_radians().sin_cos();
            let dx = x - x0;
            let dy = y - y0;
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / a).powi(2) + (v / b).powi(2) <= 1.0
        })
        .map(|e| e[0])
        .sum()
}

/// `N × N` modified Shepp–Logan phantom sampled at pixel centers, clipped to
/// `[0, 1]`. Row 0 is the top of the image (largest `y`).
pub fn shepp_logan_phantom(n: usize) -> Result<Image> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "phantom side must be at least 8, got {n}"
        )));
    }
    let h = 2.0 / n as f64;
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = 1.0 - (r as f64 + 0.5) * h;
        for c in 0..n {
            let x = -1.0 + (c as f64 + 0.5) * h;
            data.push(shepp_logan_value(x, y).clamp(0.0, 1.0));
        }
    }
    Image::new(n, n, data)
}
