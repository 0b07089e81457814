use crate::error::{Error, Result};
use crate::problem::Image;

/// Peak signal-to-noise ratio `10 log10(max(truth)² / MSE)` in decibels, with
/// the MSE taken over all pixels. Identical images give `f64::INFINITY`.
pub fn psnr(truth: &Image, recon: &Image) -> Result<f64> {
    if (truth.rows, truth.cols) != (recon.rows, recon.cols) {
        return Err(Error::Dimension(format!(
            "image shapes differ: {}x{} vs {}x{}",
            truth.rows, truth.cols, recon.rows, recon.cols
        )));
    }
    let peak = truth.max();
    if truth.data.iter().all(|&v| v == 0.0) || !(peak > 0.0) {
        return Err(Error::InvalidArgument(
            "reference image has no positive peak".into(),
        ));
    }
    let mse = truth
        .data
        .iter()
        .zip(&recon.data)
        .map(|(t, r)| (t - r) * (t - r))
        .sum::<f64>()
        / truth.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(data: Vec<f64>) -> Image {
        Image::new(2, 2, data).unwrap()
    }

    #[test]
    fn identical_is_infinite() {
        let t = img(vec![1.0, 0.5, 0.0, 0.2]);
        assert_eq!(psnr(&t, &t).unwrap(), f64::INFINITY);
    }

    #[test]
    fn uniform_error_twenty_db() {
        let t = img(vec![1.0, 0.5, 0.0, 0.2]);
        let r = img(t.data.iter().map(|v| v + 0.1).collect());
        assert!((psnr(&t, &r).unwrap() - 20.0).abs() < 1e-10);
    }

    #[test]
    fn scale_invariant() {
        let t = img(vec![1.0, 0.5, 0.0, 0.2]);
        let r = img(vec![0.9, 0.4, 0.3, 0.2]);
        let c = 3.7;
        let ts = img(t.data.iter().map(|v| v * c).collect());
        let rs = img(r.data.iter().map(|v| v * c).collect());
        assert!((psnr(&t, &r).unwrap() - psnr(&ts, &rs).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let t = img(vec![1.0, 0.5, 0.0, 0.2]);
        assert!(psnr(&img(vec![0.0; 4]), &t).is_err());
        assert!(psnr(&t, &Image::new(1, 4, vec![0.0; 4]).unwrap()).is_err());
    }
}
