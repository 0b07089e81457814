use serde::{Deserialize, Serialize};

use super::{PseudoInverse, SpectralProfile};
use crate::error::{Error, Result};
use crate::matrix::{norm_sq, MatrixHandle};
use crate::solver::{ColumnRule, ZSweep};

/// Partner of `alpha1` in the Young-type inequality
/// `(r₁ + r₂)² ≥ α₁ r₁² + β₁ r₂²`, i.e. the solution of `α₁ + β₁ = α₁ β₁`.
///
/// `alpha1` must lie in `[1/2, 1)` so that `β₁ ≤ −1`.
pub fn young_pair(alpha1: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&alpha1) {
        return Err(Error::InvalidArgument(format!(
            "alpha1 must lie in [0.5, 1), got {alpha1}"
        )));
    }
    Ok(alpha1 / (alpha1 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub alpha1: f64,
    pub beta1: f64,
    pub omega: usize,
    pub profile: SpectralProfile,
    /// `‖x₀ − x*‖²`
    pub x0_err_sq: f64,
    /// `‖x*‖²`
    pub xstar_norm_sq: f64,
}

impl BoundInputs {
    pub fn new(
        alpha1: f64,
        omega: usize,
        profile: SpectralProfile,
        x0_err_sq: f64,
        xstar_norm_sq: f64,
    ) -> Result<Self> {
        Ok(BoundInputs {
            alpha1,
            beta1: young_pair(alpha1)?,
            omega,
            profile,
            x0_err_sq,
            xstar_norm_sq,
        })
    }
}

/// Value of the MEMRK error bound together with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemrkBound {
    pub k: usize,
    pub value: f64,
    pub nu: f64,
    pub mu: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub kappa: f64,
}

/// `ν^k ‖x₀−x*‖² + (ν^{k−⌊k/2⌋} + α^{ω⌊k/2⌋}) · μγ/α₁² · κ² ‖x*‖²` with
/// `ν = 1 − α₁²σ_min²/γ` and `μ = (1+β₁)/minᵢ‖A⁽ⁱ⁾‖² + α₁β₁/γ`.
///
/// `μ` is nonpositive for admissible `(α₁, β₁)`; the value is reported as is.
pub fn memrk_bound(inputs: &BoundInputs, k: usize) -> Result<MemrkBound> {
    let p = &inputs.profile;
    let a1 = inputs.alpha1;
    let nu = 1.0 - a1 * a1 * p.sigma_min * p.sigma_min / p.gamma;
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nu = {nu} lies outside (0, 1)"
        )));
    }
    let mu = (1.0 + inputs.beta1) / p.min_row_norm_sq + a1 * inputs.beta1 / p.gamma;
    let half = (k / 2) as i32;
    let rest = (k - k / 2) as i32;
    let value = nu.powi(k as i32) * inputs.x0_err_sq
        + (nu.powi(rest) + p.alpha.powi(inputs.omega as i32 * half)) * mu * p.gamma / (a1 * a1)
            * p.kappa
            * p.kappa
            * inputs.xstar_norm_sq;
    Ok(MemrkBound {
        k,
        value,
        nu,
        mu,
        gamma: p.gamma,
        alpha: p.alpha,
        kappa: p.kappa,
    })
}

/// REK bound `α^{k−⌊k/2⌋}‖x₀−x*‖² + (α^{k−⌊k/2⌋} + α^{⌊k/2⌋}) κ² ‖x*‖²`.
pub fn rek_bound(profile: &SpectralProfile, k: usize, x0_err_sq: f64, xstar_norm_sq: f64) -> f64 {
    let rest = profile.alpha.powi((k - k / 2) as i32);
    let half = profile.alpha.powi((k / 2) as i32);
    rest * x0_err_sq + (rest + half) * profile.kappa * profile.kappa * xstar_norm_sq
}

/// One row of a z-contraction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub k: usize,
    /// Mean of `‖z_k − b⊥‖²` over trials.
    pub empirical_mean: f64,
    /// `α^{ωk} ‖b_R(A)‖²`
    pub envelope: f64,
}

/// Run only the z-sweep of MEMRK from `z₀ = b` over `trials` seeds and compare
/// the mean squared distance to `b⊥` with the geometric envelope.
///
/// Trial `t` uses seed `seed + t`.
pub fn z_rate_check(
    a: &MatrixHandle,
    b: &[f64],
    omega: usize,
    rule: ColumnRule,
    trials: usize,
    k_max: usize,
    seed: u64,
) -> Result<Vec<RateRow>> {
    if omega < 1 || trials < 1 {
        return Err(Error::InvalidArgument(
            "omega and trials must be at least 1".into(),
        ));
    }
    let pinv = PseudoInverse::new(a)?;
    let b_perp = pinv.project_range_perp(b)?;
    let b_range_sq: f64 = b.iter().zip(&b_perp).map(|(x, y)| (x - y) * (x - y)).sum();
    let alpha = super::spectral_profile(a)?.alpha;

    let mut sums = vec![0.0; k_max + 1];
    for t in 0..trials {
        let mut sweep = ZSweep::new(rule, seed.wrapping_add(t as u64));
        let mut z = b.to_vec();
        let mut diff = vec![0.0; z.len()];
        for (k, sum) in sums.iter_mut().enumerate() {
            if k > 0 {
                sweep.run(a, &mut z, omega)?;
            }
            for ((d, zi), pi) in diff.iter_mut().zip(&z).zip(&b_perp) {
                *d = zi - pi;
            }
            *sum += norm_sq(&diff);
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(k, s)| RateRow {
            k,
            empirical_mean: s / trials as f64,
            envelope: alpha.powi((omega * k) as i32) * b_range_sq,
        })
        .collect())
}
