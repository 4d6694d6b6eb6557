//! Noise schedules and the forward/reverse diffusion steps.
//!
//! Timesteps are 0-based: `t ∈ [0, T)`. The cumulative product
//! `alpha_bar[t] = ∏_{s≤t} (1 − beta[s])` drives the closed-form forward
//! process `z_t = √ᾱ_t·z_0 + √(1−ᾱ_t)·ε` and its inversions. The reverse
//! steps provided are the stochastic ancestral step (lower-bound posterior
//! variance, deterministic at t = 0) and the deterministic η = 0 step.

use crate::error::{Error, Result};
use crate::grid::{check_same_shape, LatentGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// beta linearly spaced between the endpoints.
    Linear,
    /// sqrt(beta) linearly spaced between sqrt of the endpoints.
    ScaledLinear,
}

/// Precomputed β/α/ᾱ tables for a T-step diffusion.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    #[inline]
    pub fn t_count(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    #[inline]
    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t]
    }

    #[inline]
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    #[inline]
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// ᾱ at a signed timestep, with ᾱ_{−1} = 1 (the fully clean boundary).
    #[inline]
    pub fn alpha_bar_at(&self, t: i64) -> f64 {
        if t < 0 {
            1.0
        } else {
            self.alpha_bar[t as usize]
        }
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t >= self.t_count() {
            return Err(Error::IndexOutOfRange(format!(
                "timestep {t} outside [0, {})",
                self.t_count()
            )));
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn from_raw_tables(beta: Vec<f64>, alpha: Vec<f64>, alpha_bar: Vec<f64>) -> Self {
        Self {
            kind: ScheduleKind::Linear,
            beta,
            alpha,
            alpha_bar,
        }
    }
}

pub fn build_schedule(
    kind: ScheduleKind,
    t_count: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule> {
    if t_count < 1 {
        return Err(Error::InvalidConfig("schedule needs T >= 1".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start} / {beta_end}"
        )));
    }
    let beta: Vec<f64> = match kind {
        ScheduleKind::Linear => linspace(beta_start, beta_end, t_count),
        ScheduleKind::ScaledLinear => linspace(beta_start.sqrt(), beta_end.sqrt(), t_count)
            .into_iter()
            .map(|b| b * b)
            .collect(),
    };
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(t_count);
    let mut prod = 1.0;
    for &a in &alpha {
        prod *= a;
        alpha_bar.push(prod);
    }
    Ok(NoiseSchedule {
        kind,
        beta,
        alpha,
        alpha_bar,
    })
}

fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// z_t = √ᾱ_t·z_0 + √(1−ᾱ_t)·ε.
pub fn forward_diffuse(
    z0: &LatentGrid,
    t: usize,
    eps: &LatentGrid,
    s: &NoiseSchedule,
) -> Result<LatentGrid> {
    s.check_t(t)?;
    check_same_shape(z0, eps, "forward_diffuse")?;
    let a = s.alpha_bar(t).sqrt();
    let b = (1.0 - s.alpha_bar(t)).sqrt();
    z0.zip_map(eps, |z, e| a * z + b * e)
}

/// ẑ_0 = (z_t − √(1−ᾱ_t)·ε̂) / √ᾱ_t.
pub fn predict_z0(
    zt: &LatentGrid,
    eps_hat: &LatentGrid,
    t: usize,
    s: &NoiseSchedule,
) -> Result<LatentGrid> {
    s.check_t(t)?;
    check_same_shape(zt, eps_hat, "predict_z0")?;
    let a = s.alpha_bar(t).sqrt();
    let b = (1.0 - s.alpha_bar(t)).sqrt();
    zt.zip_map(eps_hat, |z, e| (z - b * e) / a)
}

/// One ancestral step t → t−1:
/// z_{t−1} = (z_t − (β_t/√(1−ᾱ_t))·ε̂)/√α_t + σ_t·ξ,
/// σ_t² = ((1−ᾱ_{t−1})/(1−ᾱ_t))·β_t, so σ_0 = 0 and the last step ignores ξ.
pub fn ddpm_step(
    zt: &LatentGrid,
    eps_hat: &LatentGrid,
    t: usize,
    xi: &LatentGrid,
    s: &NoiseSchedule,
) -> Result<LatentGrid> {
    s.check_t(t)?;
    check_same_shape(zt, eps_hat, "ddpm_step")?;
    check_same_shape(zt, xi, "ddpm_step")?;
    let beta = s.beta(t);
    let abar = s.alpha_bar(t);
    let abar_prev = s.alpha_bar_at(t as i64 - 1);
    let inv_sqrt_alpha = 1.0 / s.alpha(t).sqrt();
    let eps_coef = beta / (1.0 - abar).sqrt();
    let sigma = ((1.0 - abar_prev) / (1.0 - abar) * beta).sqrt();
    let mut out = zt.zip_map(eps_hat, |z, e| inv_sqrt_alpha * (z - eps_coef * e))?;
    if sigma > 0.0 {
        out = out.add_scaled(xi, sigma)?;
    }
    Ok(out)
}

/// Deterministic (η = 0) step t → t_prev:
/// z_{t_prev} = √ᾱ_{t_prev}·ẑ_0 + √(1−ᾱ_{t_prev})·ε̂, with t_prev = −1
/// meaning "return ẑ_0".
pub fn ddim_step(
    zt: &LatentGrid,
    eps_hat: &LatentGrid,
    t: usize,
    t_prev: i64,
    s: &NoiseSchedule,
) -> Result<LatentGrid> {
    s.check_t(t)?;
    if t_prev >= t as i64 {
        return Err(Error::IndexOutOfRange(format!(
            "t_prev {t_prev} must be below t {t}"
        )));
    }
    check_same_shape(zt, eps_hat, "ddim_step")?;
    if t_prev < 0 {
        return predict_z0(zt, eps_hat, t, s);
    }
    let abar = s.alpha_bar(t);
    let abar_prev = s.alpha_bar(t_prev as usize);
    // Written as coefficients on (z_t, ε̂) so the degenerate ᾱ_prev = ᾱ_t
    // case is an exact fixed point in floating point.
    let z_coef = (abar_prev.sqrt()) / abar.sqrt();
    let e_coef = (1.0 - abar_prev).sqrt() - z_coef * (1.0 - abar).sqrt();
    zt.zip_map(eps_hat, |z, e| z_coef * z + e_coef * e)
}
