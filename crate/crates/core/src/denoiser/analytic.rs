//! Closed-form oracle denoiser for an isotropic Gaussian data distribution.
//!
//! If z_0 ~ N(μ, s²I) then the posterior-mean noise prediction at
//! timestep t has the closed form
//! ε̂*(z_t) = √(1−ᾱ_t)·(z_t − √ᾱ_t·μ) / (ᾱ_t·s² + 1−ᾱ_t),
//! which minimizes E‖ε − ε̂‖². Used as an exact reference model in
//! sampler and schedule tests.

use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::grid::{check_same_shape, DuoGrid, LatentGrid};
use crate::guidance::ModelInput;
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone)]
pub struct AnalyticGaussianModel {
    mu: LatentGrid,
    s: f64,
}

impl AnalyticGaussianModel {
    pub fn new(mu: LatentGrid, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "analytic model std must be positive and finite, got {s}"
            )));
        }
        Ok(Self { mu, s })
    }

    #[inline]
    pub fn mu(&self) -> &LatentGrid {
        &self.mu
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }
}

/// The optimal ε prediction under the model, elementwise.
pub fn analytic_eps(
    model: &AnalyticGaussianModel,
    zt: &LatentGrid,
    t: usize,
    s: &NoiseSchedule,
) -> Result<LatentGrid> {
    if t >= s.t_count() {
        return Err(Error::IndexOutOfRange(format!(
            "timestep {t} outside [0, {})",
            s.t_count()
        )));
    }
    check_same_shape(zt, &model.mu, "analytic_eps")?;
    let abar = s.alpha_bar(t);
    let num_scale = (1.0 - abar).sqrt();
    let mu_scale = abar.sqrt();
    let denom = abar * model.s * model.s + (1.0 - abar);
    zt.zip_map(&model.mu, |z, m| num_scale * (z - mu_scale * m) / denom)
}

/// [`Denoiser`] adapter: applies [`analytic_eps`] to the noisy duo
/// channels of a stacked input, ignoring mask and condition channels
/// (the model already knows the data distribution). `mu` must be
/// duo-shaped.
#[derive(Debug, Clone)]
pub struct AnalyticDenoiser {
    pub model: AnalyticGaussianModel,
    pub schedule: NoiseSchedule,
}

impl Denoiser for AnalyticDenoiser {
    fn predict(&self, x: &ModelInput, t: usize) -> Result<DuoGrid> {
        let noisy = x.noisy_duo();
        let eps = analytic_eps(&self.model, noisy.grid(), t, &self.schedule)?;
        DuoGrid::new(eps, x.region_height())
    }
}
