//! Denoiser contract and its two implementations: the trainable
//! [`TinyUNetParams`] and the closed-form [`AnalyticGaussianModel`].

mod analytic;
pub(crate) mod layers;
mod tinyunet;

pub use analytic::{analytic_eps, AnalyticDenoiser, AnalyticGaussianModel};
pub use tinyunet::{count_params_flops, gn_groups, NetConfig, Tape, TensorSpec, TinyUNetParams};

use crate::error::{Error, Result};
use crate::grid::DuoGrid;
use crate::guidance::ModelInput;

/// Shape contract for denoiser inputs: `2C+1` channels over a duo of
/// height `2·region_height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenoiserInputSpec {
    pub latent_channels: usize,
    pub region_height: usize,
    pub width: usize,
}

impl DenoiserInputSpec {
    #[inline]
    pub fn in_channels(&self) -> usize {
        2 * self.latent_channels + 1
    }
}

/// Anything that maps a stacked model input at timestep t to a C-channel
/// duo noise prediction.
pub trait Denoiser {
    fn predict(&self, x: &ModelInput, t: usize) -> Result<DuoGrid>;
}

impl Denoiser for TinyUNetParams {
    fn predict(&self, x: &ModelInput, t: usize) -> Result<DuoGrid> {
        self.forward(x, t).map(|(out, _)| out)
    }
}

/// Sinusoidal timestep embedding: entry 2k = sin(t·ω_k), entry 2k+1 =
/// cos(t·ω_k) with ω_k = 10000^(−2k/dim).
pub fn timestep_embedding(t: usize, dim: usize, t_count: usize) -> Result<Vec<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "embedding dim must be even and positive, got {dim}"
        )));
    }
    if t >= t_count {
        return Err(Error::IndexOutOfRange(format!(
            "timestep {t} outside [0, {t_count})"
        )));
    }
    let mut v = vec![0.0; dim];
    for k in 0..dim / 2 {
        let omega = 10000f64.powf(-2.0 * k as f64 / dim as f64);
        let angle = t as f64 * omega;
        v[2 * k] = angle.sin();
        v[2 * k + 1] = angle.cos();
    }
    Ok(v)
}
