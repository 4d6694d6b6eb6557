//! Conditional / unconditional input assembly and classifier-free guidance.
//!
//! The denoiser sees a channel-wise stack over the duo layout: C channels
//! of noisy duo latent, one mask channel (inpaint mask over the person
//! rows, zeros over the garment rows), and C channels of clean condition
//! duo (masked person latent over clean garment latent).
//!
//! Two unconditional variants are provided. `CatVTON` drops only the
//! clean garment from the condition channels, leaving the noisy garment
//! rows in place; `ReCatVTON` removes garment information entirely — its
//! assembly does not even accept a garment argument, so the unconditional
//! branch is garment-independent by construction.

use crate::error::{Error, Result};
use crate::grid::{spatial_concat, DuoGrid, LatentGrid, RegionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditioningVariant {
    CatVTON,
    ReCatVTON,
}

#[derive(Debug, Clone, Copy)]
pub struct GuidanceConfig {
    pub omega: f64,
    pub variant: ConditioningVariant,
}

impl GuidanceConfig {
    pub fn new(omega: f64, variant: ConditioningVariant) -> Result<Self> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "guidance scale must be finite and >= 0, got {omega}"
            )));
        }
        Ok(Self { omega, variant })
    }
}

/// Channel-stacked denoiser input over the duo layout:
/// `[0..C)` noisy duo, `[C]` mask, `[C+1..2C+1)` condition duo.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    grid: LatentGrid,
    latent_channels: usize,
    region_height: usize,
}

impl ModelInput {
    #[inline]
    pub fn grid(&self) -> &LatentGrid {
        &self.grid
    }

    #[inline]
    pub fn latent_channels(&self) -> usize {
        self.latent_channels
    }

    #[inline]
    pub fn region_height(&self) -> usize {
        self.region_height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    /// Copy of the noisy duo channels `[0..C)`.
    pub fn noisy_duo(&self) -> DuoGrid {
        self.channel_slice(0, self.latent_channels)
    }

    /// Copy of the condition duo channels `[C+1..2C+1)`.
    pub fn condition_duo(&self) -> DuoGrid {
        self.channel_slice(self.latent_channels + 1, self.latent_channels)
    }

    /// Copy of the mask channel as a 1×2H×W grid.
    pub fn mask_channel(&self) -> LatentGrid {
        self.channel_slice(self.latent_channels, 1).into_grid()
    }

    fn channel_slice(&self, c0: usize, n: usize) -> DuoGrid {
        let (_, h, w) = self.grid.shape();
        let g = LatentGrid::from_fn(n, h, w, |c, hh, ww| self.grid.get(c0 + c, hh, ww));
        DuoGrid::new(g, self.region_height).expect("duo height by construction")
    }
}

fn check_scene_shapes(
    zt_duo: &DuoGrid,
    mask: &RegionMask,
    zp0_masked: &LatentGrid,
    context: &'static str,
) -> Result<(usize, usize, usize)> {
    let c = zt_duo.channels();
    let h = zt_duo.region_height();
    let w = zt_duo.width();
    if mask.height() != h || mask.width() != w {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("mask {h}x{w}"),
            got: format!("{}x{}", mask.height(), mask.width()),
        });
    }
    if zp0_masked.shape() != (c, h, w) {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("person latent {:?}", (c, h, w)),
            got: format!("{:?}", zp0_masked.shape()),
        });
    }
    Ok((c, h, w))
}

fn stack_channels(
    noisy: &DuoGrid,
    mask: &RegionMask,
    condition: &DuoGrid,
) -> ModelInput {
    let c = noisy.channels();
    let h = noisy.region_height();
    let w = noisy.width();
    let grid = LatentGrid::from_fn(2 * c + 1, 2 * h, w, |ch, hh, ww| {
        if ch < c {
            noisy.grid().get(ch, hh, ww)
        } else if ch == c {
            // person rows carry the inpaint mask; garment rows stay zero
            if hh < h {
                mask.get(hh, ww)
            } else {
                0.0
            }
        } else {
            condition.grid().get(ch - c - 1, hh, ww)
        }
    });
    ModelInput {
        grid,
        latent_channels: c,
        region_height: h,
    }
}

/// Conditional input: noisy duo, mask channel, and condition duo
/// `zp0_masked ⊙ zg0`. `zp0_masked` must already have its inpaint area
/// zeroed (see [`crate::grid::mask_zero_region`]).
pub fn assemble_conditional_input(
    zt_duo: &DuoGrid,
    mask: &RegionMask,
    zp0_masked: &LatentGrid,
    zg0: &LatentGrid,
) -> Result<ModelInput> {
    let (c, h, w) = check_scene_shapes(zt_duo, mask, zp0_masked, "assemble_conditional_input")?;
    if zg0.shape() != (c, h, w) {
        return Err(Error::ShapeMismatch {
            context: "assemble_conditional_input",
            expected: format!("garment latent {:?}", (c, h, w)),
            got: format!("{:?}", zg0.shape()),
        });
    }
    let condition = spatial_concat(zp0_masked, zg0)?;
    Ok(stack_channels(zt_duo, mask, &condition))
}

/// Unconditional input for either variant. `CatVTON` zeroes only the
/// condition-garment rows; `ReCatVTON` zeroes the noisy-garment rows too.
/// No garment latent is accepted here, so the `ReCatVTON` branch cannot
/// depend on garment information at all.
pub fn assemble_unconditional_input(
    variant: ConditioningVariant,
    zt_duo: &DuoGrid,
    mask: &RegionMask,
    zp0_masked: &LatentGrid,
) -> Result<ModelInput> {
    let (c, h, w) =
        check_scene_shapes(zt_duo, mask, zp0_masked, "assemble_unconditional_input")?;
    let zero_region = LatentGrid::zeros(c, h, w);
    let condition = spatial_concat(zp0_masked, &zero_region)?;
    let noisy = match variant {
        ConditioningVariant::CatVTON => zt_duo.clone(),
        ConditioningVariant::ReCatVTON => {
            let mut duo = zt_duo.clone();
            duo.set_garment_rows(&zero_region)?;
            duo
        }
    };
    Ok(stack_channels(&noisy, mask, &condition))
}

/// ε̂ = ε_u + ω·(ε_c − ε_u), elementwise over the full duo.
pub fn cfg_combine(eps_cond: &DuoGrid, eps_uncond: &DuoGrid, omega: f64) -> Result<DuoGrid> {
    if !omega.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "guidance scale must be finite, got {omega}"
        )));
    }
    if eps_cond.region_height() != eps_uncond.region_height() {
        return Err(Error::ShapeMismatch {
            context: "cfg_combine",
            expected: format!("region height {}", eps_cond.region_height()),
            got: format!("{}", eps_uncond.region_height()),
        });
    }
    // (1−ω)·ε_u + ω·ε_c: same affine map as ε_u + ω(ε_c − ε_u), but exact
    // at the ω = 0 and ω = 1 endpoints.
    let combined = eps_uncond
        .grid()
        .zip_map(eps_cond.grid(), |u, c| (1.0 - omega) * u + omega * c)?;
    DuoGrid::new(combined, eps_cond.region_height())
}
