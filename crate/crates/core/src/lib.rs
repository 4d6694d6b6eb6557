//! Desk-scale latent diffusion engine for garment try-on conditioning.
//!
//! The crate operates directly in latent space on small real-valued grids.
//! A person latent and a garment latent are stacked along the height axis
//! into a "duo" grid; a tiny convolutional denoiser predicts noise for the
//! duo under channel-wise conditioning (noisy duo, inpainting mask, clean
//! condition duo). On top of that sit:
//!
//! * two classifier-free-guidance variants differing in how the
//!   unconditional branch is built (garment latents kept vs. fully removed),
//! * ground-truth injection of the forward-diffused garment latent during
//!   sampling,
//! * an outfit-only training loss with DREAM-style target/input
//!   rectification restricted to the person region,
//! * procedural paired/unpaired scene generation, and
//! * a proxy metric suite (SSIM, Fréchet distance, polynomial-kernel MMD)
//!   over fixed random conv embeddings.
//!
//! Everything is `f64`, deterministic given seeds, and CPU-only.

pub mod denoiser;
pub mod dream;
pub mod error;
pub mod grid;
pub mod guidance;
pub mod metrics;
pub mod rng;
pub mod schedule;
pub mod toydata;
pub mod tryon;

pub use error::{Error, Result};
pub use grid::{DuoGrid, LatentGrid, RegionMask};
pub use schedule::{NoiseSchedule, ScheduleKind};
