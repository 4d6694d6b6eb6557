//! Fixed random convolutional embedding for distribution metrics.
//!
//! Two bias-free 3×3 convolutions drawn once from the spec's seed (a
//! tanh nonlinearity between them, or none in the linear variant) and a
//! global average pool down to `dim` features. The weights are a pure
//! function of `(seed, input channels, dim)`, so embeddings are
//! reproducible across runs without storing anything.

use crate::denoiser::layers::conv3x3_forward;
use crate::error::{Error, Result};
use crate::grid::LatentGrid;
use crate::rng::StreamKey;

const HIDDEN: usize = 16;
const ROLE_W1: u64 = 0x656d_0001;
const ROLE_W2: u64 = 0x656d_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedKind {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingSpec {
    pub seed: u64,
    pub dim: usize,
    pub kind: EmbedKind,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 64,
            kind: EmbedKind::Tanh,
        }
    }
}

impl EmbeddingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("embedding dim must be >= 1".into()));
        }
        Ok(())
    }
}

fn draw_weights(key: StreamKey, role: u64, c_out: usize, c_in: usize) -> Vec<f64> {
    let scale = (1.0 / (9.0 * c_in as f64)).sqrt();
    let mut st = key.child(role, 0).stream();
    (0..c_out * c_in * 9).map(|_| scale * st.normal()).collect()
}

pub fn embed(g: &LatentGrid, spec: &EmbeddingSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (c, h, w) = g.shape();
    let key = StreamKey::root(spec.seed);
    let w1 = draw_weights(key, ROLE_W1, HIDDEN, c);
    let w2 = draw_weights(key, ROLE_W2, spec.dim, HIDDEN);
    let zeros1 = vec![0.0; HIDDEN];
    let zeros2 = vec![0.0; spec.dim];
    let mut h1 = vec![0.0; HIDDEN * h * w];
    conv3x3_forward(g.data(), c, h, w, &w1, &zeros1, HIDDEN, 1, &mut h1);
    if spec.kind == EmbedKind::Tanh {
        for v in h1.iter_mut() {
            *v = v.tanh();
        }
    }
    let mut h2 = vec![0.0; spec.dim * h * w];
    conv3x3_forward(&h1, HIDDEN, h, w, &w2, &zeros2, spec.dim, 1, &mut h2);
    let plane = (h * w) as f64;
    Ok((0..spec.dim)
        .map(|k| h2[k * h * w..(k + 1) * h * w].iter().sum::<f64>() / plane)
        .collect())
}
