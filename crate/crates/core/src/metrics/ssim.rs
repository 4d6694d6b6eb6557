//! Windowed structural similarity over latent grids.
//!
//! 11×11 Gaussian window (σ = 1.5), symmetric edge-inclusive padding,
//! biased windowed moments, stabilizers K1 = 0.01 / K2 = 0.03 scaled by
//! the dynamic range, and the mean taken over the full similarity map
//! (no border crop — desk-scale grids are smaller than the window).
//! Channels are scored independently and averaged.

use crate::error::{Error, Result};
use crate::grid::LatentGrid;

const RADIUS: usize = 5;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn kernel() -> [f64; 2 * RADIUS + 1] {
    let mut k = [0.0; 2 * RADIUS + 1];
    let mut sum = 0.0;
    for (i, slot) in k.iter_mut().enumerate() {
        let x = i as f64 - RADIUS as f64;
        *slot = (-(x * x) / (2.0 * SIGMA * SIGMA)).exp();
        sum += *slot;
    }
    for slot in k.iter_mut() {
        *slot /= sum;
    }
    k
}

/// Edge-inclusive mirror index: …c b a | a b c … c b a | a b c…
fn reflect(mut i: i64, n: i64) -> usize {
    loop {
        if i < 0 {
            i = -1 - i;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable windowed mean of one channel plane.
fn filt(img: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let r = RADIUS as i64;
    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -r..=r {
                acc += k[(d + r) as usize] * img[y * w + reflect(x as i64 + d, w as i64)];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -r..=r {
                acc += k[(d + r) as usize] * rows[reflect(y as i64 + d, h as i64) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

pub fn ssim(x: &LatentGrid, y: &LatentGrid, dynamic_range: f64) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            context: "ssim",
            expected: format!("{:?}", x.shape()),
            got: format!("{:?}", y.shape()),
        });
    }
    if !(dynamic_range.is_finite() && dynamic_range > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "dynamic range must be finite and > 0, got {dynamic_range}"
        )));
    }
    let (c, h, w) = x.shape();
    let k = kernel();
    let c1 = (K1 * dynamic_range) * (K1 * dynamic_range);
    let c2 = (K2 * dynamic_range) * (K2 * dynamic_range);
    let plane = h * w;
    let mut total = 0.0;
    for ch in 0..c {
        let xs = &x.data()[ch * plane..(ch + 1) * plane];
        let ys = &y.data()[ch * plane..(ch + 1) * plane];
        let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a * b).collect();
        let mx = filt(xs, h, w, &k);
        let my = filt(ys, h, w, &k);
        let mxx = filt(&xx, h, w, &k);
        let myy = filt(&yy, h, w, &k);
        let mxy = filt(&xy, h, w, &k);
        let mut acc = 0.0;
        for i in 0..plane {
            let vx = mxx[i] - mx[i] * mx[i];
            let vy = myy[i] - my[i] * my[i];
            let cxy = mxy[i] - mx[i] * my[i];
            let num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
            let den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            acc += num / den;
        }
        total += acc / plane as f64;
    }
    Ok(total / c as f64)
}
