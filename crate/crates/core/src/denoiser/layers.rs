//! Layer primitives on raw `f64` slices: 3×3 convolution (stride 1 or 2,
//! zero padding 1), group normalization, SiLU, nearest ×2 upsampling.
//! Each primitive has a hand-derived backward pass; shapes are passed
//! explicitly and trusted by the (crate-internal) callers.

pub(crate) const GN_EPS: f64 = 1e-5;

#[inline]
pub(crate) fn conv_out_dim(dim: usize, stride: usize) -> usize {
    // kernel 3, padding 1
    (dim - 1) / stride + 1
}

/// `out[co, oh, ow] = b[co] + Σ w[co, ci, kh, kw]·in[ci, oh·s−1+kh, ow·s−1+kw]`.
pub(crate) fn conv3x3_forward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    stride: usize,
    out: &mut [f64],
) {
    let ho = conv_out_dim(h, stride);
    let wo = conv_out_dim(w, stride);
    debug_assert_eq!(input.len(), c_in * h * w);
    debug_assert_eq!(weight.len(), c_out * c_in * 9);
    debug_assert_eq!(out.len(), c_out * ho * wo);
    for co in 0..c_out {
        for oh in 0..ho {
            for ow in 0..wo {
                let mut acc = bias[co];
                for ci in 0..c_in {
                    let wbase = (co * c_in + ci) * 9;
                    let ibase = ci * h * w;
                    for kh in 0..3 {
                        let ih = (oh * stride + kh) as isize - 1;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let irow = ibase + ih as usize * w;
                        let wrow = wbase + kh * 3;
                        for kw in 0..3 {
                            let iw = (ow * stride + kw) as isize - 1;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            acc += weight[wrow + kw] * input[irow + iw as usize];
                        }
                    }
                }
                out[(co * ho + oh) * wo + ow] = acc;
            }
        }
    }
}

/// Accumulates into `d_input`, `d_weight`, `d_bias` (callers zero or chain).
pub(crate) fn conv3x3_backward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    c_out: usize,
    stride: usize,
    d_out: &[f64],
    d_input: &mut [f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
) {
    let ho = conv_out_dim(h, stride);
    let wo = conv_out_dim(w, stride);
    debug_assert_eq!(d_out.len(), c_out * ho * wo);
    for co in 0..c_out {
        for oh in 0..ho {
            for ow in 0..wo {
                let g = d_out[(co * ho + oh) * wo + ow];
                if g == 0.0 {
                    continue;
                }
                d_bias[co] += g;
                for ci in 0..c_in {
                    let wbase = (co * c_in + ci) * 9;
                    let ibase = ci * h * w;
                    for kh in 0..3 {
                        let ih = (oh * stride + kh) as isize - 1;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        let irow = ibase + ih as usize * w;
                        let wrow = wbase + kh * 3;
                        for kw in 0..3 {
                            let iw = (ow * stride + kw) as isize - 1;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            d_weight[wrow + kw] += g * input[irow + iw as usize];
                            d_input[irow + iw as usize] += g * weight[wrow + kw];
                        }
                    }
                }
            }
        }
    }
}

/// Per-group mean / inverse-std kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct GnStats {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

/// Normalize over each group of `channels/groups` channels (all spatial
/// positions), then scale/shift per channel: `γ[c]·x̂ + β[c]`.
pub(crate) fn groupnorm_forward(
    input: &[f64],
    channels: usize,
    spatial: usize,
    gamma: &[f64],
    beta: &[f64],
    groups: usize,
    out: &mut [f64],
) -> GnStats {
    debug_assert_eq!(channels % groups, 0);
    let cg = channels / groups;
    let m = cg * spatial;
    let mut stats = GnStats {
        mean: Vec::with_capacity(groups),
        inv_std: Vec::with_capacity(groups),
    };
    for g in 0..groups {
        let base = g * cg * spatial;
        let slice = &input[base..base + m];
        let mean = slice.iter().sum::<f64>() / m as f64;
        let var = slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let inv_std = 1.0 / (var + GN_EPS).sqrt();
        for j in 0..cg {
            let c = g * cg + j;
            let (ga, be) = (gamma[c], beta[c]);
            for p in 0..spatial {
                let i = c * spatial + p;
                out[i] = ga * (input[i] - mean) * inv_std + be;
            }
        }
        stats.mean.push(mean);
        stats.inv_std.push(inv_std);
    }
    stats
}

/// Accumulates into `d_gamma` / `d_beta`; overwrites `d_input`.
pub(crate) fn groupnorm_backward(
    input: &[f64],
    channels: usize,
    spatial: usize,
    gamma: &[f64],
    groups: usize,
    stats: &GnStats,
    d_out: &[f64],
    d_input: &mut [f64],
    d_gamma: &mut [f64],
    d_beta: &mut [f64],
) {
    let cg = channels / groups;
    let m = (cg * spatial) as f64;
    for g in 0..groups {
        let mean = stats.mean[g];
        let inv_std = stats.inv_std[g];
        // Group-level sums over d_x̂ and d_x̂·x̂.
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for j in 0..cg {
            let c = g * cg + j;
            for p in 0..spatial {
                let i = c * spatial + p;
                let xhat = (input[i] - mean) * inv_std;
                let dxhat = d_out[i] * gamma[c];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                d_gamma[c] += d_out[i] * xhat;
                d_beta[c] += d_out[i];
            }
        }
        for j in 0..cg {
            let c = g * cg + j;
            for p in 0..spatial {
                let i = c * spatial + p;
                let xhat = (input[i] - mean) * inv_std;
                let dxhat = d_out[i] * gamma[c];
                d_input[i] =
                    inv_std * (dxhat - sum_dxhat / m - xhat * sum_dxhat_xhat / m);
            }
        }
    }
}

#[inline]
pub(crate) fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn silu_grad(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

pub(crate) fn silu_forward(input: &[f64], out: &mut [f64]) {
    for (o, &x) in out.iter_mut().zip(input) {
        *o = silu(x);
    }
}

pub(crate) fn silu_backward(input: &[f64], d_out: &[f64], d_input: &mut [f64]) {
    for ((d, &x), &g) in d_input.iter_mut().zip(input).zip(d_out) {
        *d = g * silu_grad(x);
    }
}

/// Nearest-neighbor ×2: `out[c, h, w] = in[c, h/2, w/2]`.
pub(crate) fn upsample2_forward(
    input: &[f64],
    channels: usize,
    h: usize,
    w: usize,
    out: &mut [f64],
) {
    for c in 0..channels {
        for oh in 0..2 * h {
            for ow in 0..2 * w {
                out[(c * 2 * h + oh) * 2 * w + ow] = input[(c * h + oh / 2) * w + ow / 2];
            }
        }
    }
}

/// Each input cell collects the gradients of its four children.
pub(crate) fn upsample2_backward(
    d_out: &[f64],
    channels: usize,
    h: usize,
    w: usize,
    d_input: &mut [f64],
) {
    for v in d_input.iter_mut() {
        *v = 0.0;
    }
    for c in 0..channels {
        for oh in 0..2 * h {
            for ow in 0..2 * w {
                d_input[(c * h + oh / 2) * w + ow / 2] += d_out[(c * 2 * h + oh) * 2 * w + ow];
            }
        }
    }
}
