//! The trainable toy denoiser.
//!
//! Architecture (fixed): stem 3×3 conv (2C+1 → F), two full-resolution
//! residual blocks [GN → SiLU → conv → +temb-projection → GN → SiLU →
//! conv → +skip], one stride-2 down conv + SiLU, a mid conv + SiLU at
//! half resolution, nearest ×2 upsample + up conv, long skip add, then
//! GN → SiLU → head conv (F → C). The timestep embedding is added
//! uniformly across both spatial regions, so garment rows receive the
//! same t signal as person rows.
//!
//! Parameters live in one flat `f64` buffer with a fixed tensor layout;
//! gradients mirror that buffer exactly. Backprop is hand-derived via an
//! activation [`Tape`]; a version counter on the parameters invalidates
//! tapes recorded before any parameter mutation.

use crate::denoiser::layers::{
    conv3x3_backward, conv3x3_forward, conv_out_dim, groupnorm_backward, groupnorm_forward,
    silu_backward, silu_forward, upsample2_backward, upsample2_forward, GnStats,
};
use crate::denoiser::{timestep_embedding, DenoiserInputSpec};
use crate::error::{Error, Result};
use crate::grid::{DuoGrid, LatentGrid};
use crate::guidance::ModelInput;
use crate::rng::StreamKey;

/// Largest divisor of `f` that is at most 8.
pub fn gn_groups(f: usize) -> usize {
    (1..=8.min(f)).rev().find(|g| f % g == 0).unwrap_or(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    pub latent_channels: usize,
    pub features: usize,
    pub temb_dim: usize,
    pub t_count: usize,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_channels == 0 || self.features == 0 || self.t_count == 0 {
            return Err(Error::InvalidConfig(
                "latent_channels, features, and t_count must be positive".into(),
            ));
        }
        if self.temb_dim == 0 || self.temb_dim % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "temb_dim must be even and positive, got {}",
                self.temb_dim
            )));
        }
        Ok(())
    }

    pub fn in_channels(&self) -> usize {
        2 * self.latent_channels + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TensorKind {
    ConvWeight { fan_in: usize },
    LinWeight { fan_in: usize },
    Bias,
    Gamma,
    /// Zero-initialized output layer weight.
    HeadWeight,
}

#[derive(Debug, Clone)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
    kind: TensorKind,
}

// Fixed tensor order; indices below address into the spec list.
const T_STEM_W: usize = 0;
const T_STEM_B: usize = 1;
// per residual block r (0-based): base = 2 + r*10, entries
// gn1.g, gn1.b, conv1.w, conv1.b, temb.w, temb.b, gn2.g, gn2.b, conv2.w, conv2.b
const T_RES_BASE: usize = 2;
const T_RES_STRIDE: usize = 10;
const T_DOWN_W: usize = 22;
const T_DOWN_B: usize = 23;
const T_MID_W: usize = 24;
const T_MID_B: usize = 25;
const T_UP_W: usize = 26;
const T_UP_B: usize = 27;
const T_HEAD_GN_G: usize = 28;
const T_HEAD_GN_B: usize = 29;
const T_HEAD_W: usize = 30;
const T_HEAD_B: usize = 31;

fn build_specs(cfg: &NetConfig) -> Vec<TensorSpec> {
    let c = cfg.latent_channels;
    let f = cfg.features;
    let td = cfg.temb_dim;
    let mut specs = Vec::with_capacity(32);
    let mut offset = 0usize;
    let mut push = |name: String, shape: Vec<usize>, kind: TensorKind| {
        let len: usize = shape.iter().product();
        specs.push(TensorSpec {
            name,
            shape,
            offset,
            len,
            kind,
        });
        offset += len;
    };
    push(
        "stem.w".into(),
        vec![f, 2 * c + 1, 3, 3],
        TensorKind::ConvWeight {
            fan_in: 9 * (2 * c + 1),
        },
    );
    push("stem.b".into(), vec![f], TensorKind::Bias);
    for r in 1..=2 {
        push(format!("res{r}.gn1.g"), vec![f], TensorKind::Gamma);
        push(format!("res{r}.gn1.b"), vec![f], TensorKind::Bias);
        push(
            format!("res{r}.conv1.w"),
            vec![f, f, 3, 3],
            TensorKind::ConvWeight { fan_in: 9 * f },
        );
        push(format!("res{r}.conv1.b"), vec![f], TensorKind::Bias);
        push(
            format!("res{r}.temb.w"),
            vec![f, td],
            TensorKind::LinWeight { fan_in: td },
        );
        push(format!("res{r}.temb.b"), vec![f], TensorKind::Bias);
        push(format!("res{r}.gn2.g"), vec![f], TensorKind::Gamma);
        push(format!("res{r}.gn2.b"), vec![f], TensorKind::Bias);
        push(
            format!("res{r}.conv2.w"),
            vec![f, f, 3, 3],
            TensorKind::ConvWeight { fan_in: 9 * f },
        );
        push(format!("res{r}.conv2.b"), vec![f], TensorKind::Bias);
    }
    for name in ["down", "mid", "up"] {
        push(
            format!("{name}.w"),
            vec![f, f, 3, 3],
            TensorKind::ConvWeight { fan_in: 9 * f },
        );
        push(format!("{name}.b"), vec![f], TensorKind::Bias);
    }
    push("head_gn.g".into(), vec![f], TensorKind::Gamma);
    push("head_gn.b".into(), vec![f], TensorKind::Bias);
    push("head.w".into(), vec![c, f, 3, 3], TensorKind::HeadWeight);
    push("head.b".into(), vec![c], TensorKind::Bias);
    specs
}

/// Flat parameter buffer plus the tensor layout registry.
#[derive(Debug, Clone)]
pub struct TinyUNetParams {
    cfg: NetConfig,
    specs: Vec<TensorSpec>,
    data: Vec<f64>,
    version: u64,
}

impl TinyUNetParams {
    pub fn zeros(cfg: NetConfig) -> Result<Self> {
        cfg.validate()?;
        let specs = build_specs(&cfg);
        let n = specs.last().map(|s| s.offset + s.len).unwrap_or(0);
        Ok(Self {
            cfg,
            specs,
            data: vec![0.0; n],
            version: 0,
        })
    }

    /// Seeded init: conv/linear weights ~ N(0, 1/fan_in), γ = 1, biases and
    /// the head conv weight = 0 (the fresh net predicts exactly zero noise).
    pub fn init(cfg: NetConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(cfg)?;
        let mut rng = StreamKey::root(seed).child(0x70_61_72_61, 0).stream();
        for spec in &p.specs {
            let scale = match spec.kind {
                TensorKind::ConvWeight { fan_in } | TensorKind::LinWeight { fan_in } => {
                    Some(1.0 / (fan_in as f64).sqrt())
                }
                TensorKind::Gamma => None, // set to 1 below
                TensorKind::Bias | TensorKind::HeadWeight => continue,
            };
            let range = spec.offset..spec.offset + spec.len;
            match scale {
                Some(s) => {
                    for v in &mut p.data[range] {
                        *v = rng.normal() * s;
                    }
                }
                None => {
                    for v in &mut p.data[range] {
                        *v = 1.0;
                    }
                }
            }
        }
        Ok(p)
    }

    /// Rebuild from a raw buffer (checkpoint loading).
    pub fn from_flat(cfg: NetConfig, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(cfg)?;
        if data.len() != p.data.len() {
            return Err(Error::ShapeMismatch {
                context: "TinyUNetParams::from_flat",
                expected: format!("{} parameters", p.data.len()),
                got: format!("{}", data.len()),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite parameter {bad}")));
        }
        p.data = data;
        Ok(p)
    }

    #[inline]
    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access; invalidates every tape recorded so far.
    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.data
    }

    #[inline]
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tensor_specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    #[inline]
    fn t(&self, i: usize) -> &[f64] {
        let s = &self.specs[i];
        &self.data[s.offset..s.offset + s.len]
    }

    /// Full forward pass; returns the C-channel duo prediction and the
    /// activation tape for a matching [`TinyUNetParams::backward`] call.
    pub fn forward(&self, x: &ModelInput, t: usize) -> Result<(DuoGrid, Tape)> {
        let c = self.cfg.latent_channels;
        let f = self.cfg.features;
        if x.latent_channels() != c {
            return Err(Error::ShapeMismatch {
                context: "TinyUNet forward",
                expected: format!("{c} latent channels"),
                got: format!("{}", x.latent_channels()),
            });
        }
        let h = 2 * x.region_height();
        let w = x.width();
        if w % 2 != 0 || x.region_height() == 0 {
            return Err(Error::ShapeMismatch {
                context: "TinyUNet forward",
                expected: "even width and positive region height".into(),
                got: format!("{}x{w}", x.region_height()),
            });
        }
        let temb = timestep_embedding(t, self.cfg.temb_dim, self.cfg.t_count)?;
        let groups = gn_groups(f);
        let spatial = h * w;
        let hh = conv_out_dim(h, 2);
        let hw = conv_out_dim(w, 2);
        let half = hh * hw;

        let xin = x.grid().data().to_vec();
        let mut h0 = vec![0.0; f * spatial];
        conv3x3_forward(
            &xin,
            2 * c + 1,
            h,
            w,
            self.t(T_STEM_W),
            self.t(T_STEM_B),
            f,
            1,
            &mut h0,
        );

        let mut res_tapes = Vec::with_capacity(2);
        let mut cur = h0.clone();
        for r in 0..2 {
            let base = T_RES_BASE + r * T_RES_STRIDE;
            let hin = cur;
            let mut gn1_out = vec![0.0; f * spatial];
            let gn1 = groupnorm_forward(
                &hin,
                f,
                spatial,
                self.t(base),
                self.t(base + 1),
                groups,
                &mut gn1_out,
            );
            let mut act1 = vec![0.0; f * spatial];
            silu_forward(&gn1_out, &mut act1);
            let mut c1t = vec![0.0; f * spatial];
            conv3x3_forward(
                &act1,
                f,
                h,
                w,
                self.t(base + 2),
                self.t(base + 3),
                f,
                1,
                &mut c1t,
            );
            // additive timestep projection, broadcast per channel
            let tw = self.t(base + 4);
            let tb = self.t(base + 5);
            for fc in 0..f {
                let mut proj = tb[fc];
                for (d, &te) in temb.iter().enumerate() {
                    proj += tw[fc * self.cfg.temb_dim + d] * te;
                }
                for p in 0..spatial {
                    c1t[fc * spatial + p] += proj;
                }
            }
            let mut gn2_out = vec![0.0; f * spatial];
            let gn2 = groupnorm_forward(
                &c1t,
                f,
                spatial,
                self.t(base + 6),
                self.t(base + 7),
                groups,
                &mut gn2_out,
            );
            let mut act2 = vec![0.0; f * spatial];
            silu_forward(&gn2_out, &mut act2);
            let mut c2 = vec![0.0; f * spatial];
            conv3x3_forward(
                &act2,
                f,
                h,
                w,
                self.t(base + 8),
                self.t(base + 9),
                f,
                1,
                &mut c2,
            );
            let mut hout = hin.clone();
            for (o, &v) in hout.iter_mut().zip(&c2) {
                *o += v;
            }
            res_tapes.push(ResTape {
                hin,
                gn1,
                gn1_out,
                act1,
                c1t,
                gn2,
                gn2_out,
                act2,
            });
            cur = hout;
        }
        let h2 = cur;

        let mut d0pre = vec![0.0; f * half];
        conv3x3_forward(
            &h2,
            f,
            h,
            w,
            self.t(T_DOWN_W),
            self.t(T_DOWN_B),
            f,
            2,
            &mut d0pre,
        );
        let mut d0 = vec![0.0; f * half];
        silu_forward(&d0pre, &mut d0);
        let mut m0pre = vec![0.0; f * half];
        conv3x3_forward(
            &d0,
            f,
            hh,
            hw,
            self.t(T_MID_W),
            self.t(T_MID_B),
            f,
            1,
            &mut m0pre,
        );
        let mut m0 = vec![0.0; f * half];
        silu_forward(&m0pre, &mut m0);
        let mut u0 = vec![0.0; f * spatial];
        upsample2_forward(&m0, f, hh, hw, &mut u0);
        let mut u1 = vec![0.0; f * spatial];
        conv3x3_forward(
            &u0,
            f,
            h,
            w,
            self.t(T_UP_W),
            self.t(T_UP_B),
            f,
            1,
            &mut u1,
        );
        let mut gsum = h2.clone();
        for (o, &v) in gsum.iter_mut().zip(&u1) {
            *o += v;
        }
        let mut head_gn_out = vec![0.0; f * spatial];
        let head_gn = groupnorm_forward(
            &gsum,
            f,
            spatial,
            self.t(T_HEAD_GN_G),
            self.t(T_HEAD_GN_B),
            groups,
            &mut head_gn_out,
        );
        let mut p_act = vec![0.0; f * spatial];
        silu_forward(&head_gn_out, &mut p_act);
        let mut out = vec![0.0; c * spatial];
        conv3x3_forward(
            &p_act,
            f,
            h,
            w,
            self.t(T_HEAD_W),
            self.t(T_HEAD_B),
            c,
            1,
            &mut out,
        );

        let out_grid = LatentGrid::from_vec(c, h, w, out)?;
        let duo = DuoGrid::new(out_grid, x.region_height())?;
        let tape = Tape {
            version: self.version,
            h,
            w,
            temb,
            x: xin,
            res: res_tapes,
            h2,
            d0pre,
            d0,
            m0pre,
            u0,
            gsum,
            head_gn,
            head_gn_out,
            p_act,
        };
        Ok((duo, tape))
    }

    /// Backprop through the recorded tape; returns a flat gradient buffer
    /// mirroring the parameter layout.
    pub fn backward(&self, tape: &Tape, out_grad: &DuoGrid) -> Result<Vec<f64>> {
        if tape.version != self.version {
            return Err(Error::StaleTape);
        }
        let c = self.cfg.latent_channels;
        let f = self.cfg.features;
        let (h, w) = (tape.h, tape.w);
        if out_grad.grid().shape() != (c, h, w) {
            return Err(Error::ShapeMismatch {
                context: "TinyUNet backward",
                expected: format!("{:?}", (c, h, w)),
                got: format!("{:?}", out_grad.grid().shape()),
            });
        }
        let groups = gn_groups(f);
        let spatial = h * w;
        let hh = conv_out_dim(h, 2);
        let hw = conv_out_dim(w, 2);
        let mut grads = vec![0.0; self.data.len()];

        // head conv
        let mut d_p = vec![0.0; f * spatial];
        {
            let s_w = &self.specs[T_HEAD_W];
            let s_b = &self.specs[T_HEAD_B];
            let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
            conv3x3_backward(
                &tape.p_act,
                f,
                h,
                w,
                self.t(T_HEAD_W),
                c,
                1,
                out_grad.grid().data(),
                &mut d_p,
                dw,
                db,
            );
        }
        // head SiLU + GN
        let mut d_gn_out = vec![0.0; f * spatial];
        silu_backward(&tape.head_gn_out, &d_p, &mut d_gn_out);
        let mut d_gsum = vec![0.0; f * spatial];
        {
            let s_g = &self.specs[T_HEAD_GN_G];
            let s_b = &self.specs[T_HEAD_GN_B];
            let (dg, db) = two_slices(&mut grads, s_g.offset, s_g.len, s_b.offset, s_b.len);
            groupnorm_backward(
                &tape.gsum,
                f,
                spatial,
                self.t(T_HEAD_GN_G),
                groups,
                &tape.head_gn,
                &d_gn_out,
                &mut d_gsum,
                dg,
                db,
            );
        }
        // long skip: gsum = h2 + u1
        let mut d_h2 = d_gsum.clone();
        // up conv
        let mut d_u0 = vec![0.0; f * spatial];
        {
            let s_w = &self.specs[T_UP_W];
            let s_b = &self.specs[T_UP_B];
            let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
            conv3x3_backward(
                &tape.u0,
                f,
                h,
                w,
                self.t(T_UP_W),
                f,
                1,
                &d_gsum,
                &mut d_u0,
                dw,
                db,
            );
        }
        // upsample
        let mut d_m0 = vec![0.0; f * hh * hw];
        upsample2_backward(&d_u0, f, hh, hw, &mut d_m0);
        // mid SiLU + conv
        let mut d_m0pre = vec![0.0; f * hh * hw];
        silu_backward(&tape.m0pre, &d_m0, &mut d_m0pre);
        let mut d_d0 = vec![0.0; f * hh * hw];
        {
            let s_w = &self.specs[T_MID_W];
            let s_b = &self.specs[T_MID_B];
            let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
            conv3x3_backward(
                &tape.d0,
                f,
                hh,
                hw,
                self.t(T_MID_W),
                f,
                1,
                &d_m0pre,
                &mut d_d0,
                dw,
                db,
            );
        }
        // down SiLU + strided conv (accumulates into d_h2 alongside the skip)
        let mut d_d0pre = vec![0.0; f * hh * hw];
        silu_backward(&tape.d0pre, &d_d0, &mut d_d0pre);
        {
            let s_w = &self.specs[T_DOWN_W];
            let s_b = &self.specs[T_DOWN_B];
            let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
            conv3x3_backward(
                &tape.h2,
                f,
                h,
                w,
                self.t(T_DOWN_W),
                f,
                2,
                &d_d0pre,
                &mut d_h2,
                dw,
                db,
            );
        }
        // residual blocks, reverse order
        let mut d_cur = d_h2;
        for r in (0..2).rev() {
            let base = T_RES_BASE + r * T_RES_STRIDE;
            let rt = &tape.res[r];
            // hout = hin + conv2(act2)
            let mut d_act2 = vec![0.0; f * spatial];
            {
                let s_w = &self.specs[base + 8];
                let s_b = &self.specs[base + 9];
                let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
                conv3x3_backward(
                    &rt.act2,
                    f,
                    h,
                    w,
                    self.t(base + 8),
                    f,
                    1,
                    &d_cur,
                    &mut d_act2,
                    dw,
                    db,
                );
            }
            let mut d_gn2_out = vec![0.0; f * spatial];
            silu_backward(&rt.gn2_out, &d_act2, &mut d_gn2_out);
            let mut d_c1t = vec![0.0; f * spatial];
            {
                let s_g = &self.specs[base + 6];
                let s_b = &self.specs[base + 7];
                let (dg, db) = two_slices(&mut grads, s_g.offset, s_g.len, s_b.offset, s_b.len);
                groupnorm_backward(
                    &rt.c1t,
                    f,
                    spatial,
                    self.t(base + 6),
                    groups,
                    &rt.gn2,
                    &d_gn2_out,
                    &mut d_c1t,
                    dg,
                    db,
                );
            }
            // timestep projection: per-channel sum of d_c1t
            {
                let td = self.cfg.temb_dim;
                let s_w = &self.specs[base + 4];
                let s_b = &self.specs[base + 5];
                let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
                for fc in 0..f {
                    let dsum: f64 = d_c1t[fc * spatial..(fc + 1) * spatial].iter().sum();
                    db[fc] += dsum;
                    for (d, &te) in tape.temb.iter().enumerate() {
                        dw[fc * td + d] += dsum * te;
                    }
                }
            }
            let mut d_act1 = vec![0.0; f * spatial];
            {
                let s_w = &self.specs[base + 2];
                let s_b = &self.specs[base + 3];
                let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
                conv3x3_backward(
                    &rt.act1,
                    f,
                    h,
                    w,
                    self.t(base + 2),
                    f,
                    1,
                    &d_c1t,
                    &mut d_act1,
                    dw,
                    db,
                );
            }
            let mut d_gn1_out = vec![0.0; f * spatial];
            silu_backward(&rt.gn1_out, &d_act1, &mut d_gn1_out);
            let mut d_hin = vec![0.0; f * spatial];
            {
                let s_g = &self.specs[base];
                let s_b = &self.specs[base + 1];
                let (dg, db) = two_slices(&mut grads, s_g.offset, s_g.len, s_b.offset, s_b.len);
                groupnorm_backward(
                    &rt.hin,
                    f,
                    spatial,
                    self.t(base),
                    groups,
                    &rt.gn1,
                    &d_gn1_out,
                    &mut d_hin,
                    dg,
                    db,
                );
            }
            // skip path
            for (a, &b) in d_hin.iter_mut().zip(&d_cur) {
                *a += b;
            }
            d_cur = d_hin;
        }
        // stem (input gradient discarded)
        let mut d_x = vec![0.0; (2 * c + 1) * spatial];
        {
            let s_w = &self.specs[T_STEM_W];
            let s_b = &self.specs[T_STEM_B];
            let (dw, db) = two_slices(&mut grads, s_w.offset, s_w.len, s_b.offset, s_b.len);
            conv3x3_backward(
                &tape.x,
                2 * c + 1,
                h,
                w,
                self.t(T_STEM_W),
                f,
                1,
                &d_cur,
                &mut d_x,
                dw,
                db,
            );
        }
        Ok(grads)
    }
}

fn two_slices(
    buf: &mut [f64],
    off_a: usize,
    len_a: usize,
    off_b: usize,
    len_b: usize,
) -> (&mut [f64], &mut [f64]) {
    assert!(off_a + len_a <= off_b, "tensor slices must be disjoint and ordered");
    let (left, right) = buf.split_at_mut(off_b);
    (&mut left[off_a..off_a + len_a], &mut right[..len_b])
}

#[derive(Debug, Clone)]
struct ResTape {
    hin: Vec<f64>,
    gn1: GnStats,
    gn1_out: Vec<f64>,
    act1: Vec<f64>,
    c1t: Vec<f64>,
    gn2: GnStats,
    gn2_out: Vec<f64>,
    act2: Vec<f64>,
}

/// Activations recorded by one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    version: u64,
    h: usize,
    w: usize,
    temb: Vec<f64>,
    x: Vec<f64>,
    res: Vec<ResTape>,
    h2: Vec<f64>,
    d0pre: Vec<f64>,
    d0: Vec<f64>,
    m0pre: Vec<f64>,
    u0: Vec<f64>,
    gsum: Vec<f64>,
    head_gn: GnStats,
    head_gn_out: Vec<f64>,
    p_act: Vec<f64>,
}

/// Exact parameter count and per-forward FLOP count (convolutions only;
/// 2·k²·C_in·C_out·H_out·W_out multiply-adds plus bias adds per conv).
pub fn count_params_flops(params: &TinyUNetParams, spec: &DenoiserInputSpec) -> (u64, u64) {
    let c = params.cfg.latent_channels as u64;
    let f = params.cfg.features as u64;
    let h = 2 * spec.region_height as u64;
    let w = spec.width as u64;
    let hh = conv_out_dim(2 * spec.region_height, 2) as u64;
    let hw = conv_out_dim(spec.width, 2) as u64;
    let conv = |cin: u64, cout: u64, ho: u64, wo: u64| 2 * 9 * cin * cout * ho * wo + cout * ho * wo;
    let mut flops = conv(2 * c + 1, f, h, w); // stem
    flops += 4 * conv(f, f, h, w); // two convs per residual block
    flops += conv(f, f, hh, hw); // down
    flops += conv(f, f, hh, hw); // mid
    flops += conv(f, f, h, w); // up
    flops += conv(f, c, h, w); // head
    (params.data.len() as u64, flops)
}
