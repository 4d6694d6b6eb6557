//! Outfit-only training with noise rectification.
//!
//! Each training sample diffuses the clean duo to a uniformly drawn
//! timestep, optionally rectifies the person rows using a frozen copy of
//! the current model, and regresses the prediction against the rectified
//! noise on the person region only — garment rows carry exactly zero
//! loss gradient. With `lambda = 0` or `outfit_only = false` the
//! machinery degenerates to plain ε-regression (person-only or full-duo
//! respectively) and the frozen pass is skipped.
//!
//! All draws (timestep, noise, conditioning dropout, batch selection by
//! the caller) come from counter-based streams keyed by
//! `(seed, step, sample, role)`, so a run can be replayed or resumed
//! from any step with bit-identical results.

use crate::denoiser::{Denoiser, Tape, TinyUNetParams};
use crate::error::{Error, Result};
use crate::grid::{spatial_concat, split_regions, DuoGrid, LatentGrid, RegionMask};
use crate::guidance::{
    assemble_conditional_input, assemble_unconditional_input, ConditioningVariant, ModelInput,
};
use crate::rng::{Stream, StreamKey};
use crate::schedule::{forward_diffuse, NoiseSchedule};
use crate::toydata::ToyScene;

const ADAM_EPS: f64 = 1e-8;

pub(crate) const ROLE_STEP: u64 = 0x6472_0001;
pub(crate) const ROLE_SAMPLE: u64 = 0x6472_0002;
pub(crate) const ROLE_T: u64 = 0x6472_0003;
pub(crate) const ROLE_EPS: u64 = 0x6472_0004;
pub(crate) const ROLE_DROP: u64 = 0x6472_0005;

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    /// Rectification strength; `0` disables the frozen pass entirely.
    pub lambda: f64,
    /// Restrict the loss to person rows (garment rows get zero gradient).
    /// When `false` the target is plain noise over the full duo and
    /// rectification is skipped.
    pub outfit_only: bool,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub grad_clip_norm: f64,
    /// Micro-batch size; one optimizer step consumes
    /// `batch_size · grad_accum` samples.
    pub batch_size: usize,
    pub grad_accum: usize,
    pub steps: usize,
    /// Probability of assembling the unconditional input for a sample.
    pub dropout_p: f64,
    pub variant: ConditioningVariant,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            outfit_only: true,
            lr: 1e-5,
            weight_decay: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            grad_clip_norm: 1.0,
            batch_size: 8,
            grad_accum: 2,
            steps: 2000,
            dropout_p: 0.1,
            variant: ConditioningVariant::ReCatVTON,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.into()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be finite and > 0");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.grad_clip_norm.is_finite() && self.grad_clip_norm > 0.0) {
            return bad("grad_clip_norm must be finite and > 0");
        }
        if self.batch_size == 0 || self.grad_accum == 0 {
            return bad("batch_size and grad_accum must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.dropout_p) {
            return bad("dropout_p must lie in [0, 1]");
        }
        Ok(())
    }

    /// Samples consumed by one optimizer step.
    pub fn samples_per_step(&self) -> usize {
        self.batch_size * self.grad_accum
    }
}

/// Rectification weight ω_t(λ) = (1 − ᾱ_t)^{λ/2}.
pub fn omega_t(lambda: f64, t: usize, s: &NoiseSchedule) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - s.alpha_bar(t)).powf(lambda / 2.0))
}

/// Person-region regression target ε̄ + w·(ε̄ − ε_sg).
pub fn dream_target(
    eps_bar_p: &LatentGrid,
    eps_sg_p: &LatentGrid,
    w: f64,
) -> Result<LatentGrid> {
    eps_bar_p.zip_map(eps_sg_p, |eb, es| eb + w * (eb - es))
}

/// Rectified input: person rows become z̄ + √(1−ᾱ_t)·w·(ε̄ − ε_sg);
/// garment rows are copied from z̄ bit-for-bit.
pub fn rectify_input(
    z_bar: &DuoGrid,
    eps_bar: &DuoGrid,
    eps_sg: &DuoGrid,
    w: f64,
    t: usize,
    s: &NoiseSchedule,
) -> Result<DuoGrid> {
    let scale = (1.0 - s.alpha_bar(t)).sqrt() * w;
    let (zb_p, _) = split_regions(z_bar);
    let (eb_p, _) = split_regions(eps_bar);
    let (es_p, _) = split_regions(eps_sg);
    let delta = eb_p.zip_map(&es_p, |eb, es| eb - es)?;
    let person = zb_p.add_scaled(&delta, scale)?;
    let mut out = z_bar.clone();
    out.set_person_rows(&person)?;
    Ok(out)
}

/// Per-step training telemetry. For a batch, `person_mse` and
/// `omega_t_value` are means over its samples and `t_sampled` is the
/// first sample's draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub person_mse: f64,
    pub omega_t_value: f64,
    pub t_sampled: usize,
}

/// Mean squared error on person rows only, with the gradient w.r.t. the
/// prediction: 2·(pred − target)/N on person rows, exact zeros on every
/// garment row.
pub fn outfit_only_loss(
    eps_pred: &DuoGrid,
    dream_target_p: &LatentGrid,
) -> Result<(f64, DuoGrid)> {
    let (pred_p, _) = split_regions(eps_pred);
    let (c, h, w) = pred_p.shape();
    if dream_target_p.shape() != (c, h, w) {
        return Err(Error::ShapeMismatch {
            context: "outfit_only_loss",
            expected: format!("{:?}", (c, h, w)),
            got: format!("{:?}", dream_target_p.shape()),
        });
    }
    let n = (c * h * w) as f64;
    let mse = pred_p
        .data()
        .iter()
        .zip(dream_target_p.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let grad_p = pred_p.zip_map(dream_target_p, |p, t| 2.0 * (p - t) / n)?;
    let mut grad = DuoGrid::new(LatentGrid::zeros(c, 2 * h, w), h)?;
    grad.set_person_rows(&grad_p)?;
    Ok((mse, grad))
}

/// Mean squared error over the whole duo, with its prediction gradient.
pub fn full_duo_loss(eps_pred: &DuoGrid, target: &DuoGrid) -> Result<(f64, DuoGrid)> {
    let pred = eps_pred.grid();
    let tgt = target.grid();
    let (c, h, w) = pred.shape();
    if tgt.shape() != (c, h, w) {
        return Err(Error::ShapeMismatch {
            context: "full_duo_loss",
            expected: format!("{:?}", (c, h, w)),
            got: format!("{:?}", tgt.shape()),
        });
    }
    let n = (c * h * w) as f64;
    let mse = pred
        .data()
        .iter()
        .zip(tgt.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let grad = pred.zip_map(tgt, |p, t| 2.0 * (p - t) / n)?;
    Ok((mse, DuoGrid::new(grad, eps_pred.region_height())?))
}

fn assemble_branch(
    uncond: bool,
    variant: ConditioningVariant,
    zt_duo: &DuoGrid,
    mask: &RegionMask,
    zp0_masked: &LatentGrid,
    zg0: &LatentGrid,
) -> Result<ModelInput> {
    if uncond {
        assemble_unconditional_input(variant, zt_duo, mask, zp0_masked)
    } else {
        assemble_conditional_input(zt_duo, mask, zp0_masked, zg0)
    }
}

/// Draw once from `stream`; with probability `p` assemble the
/// unconditional input, otherwise the conditional one.
pub fn cond_dropout(
    stream: &mut Stream,
    p: f64,
    variant: ConditioningVariant,
    zt_duo: &DuoGrid,
    mask: &RegionMask,
    zp0_masked: &LatentGrid,
    zg0: &LatentGrid,
) -> Result<ModelInput> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "dropout probability must lie in [0, 1], got {p}"
        )));
    }
    let uncond = stream.uniform() < p;
    assemble_branch(uncond, variant, zt_duo, mask, zp0_masked, zg0)
}

/// AdamW moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamWState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    /// Rebuild from persisted buffers.
    pub fn from_parts(m: Vec<f64>, v: Vec<f64>, step: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::ShapeMismatch {
                context: "AdamWState::from_parts",
                expected: format!("{} second moments", m.len()),
                got: format!("{}", v.len()),
            });
        }
        if m.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite optimizer state".into()));
        }
        Ok(Self { m, v, step })
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Decoupled-weight-decay Adam update:
/// θ ← θ − lr·(m̂/(√v̂ + 1e−8) + wd·θ).
pub fn adamw_step(
    params: &mut TinyUNetParams,
    state: &mut AdamWState,
    grads: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    let n = params.data().len();
    if grads.len() != n || state.m.len() != n {
        return Err(Error::ShapeMismatch {
            context: "adamw_step",
            expected: format!("{n} gradients/moments"),
            got: format!("{} grads, {} moments", grads.len(), state.m.len()),
        });
    }
    state.step += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.step as i32);
    let data = params.data_mut();
    for i in 0..n {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        data[i] -= cfg.lr * (m_hat / (v_hat.sqrt() + ADAM_EPS) + cfg.weight_decay * data[i]);
    }
    Ok(())
}

/// Scale `grads` in place so their L2 norm is at most `max_norm`;
/// returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> Result<f64> {
    if !(max_norm.is_finite() && max_norm > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "max_norm must be finite and > 0, got {max_norm}"
        )));
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    Ok(norm)
}

enum SampleTarget {
    Person(LatentGrid),
    FullDuo(DuoGrid),
}

struct PreparedSample {
    t: usize,
    input: ModelInput,
    target: SampleTarget,
    omega_t_value: f64,
}

/// Everything downstream of the frozen pass for one sample; reusing a
/// prepared sample across parameter perturbations is exactly the
/// stop-gradient semantics of the rectification.
fn prepare_sample(
    frozen: &TinyUNetParams,
    scene: &ToyScene,
    key: &StreamKey,
    cfg: &TrainConfig,
    s: &NoiseSchedule,
) -> Result<PreparedSample> {
    let (c, h, w) = scene.person_full().shape();
    let t = key.child(ROLE_T, 0).stream().index(s.t_count() as u64) as usize;
    let eps_bar = DuoGrid::new(key.child(ROLE_EPS, 0).stream().normal_grid(c, 2 * h, w), h)?;
    let z0 = spatial_concat(scene.person_full(), scene.garment())?;
    let z_bar = DuoGrid::new(forward_diffuse(z0.grid(), t, eps_bar.grid(), s)?, h)?;
    let uncond = key.child(ROLE_DROP, 0).stream().uniform() < cfg.dropout_p;
    let assemble = |z: &DuoGrid| {
        assemble_branch(
            uncond,
            cfg.variant,
            z,
            scene.mask(),
            scene.person_masked(),
            scene.garment(),
        )
    };
    let dream_active = cfg.outfit_only && cfg.lambda > 0.0;
    if dream_active {
        // frozen pass sees the un-rectified noisy duo
        let eps_sg = frozen.predict(&assemble(&z_bar)?, t)?;
        let w_t = omega_t(cfg.lambda, t, s)?;
        let (eb_p, _) = split_regions(&eps_bar);
        let (es_p, _) = split_regions(&eps_sg);
        let target_p = dream_target(&eb_p, &es_p, w_t)?;
        let z_tilde = rectify_input(&z_bar, &eps_bar, &eps_sg, w_t, t, s)?;
        Ok(PreparedSample {
            t,
            input: assemble(&z_tilde)?,
            target: SampleTarget::Person(target_p),
            omega_t_value: w_t,
        })
    } else {
        let target = if cfg.outfit_only {
            let (eb_p, _) = split_regions(&eps_bar);
            SampleTarget::Person(eb_p)
        } else {
            SampleTarget::FullDuo(eps_bar)
        };
        Ok(PreparedSample {
            t,
            input: assemble(&z_bar)?,
            target,
            omega_t_value: 1.0,
        })
    }
}

fn sample_key(cfg: &TrainConfig, step: u64, i: usize) -> StreamKey {
    StreamKey::root(cfg.seed)
        .child(ROLE_STEP, step)
        .child(ROLE_SAMPLE, i as u64)
}

fn sample_forward(
    params: &TinyUNetParams,
    prep: &PreparedSample,
) -> Result<(f64, DuoGrid, Tape)> {
    let (pred, tape) = params.forward(&prep.input, prep.t)?;
    let (loss, grad) = match &prep.target {
        SampleTarget::Person(tp) => outfit_only_loss(&pred, tp)?,
        SampleTarget::FullDuo(td) => full_duo_loss(&pred, td)?,
    };
    Ok((loss, grad, tape))
}

fn sample_loss_only(params: &TinyUNetParams, prep: &PreparedSample) -> Result<f64> {
    sample_forward(params, prep).map(|(loss, _, _)| loss)
}

/// One optimizer step's diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: LossBreakdown,
    /// Pre-clip L2 norm of the accumulated gradient.
    pub grad_norm: f64,
}

/// One full optimizer step over `batch` (which must hold exactly
/// `batch_size · grad_accum` scenes): per-sample diffusion, optional
/// rectification against a frozen snapshot of the current parameters,
/// micro-batched gradient accumulation, norm clipping, and an AdamW
/// update.
pub fn train_step(
    params: &mut TinyUNetParams,
    opt: &mut AdamWState,
    batch: &[&ToyScene],
    step: u64,
    cfg: &TrainConfig,
    s: &NoiseSchedule,
) -> Result<StepStats> {
    cfg.validate()?;
    let n_total = cfg.samples_per_step();
    if batch.len() != n_total {
        return Err(Error::ShapeMismatch {
            context: "train_step",
            expected: format!("{n_total} scenes (batch_size * grad_accum)"),
            got: format!("{}", batch.len()),
        });
    }
    let frozen = if cfg.outfit_only && cfg.lambda > 0.0 {
        Some(params.clone())
    } else {
        None
    };
    let frozen_ref = frozen.as_ref().unwrap_or(params);
    let mut preps = Vec::with_capacity(n_total);
    for (i, scene) in batch.iter().enumerate() {
        preps.push(prepare_sample(
            frozen_ref,
            scene,
            &sample_key(cfg, step, i),
            cfg,
            s,
        )?);
    }
    let mut grads = vec![0.0; params.data().len()];
    let mut loss_sum = 0.0;
    let mut omega_sum = 0.0;
    let scale = 1.0 / n_total as f64;
    for chunk in preps.chunks(cfg.batch_size) {
        for prep in chunk {
            let (loss, out_grad, tape) = sample_forward(params, prep)?;
            let scaled = DuoGrid::new(out_grad.grid().map(|g| g * scale), out_grad.region_height())?;
            let g = params.backward(&tape, &scaled)?;
            for (acc, gi) in grads.iter_mut().zip(&g) {
                *acc += gi;
            }
            loss_sum += loss;
            omega_sum += prep.omega_t_value;
        }
    }
    let grad_norm = clip_grad_norm(&mut grads, cfg.grad_clip_norm)?;
    adamw_step(params, opt, &grads, cfg)?;
    Ok(StepStats {
        loss: LossBreakdown {
            person_mse: loss_sum * scale,
            omega_t_value: omega_sum * scale,
            t_sampled: preps[0].t,
        },
        grad_norm,
    })
}

/// Mean training loss for the same draws `train_step` would make at
/// `step`, holding the frozen-pass outputs fixed at `frozen`'s
/// parameters. Pure; used by the finite-difference check below.
pub fn batch_loss(
    params: &TinyUNetParams,
    frozen: &TinyUNetParams,
    batch: &[&ToyScene],
    step: u64,
    cfg: &TrainConfig,
    s: &NoiseSchedule,
) -> Result<f64> {
    let mut sum = 0.0;
    for (i, scene) in batch.iter().enumerate() {
        let prep = prepare_sample(frozen, scene, &sample_key(cfg, step, i), cfg, s)?;
        sum += sample_loss_only(params, &prep)?;
    }
    Ok(sum / batch.len() as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub probes: usize,
}

/// Central finite-difference check of the full training-step gradient
/// (frozen pass held constant, pre-clip). Probes `n_probes` parameters
/// spread across the buffer and reports the worst relative error.
pub fn gradcheck_train_step(
    params: &TinyUNetParams,
    batch: &[&ToyScene],
    step: u64,
    cfg: &TrainConfig,
    s: &NoiseSchedule,
    n_probes: usize,
    h: f64,
) -> Result<GradCheckReport> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::InvalidConfig("gradcheck needs a non-empty batch".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidConfig(format!("step size must be > 0, got {h}")));
    }
    let preps: Vec<PreparedSample> = batch
        .iter()
        .enumerate()
        .map(|(i, scene)| prepare_sample(params, scene, &sample_key(cfg, step, i), cfg, s))
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = vec![0.0; params.data().len()];
    for prep in &preps {
        let (_, out_grad, tape) = sample_forward(params, prep)?;
        let scaled = DuoGrid::new(out_grad.grid().map(|g| g * scale), out_grad.region_height())?;
        let g = params.backward(&tape, &scaled)?;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    let n = grads.len();
    let mut probe = StreamKey::root(0x6664_6672).child(step, 0).stream();
    let mut max_rel = 0.0f64;
    let probes = n_probes.min(n);
    let mut work = params.clone();
    for _ in 0..probes {
        let i = probe.index(n as u64) as usize;
        let orig = params.data()[i];
        let loss_at = |val: f64, work: &mut TinyUNetParams| -> Result<f64> {
            work.data_mut()[i] = val;
            let mut sum = 0.0;
            for prep in &preps {
                sum += sample_loss_only(work, prep)?;
            }
            Ok(sum * scale)
        };
        let lp = loss_at(orig + h, &mut work)?;
        let lm = loss_at(orig - h, &mut work)?;
        work.data_mut()[i] = orig;
        let fd = (lp - lm) / (2.0 * h);
        let denom = grads[i].abs().max(fd.abs()).max(1e-6);
        max_rel = max_rel.max((grads[i] - fd).abs() / denom);
    }
    Ok(GradCheckReport {
        max_rel_err: max_rel,
        probes,
    })
}
