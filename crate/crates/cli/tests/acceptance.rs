//! Acceptance suite: ten checks covering formula fidelity, gradient
//! correctness, region isolation, guidance independence, sampler
//! calibration, injection decoupling, the toy ablation and ω-robustness
//! orderings, metric validity, and end-to-end determinism. One test per
//! criterion; each prints a single `[acceptance] ... PASS/FAIL` line
//! (visible with `--nocapture`) with its measurements and elapsed time.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::Instant;

use recat_core::denoiser::{
    analytic_eps, AnalyticGaussianModel, Denoiser, NetConfig, TinyUNetParams,
};
use recat_core::dream::{
    dream_target, gradcheck_train_step, omega_t, outfit_only_loss, rectify_input, train_step,
    AdamWState, TrainConfig,
};
use recat_core::grid::{spatial_concat, split_regions, DuoGrid, LatentGrid};
use recat_core::guidance::{
    assemble_conditional_input, assemble_unconditional_input, cfg_combine, ConditioningVariant,
    GuidanceConfig,
};
use recat_core::metrics::{
    embed, evaluate, frechet_proxy, kid_poly, ssim, EmbedKind, EmbeddingSpec, EvalMode,
};
use recat_core::rng::StreamKey;
use recat_core::schedule::{
    build_schedule, ddim_step, ddpm_step, forward_diffuse, predict_z0, NoiseSchedule, ScheduleKind,
};
use recat_core::toydata::{gen_dataset, DatasetSplit, GenParams, ToyScene};
use recat_core::tryon::{sample_tryon, GarmentOutputCorrupter, SamplerConfig, SamplerKind};
use tempfile::TempDir;

// ---------------------------------------------------------------- shared

fn verdict(name: &str, ok: bool, detail: &str) {
    let v = if ok { "PASS" } else { "FAIL" };
    println!("[acceptance] {name}: {v} ({detail})");
    assert!(ok, "{name}: {detail}");
}

fn schedule() -> NoiseSchedule {
    build_schedule(ScheduleKind::ScaledLinear, 1000, 8.5e-4, 1.2e-2).unwrap()
}

fn net_config() -> NetConfig {
    NetConfig {
        latent_channels: 4,
        features: 12,
        temb_dim: 16,
        t_count: 1000,
    }
}

/// Ablation models are trained at reduced width so the trained checks
/// fit the single-core time budget; the mechanisms under test do not
/// depend on the feature count.
fn stage_net_config() -> NetConfig {
    NetConfig {
        features: 7,
        ..net_config()
    }
}

fn desk_data() -> &'static DatasetSplit {
    static DATA: OnceLock<DatasetSplit> = OnceLock::new();
    DATA.get_or_init(|| gen_dataset(0, 256, 96, &GenParams::default()).unwrap())
}

fn bits(g: &LatentGrid) -> Vec<u64> {
    g.data().iter().map(|v| v.to_bits()).collect()
}

/// Train one model on the shared dataset with round-robin batches.
fn train_model(
    net_cfg: NetConfig,
    variant: ConditioningVariant,
    outfit_only: bool,
    lambda: f64,
    seed: u64,
    steps: usize,
) -> TinyUNetParams {
    let s = schedule();
    let split = desk_data();
    let cfg = TrainConfig {
        lr: 2e-3,
        lambda,
        outfit_only,
        variant,
        seed,
        steps,
        ..TrainConfig::default()
    };
    let mut net = TinyUNetParams::init(net_cfg, seed).unwrap();
    let mut opt = AdamWState::new(net.data().len());
    let n = cfg.samples_per_step();
    let pool = split.train.len();
    for step in 0..steps as u64 {
        let batch: Vec<&ToyScene> = (0..n)
            .map(|j| &split.train[(step as usize * n + j) % pool])
            .collect();
        train_step(&mut net, &mut opt, &batch, step, &cfg, &s).unwrap();
    }
    net
}

/// A small, briefly-trained conventionally-conditioned model: enough
/// training for a nonzero head and cross-region coupling, cheap to build.
fn quick_net() -> &'static TinyUNetParams {
    static NET: OnceLock<TinyUNetParams> = OnceLock::new();
    NET.get_or_init(|| {
        let nc = NetConfig {
            features: 6,
            ..net_config()
        };
        train_model(nc, ConditioningVariant::CatVTON, false, 0.0, 11, 150)
    })
}

/// The ablation stages, per seed: A conventional conditioning with the
/// full-duo loss, B garment-free unconditional branch, C additionally
/// outfit-only rectified loss. Stage D is C's weights sampled with
/// ground-truth injection, so it needs no training of its own.
struct StageSet {
    a: TinyUNetParams,
    b: TinyUNetParams,
    c: TinyUNetParams,
}

const STAGE_SEEDS: [u64; 3] = [1, 2, 3];
const STAGE_STEPS: usize = 2000;

fn stages() -> &'static Vec<StageSet> {
    static STAGES: OnceLock<Vec<StageSet>> = OnceLock::new();
    STAGES.get_or_init(|| {
        STAGE_SEEDS
            .iter()
            .map(|&seed| {
                let nc = stage_net_config();
                let re = ConditioningVariant::ReCatVTON;
                StageSet {
                    a: train_model(nc, ConditioningVariant::CatVTON, false, 0.0, seed, STAGE_STEPS),
                    b: train_model(nc, re, false, 0.0, seed, STAGE_STEPS),
                    c: train_model(nc, re, true, 10.0, seed, STAGE_STEPS),
                }
            })
            .collect()
    })
}

/// Paired-mode proxy FID over the 48 paired test scenes.
fn paired_fid(
    net: &TinyUNetParams,
    variant: ConditioningVariant,
    injection: bool,
    omega: f64,
) -> f64 {
    let s = schedule();
    let cfg = SamplerConfig {
        steps: 50,
        sampler: SamplerKind::Ddpm,
        guidance: GuidanceConfig::new(omega, variant).unwrap(),
        gt_injection: injection,
        seed: 0xACCE,
    };
    let spec = EmbeddingSpec {
        seed: 0,
        dim: 64,
        kind: EmbedKind::Tanh,
    };
    evaluate(net, desk_data(), &cfg, &s, &spec, EvalMode::Paired)
        .unwrap()
        .fid_g
}

// ------------------------------------------------------------ criteria

/// Core update rules re-verified against literal arithmetic, frozen
/// cross-checked constants, and their degenerate reductions.
#[test]
fn c01_formula_fidelity() {
    let t0 = Instant::now();
    let s = schedule();
    let key = StreamKey::root(0xC1);

    // Forward corruption: first-step coefficients from the raw betas, the
    // terminal signal fraction against an independent cumulative product.
    let z0 = key.child(0, 0).stream().normal_grid(2, 4, 4);
    let eps = key.child(0, 1).stream().normal_grid(2, 4, 4);
    let zt = forward_diffuse(&z0, 0, &eps, &s).unwrap();
    let (a0, b0) = ((1.0f64 - 8.5e-4).sqrt(), (8.5e-4f64).sqrt());
    let mut max_err = 0.0f64;
    for ((o, z), e) in zt.data().iter().zip(z0.data()).zip(eps.data()) {
        max_err = max_err.max((o - (a0 * z + b0 * e)).abs());
    }
    assert!(max_err < 1e-10, "first-step corruption err {max_err}");
    let abar_999 = 0.004660098513077238; // independent f64 cumprod
    assert!(
        ((s.alpha_bar(999) - abar_999) / abar_999).abs() < 1e-10,
        "terminal alpha_bar {}",
        s.alpha_bar(999)
    );
    let zero = LatentGrid::zeros(2, 4, 4);
    let pure = forward_diffuse(&zero, 200, &eps, &s).unwrap();
    let b200 = (1.0 - s.alpha_bar(200)).sqrt();
    for (o, e) in pure.data().iter().zip(eps.data()) {
        assert!((o - b200 * e).abs() < 1e-15);
    }

    // Guidance combination: exact endpoints and a hand-computed scalar.
    let h = 3;
    let cond = DuoGrid::new(LatentGrid::filled(1, 2 * h, 2, 0.5), h).unwrap();
    let unc = DuoGrid::new(LatentGrid::filled(1, 2 * h, 2, 0.2), h).unwrap();
    let at1 = cfg_combine(&cond, &unc, 1.0).unwrap();
    assert_eq!(bits(at1.grid()), bits(cond.grid()));
    let at0 = cfg_combine(&cond, &unc, 0.0).unwrap();
    assert_eq!(bits(at0.grid()), bits(unc.grid()));
    let at25 = cfg_combine(&cond, &unc, 2.5).unwrap();
    for v in at25.grid().data() {
        assert!((v - 0.95).abs() < 1e-15, "cfg scalar {v}");
    }

    // Unconditional assembly, both variants, against the conditional
    // input channel by channel.
    let scene = &desk_data().test_paired[0];
    let (c, hh, w) = scene.person_full().shape();
    let noisy_p = key.child(1, 0).stream().normal_grid(c, hh, w);
    let noisy_g = key.child(1, 1).stream().normal_grid(c, hh, w);
    let zt_duo = spatial_concat(&noisy_p, &noisy_g).unwrap();
    let cond_in =
        assemble_conditional_input(&zt_duo, scene.mask(), scene.person_masked(), scene.garment())
            .unwrap();
    for (variant, keep_noisy_garment) in [
        (ConditioningVariant::CatVTON, true),
        (ConditioningVariant::ReCatVTON, false),
    ] {
        let unc_in =
            assemble_unconditional_input(variant, &zt_duo, scene.mask(), scene.person_masked())
                .unwrap();
        let (ncp, ncg) = split_regions(&cond_in.noisy_duo());
        let (nup, nug) = split_regions(&unc_in.noisy_duo());
        assert_eq!(bits(&ncp), bits(&nup), "{variant:?} noisy person rows");
        if keep_noisy_garment {
            assert_eq!(bits(&ncg), bits(&nug), "{variant:?} noisy garment rows");
        } else {
            assert!(nug.data().iter().all(|&v| v == 0.0), "{variant:?} garment");
        }
        let (cup, cug) = split_regions(&unc_in.condition_duo());
        assert_eq!(bits(&cup), bits(scene.person_masked()), "{variant:?} cond person");
        assert!(cug.data().iter().all(|&v| v == 0.0), "{variant:?} cond garment");
        assert_eq!(bits(&unc_in.mask_channel()), bits(&cond_in.mask_channel()));
    }

    // Rectification weight: disabled case is exactly one; the powered
    // form cross-checked by integer exponentiation at two timesteps.
    assert_eq!(omega_t(0.0, 123, &s).unwrap(), 1.0);
    for t in [100, 900] {
        let want = (1.0 - s.alpha_bar(t)).powi(5);
        let got = omega_t(10.0, t, &s).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "omega_t {got} vs {want}");
    }

    // Target rectification scalar: 0.3 + 2·(0.3 − 0.1) = 0.7.
    let eb = LatentGrid::filled(1, 2, 2, 0.3);
    let es = LatentGrid::filled(1, 2, 2, 0.1);
    let tgt = dream_target(&eb, &es, 2.0).unwrap();
    for v in tgt.data() {
        assert!((v - 0.7).abs() < 1e-15, "dream target {v}");
    }

    // Input rectification: person rows shift by √(1−ᾱ)·w·Δ under an
    // independent elementwise traversal; garment rows are bit-copied.
    let zb = DuoGrid::new(key.child(2, 0).stream().normal_grid(c, 2 * hh, w), hh).unwrap();
    let ebd = DuoGrid::new(key.child(2, 1).stream().normal_grid(c, 2 * hh, w), hh).unwrap();
    let esd = DuoGrid::new(key.child(2, 2).stream().normal_grid(c, 2 * hh, w), hh).unwrap();
    let t = 400;
    let w_t = 1.7;
    let rect = rectify_input(&zb, &ebd, &esd, w_t, t, &s).unwrap();
    let scale = (1.0 - s.alpha_bar(t)).sqrt() * w_t;
    let (rp, rg) = split_regions(&rect);
    let (zp, zg) = split_regions(&zb);
    let (ep, _) = split_regions(&ebd);
    let (sp, _) = split_regions(&esd);
    for i in 0..rp.data().len() {
        let want = zp.data()[i] + scale * (ep.data()[i] - sp.data()[i]);
        assert!((rp.data()[i] - want).abs() < 1e-12);
    }
    assert_eq!(bits(&rg), bits(&zg), "rectified garment rows not bit-copied");

    // Person-region loss: hand value on a 1×(2·1)×2 duo and an exactly
    // zero garment gradient.
    let pred = DuoGrid::new(
        LatentGrid::from_vec(1, 2, 2, vec![1.0, 2.0, 5.0, 5.0]).unwrap(),
        1,
    )
    .unwrap();
    let target_p = LatentGrid::from_vec(1, 1, 2, vec![0.5, 1.0]).unwrap();
    let (mse, grad) = outfit_only_loss(&pred, &target_p).unwrap();
    assert!((mse - (0.25 + 1.0) / 2.0).abs() < 1e-15, "person mse {mse}");
    let (gp, gg) = split_regions(&grad);
    assert!(gg.data().iter().all(|&v| v == 0.0));
    assert!((gp.data()[0] - 0.5).abs() < 1e-15 && (gp.data()[1] - 1.0).abs() < 1e-15);

    // Reverse steps: the final ancestral step is deterministic, the
    // deterministic sampler's terminal step is exactly the clean
    // estimate, and corrupt-then-estimate round-trips.
    let zt1 = key.child(3, 0).stream().normal_grid(1, 3, 3);
    let eh = key.child(3, 1).stream().normal_grid(1, 3, 3);
    let xi_a = key.child(3, 2).stream().normal_grid(1, 3, 3);
    let xi_b = key.child(3, 3).stream().normal_grid(1, 3, 3);
    let last_a = ddpm_step(&zt1, &eh, 0, &xi_a, &s).unwrap();
    let last_b = ddpm_step(&zt1, &eh, 0, &xi_b, &s).unwrap();
    assert_eq!(bits(&last_a), bits(&last_b), "final step not noise-free");
    let dd = ddim_step(&zt1, &eh, 7, -1, &s).unwrap();
    assert_eq!(bits(&dd), bits(&predict_z0(&zt1, &eh, 7, &s).unwrap()));
    let z_round = predict_z0(&forward_diffuse(&z0, 700, &eps, &s).unwrap(), &eps, 700, &s).unwrap();
    for (r, z) in z_round.data().iter().zip(z0.data()) {
        assert!((r - z).abs() < 1e-10, "round trip {r} vs {z}");
    }

    // Oracle denoiser reduction: at the distribution mean the optimal
    // noise estimate vanishes identically.
    let mu = LatentGrid::filled(1, 2, 2, 0.4);
    let model = AnalyticGaussianModel::new(mu.clone(), 0.5).unwrap();
    let at_mean = mu.map(|v| s.alpha_bar(300).sqrt() * v);
    let e_hat = analytic_eps(&model, &at_mean, 300, &s).unwrap();
    assert!(e_hat.data().iter().all(|&v| v.abs() < 1e-15));

    verdict(
        "c1 formula fidelity",
        true,
        &format!("all reductions and scalar oracles hold, {:.1}s", t0.elapsed().as_secs_f64()),
    );
}

/// Central finite differences against the analytic gradient of the full
/// training step, across loss modes, conditioning variants, and dropout
/// branches.
#[test]
fn c02_gradient_correctness() {
    let t0 = Instant::now();
    let s = schedule();
    let split = desk_data();
    let batch: Vec<&ToyScene> = split.train[..4].iter().collect();
    // A few steps of training make the head nonzero, so gradients reach
    // every layer and the check is not vacuous upstream of the head.
    let net = train_model(net_config(), ConditioningVariant::ReCatVTON, false, 0.0, 21, 5);
    let mut worst = 0.0f64;
    for (outfit_only, lambda, variant, dropout) in [
        (true, 10.0, ConditioningVariant::ReCatVTON, 0.5),
        (false, 0.0, ConditioningVariant::CatVTON, 0.5),
        (true, 0.0, ConditioningVariant::ReCatVTON, 0.0),
    ] {
        let cfg = TrainConfig {
            outfit_only,
            lambda,
            variant,
            dropout_p: dropout,
            ..TrainConfig::default()
        };
        let report = gradcheck_train_step(&net, &batch, 3, &cfg, &s, 64, 1e-5).unwrap();
        worst = worst.max(report.max_rel_err);
    }
    verdict(
        "c2 gradient correctness",
        worst < 1e-4,
        &format!("max rel err {worst:.3e} over 3 configs x 64 probes, {:.1}s", t0.elapsed().as_secs_f64()),
    );
}

/// Garment-row output perturbations leave every parameter gradient
/// bit-identical under the person-region loss.
#[test]
fn c03_garment_rows_outside_the_gradient() {
    let t0 = Instant::now();
    let scene = &desk_data().test_paired[1];
    let (c, h, w) = scene.person_full().shape();
    let key = StreamKey::root(0xC3);
    let zt = DuoGrid::new(key.child(0, 0).stream().normal_grid(c, 2 * h, w), h).unwrap();
    let input =
        assemble_conditional_input(&zt, scene.mask(), scene.person_masked(), scene.garment())
            .unwrap();
    let net = quick_net();
    let (pred, tape) = net.forward(&input, 350).unwrap();
    let target_p = key.child(0, 1).stream().normal_grid(c, h, w);

    let (loss, grad_out) = outfit_only_loss(&pred, &target_p).unwrap();
    let g_clean = net.backward(&tape, &grad_out).unwrap();

    // Slam the garment rows of the prediction and redo loss + backprop.
    let (person, garment) = split_regions(&pred);
    let mut corrupted = pred.clone();
    corrupted.set_person_rows(&person).unwrap();
    corrupted
        .set_garment_rows(&garment.map(|v| 1e6 * (v + 1.0)))
        .unwrap();
    let (loss2, grad_out2) = outfit_only_loss(&corrupted, &target_p).unwrap();
    let g_dirty = net.backward(&tape, &grad_out2).unwrap();

    let loss_same = loss.to_bits() == loss2.to_bits();
    let grads_same = g_clean.len() == g_dirty.len()
        && g_clean
            .iter()
            .zip(&g_dirty)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    verdict(
        "c3 garment rows outside the gradient",
        loss_same && grads_same,
        &format!(
            "loss bits equal: {loss_same}, {} param grads bit-equal: {grads_same}, {:.1}s",
            g_clean.len(),
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// The garment-free unconditional branch is bit-identical under garment
/// swaps; the conventional unconditional branch is not.
#[test]
fn c04_unconditional_garment_independence() {
    let t0 = Instant::now();
    let s = schedule();
    let split = desk_data();
    let scene = &split.test_paired[0];
    let other_garment = split.test_paired[1].garment();
    let (c, h, w) = scene.person_full().shape();
    let key = StreamKey::root(0xC4);
    let noisy_p = key.child(0, 0).stream().normal_grid(c, h, w);
    let eps_g = key.child(0, 1).stream().normal_grid(c, h, w);
    let t = 600;
    let zt1 = spatial_concat(&noisy_p, &forward_diffuse(scene.garment(), t, &eps_g, &s).unwrap())
        .unwrap();
    let zt2 = spatial_concat(&noisy_p, &forward_diffuse(other_garment, t, &eps_g, &s).unwrap())
        .unwrap();
    let net = quick_net();

    let predict = |variant, zt: &DuoGrid| {
        let input =
            assemble_unconditional_input(variant, zt, scene.mask(), scene.person_masked()).unwrap();
        net.predict(&input, t).unwrap()
    };
    let re1 = predict(ConditioningVariant::ReCatVTON, &zt1);
    let re2 = predict(ConditioningVariant::ReCatVTON, &zt2);
    let cat1 = predict(ConditioningVariant::CatVTON, &zt1);
    let cat2 = predict(ConditioningVariant::CatVTON, &zt2);

    let re_same = bits(re1.grid()) == bits(re2.grid());
    let cat_differs = bits(cat1.grid()) != bits(cat2.grid());
    verdict(
        "c4 unconditional garment independence",
        re_same && cat_differs,
        &format!(
            "garment-free branch bit-stable: {re_same}, conventional branch shifts: {cat_differs}, {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Full-length ancestral sampling with the closed-form oracle denoiser
/// reproduces the target Gaussian's moments within 5%.
#[test]
fn c05_sampler_moment_oracle() {
    let t0 = Instant::now();
    let s = schedule();
    let (mu, sd) = (0.7, 0.6);
    let model = AnalyticGaussianModel::new(LatentGrid::filled(1, 2, 2, mu), sd).unwrap();
    let key = StreamKey::root(0xC5);
    let trajectories = 2000;
    let mut samples = Vec::with_capacity(trajectories * 4);
    for traj in 0..trajectories {
        let mut stream = key.child(0, traj as u64).stream();
        let mut z = stream.normal_grid(1, 2, 2);
        for t in (0..s.t_count()).rev() {
            let eps_hat = analytic_eps(&model, &z, t, &s).unwrap();
            let xi = stream.normal_grid(1, 2, 2);
            z = ddpm_step(&z, &eps_hat, t, &xi, &s).unwrap();
        }
        samples.extend_from_slice(z.data());
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let mean_rel = ((mean - mu) / mu).abs();
    let var_rel = ((var - sd * sd) / (sd * sd)).abs();
    verdict(
        "c5 sampler moment oracle",
        mean_rel < 0.05 && var_rel < 0.05,
        &format!(
            "mean {mean:.4} vs {mu} ({:.2}%), var {var:.4} vs {:.2} ({:.2}%), {} samples, {:.1}s",
            100.0 * mean_rel,
            sd * sd,
            100.0 * var_rel,
            samples.len(),
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// With injection on, the person output is bit-invariant to garment-row
/// denoiser corruption; with injection off it changes.
#[test]
fn c06_injection_decouples_person_output() {
    let t0 = Instant::now();
    let s = schedule();
    let scene = &desk_data().test_paired[2];
    let net = quick_net();
    let corrupted = GarmentOutputCorrupter {
        inner: net.clone(),
        magnitude: 3.0,
    };
    let base = SamplerConfig {
        steps: 25,
        sampler: SamplerKind::Ddim,
        guidance: GuidanceConfig::new(2.5, ConditioningVariant::ReCatVTON).unwrap(),
        gt_injection: true,
        seed: 0xC6,
    };
    let run = |den: &dyn Denoiser, inject: bool| {
        let cfg = SamplerConfig {
            gt_injection: inject,
            ..base
        };
        sample_tryon(den, scene, &cfg, &s).unwrap()
    };
    let on_clean = run(net, true);
    let on_dirty = run(&corrupted, true);
    let off_clean = run(net, false);
    let off_dirty = run(&corrupted, false);

    let invariant_on = bits(&on_clean) == bits(&on_dirty);
    let changed_off = bits(&off_clean) != bits(&off_dirty);
    verdict(
        "c6 injection decouples person output",
        invariant_on && changed_off,
        &format!(
            "injection on bit-invariant: {invariant_on}, injection off perturbed: {changed_off}, {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Four-stage toy ablation at ω = 2.5: the full configuration (garment-
/// free guidance + outfit-only rectified loss + injection) posts the
/// best proxy FID in at least two of three seeds.
#[test]
fn c07_toy_ablation_ordering() {
    let t0 = Instant::now();
    let mut wins = 0;
    let mut rows = Vec::new();
    for (i, set) in stages().iter().enumerate() {
        let fid_a = paired_fid(&set.a, ConditioningVariant::CatVTON, false, 2.5);
        let fid_b = paired_fid(&set.b, ConditioningVariant::ReCatVTON, false, 2.5);
        let fid_c = paired_fid(&set.c, ConditioningVariant::ReCatVTON, false, 2.5);
        let fid_d = paired_fid(&set.c, ConditioningVariant::ReCatVTON, true, 2.5);
        let best = fid_d < fid_a && fid_d < fid_b && fid_d < fid_c;
        if best {
            wins += 1;
        }
        rows.push(format!(
            "seed {}: A {fid_a:.4} B {fid_b:.4} C {fid_c:.4} D {fid_d:.4}{}",
            STAGE_SEEDS[i],
            if best { " *" } else { "" }
        ));
    }
    verdict(
        "c7 toy ablation ordering",
        wins >= 2,
        &format!(
            "full config best in {wins}/3 seeds [{}], {:.0}s",
            rows.join("; "),
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// ω-sweep robustness: across the five-point guidance grid the
/// garment-free guidance variant's proxy-FID spread is smaller than the
/// conventional variant's, by 3-seed median. Stages A and B isolate
/// exactly the guidance axis — same loss, steps, and seed, differing
/// only in the unconditional-branch formulation — so the sweep compares
/// those models, with sampling free of other mechanisms.
#[test]
fn c08_omega_robustness() {
    let t0 = Instant::now();
    const OMEGAS: [f64; 5] = [1.0, 1.5, 2.5, 5.0, 7.5];
    let range = |fids: &[f64]| {
        fids.iter().cloned().fold(f64::MIN, f64::max)
            - fids.iter().cloned().fold(f64::MAX, f64::min)
    };
    let mut cat_ranges = Vec::new();
    let mut re_ranges = Vec::new();
    let mut rows = Vec::new();
    for (i, set) in stages().iter().enumerate() {
        let cat: Vec<f64> = OMEGAS
            .iter()
            .map(|&w| paired_fid(&set.a, ConditioningVariant::CatVTON, false, w))
            .collect();
        let re: Vec<f64> = OMEGAS
            .iter()
            .map(|&w| paired_fid(&set.b, ConditioningVariant::ReCatVTON, false, w))
            .collect();
        cat_ranges.push(range(&cat));
        re_ranges.push(range(&re));
        rows.push(format!(
            "seed {}: conventional {cat:.3?} range {:.4}, garment-free {re:.3?} range {:.4}",
            STAGE_SEEDS[i], cat_ranges[i], re_ranges[i]
        ));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let med_cat = median(&mut cat_ranges);
    let med_re = median(&mut re_ranges);
    verdict(
        "c8 omega robustness",
        med_re < med_cat,
        &format!(
            "median ranges: garment-free {med_re:.4} vs conventional {med_cat:.4} [{}], {:.0}s",
            rows.join("; "),
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// The metric suite behaves like the quantities it names: SSIM is
/// exactly one on identity and matches frozen reference values, the
/// Fréchet proxy vanishes on identical sets, and the unbiased kernel
/// estimate is centered on zero for same-distribution draws.
#[test]
fn c09_metric_validity() {
    let t0 = Instant::now();
    let img = |c: usize, h: usize, w: usize, f: &dyn Fn(f64) -> f64| {
        LatentGrid::from_vec(c, h, w, (0..c * h * w).map(|i| f(i as f64)).collect()).unwrap()
    };
    let x_ref = img(1, 8, 6, &|i| (0.7 * i + 0.3).sin());
    let y_ref = img(1, 8, 6, &|i| 0.8 * (0.7 * i + 0.3).sin() + 0.1 * (0.5 * i).cos());
    let self_one = ssim(&x_ref, &x_ref, 2.0).unwrap() == 1.0;

    let ref1 = (ssim(&x_ref, &y_ref, 2.0).unwrap() - 0.9392259809472989).abs();
    let x2 = img(2, 12, 8, &|i| (0.7 * i + 0.3).sin());
    let y2 = img(2, 12, 8, &|i| 0.8 * (0.7 * i + 0.3).sin() + 0.1 * (0.5 * i).cos());
    let ref2 = (ssim(&x2, &y2, 2.0).unwrap() - 0.9404126374890063).abs();
    let ssim_matches = ref1 < 1e-8 && ref2 < 1e-8;

    let spec = EmbeddingSpec {
        seed: 0,
        dim: 64,
        kind: EmbedKind::Tanh,
    };
    let key = StreamKey::root(0xC9);
    let cloud = |role: u64, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let g = key.child(role, i as u64).stream().normal_grid(4, 12, 8);
                embed(&g, &spec).unwrap()
            })
            .collect()
    };
    let base = cloud(1, 16);
    let fid_self = frechet_proxy(&base, &base).unwrap();

    let resamples = 200;
    let mut kids = Vec::with_capacity(resamples);
    for r in 0..resamples as u64 {
        let a = cloud(100 + 2 * r, 16);
        let b = cloud(101 + 2 * r, 16);
        kids.push(kid_poly(&a, &b).unwrap());
    }
    let m = kids.iter().sum::<f64>() / resamples as f64;
    let sd = (kids.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (resamples - 1) as f64).sqrt();
    let se = sd / (resamples as f64).sqrt();
    let kid_centered = m.abs() <= 3.0 * se;

    verdict(
        "c9 metric validity",
        self_one && ssim_matches && fid_self < 1e-6 && kid_centered,
        &format!(
            "ssim(x,x)=1: {self_one}, ref diffs {ref1:.1e}/{ref2:.1e}, fid(identical) {fid_self:.1e}, kid mean {m:.2e} vs 3se {:.2e}, {:.1}s",
            3.0 * se,
            t0.elapsed().as_secs_f64()
        ),
    );
}

// --------------------------------------------------- c10 CLI plumbing

fn recat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recat"))
        .args(args)
        .env_remove("RECAT_LOG")
        .output()
        .expect("failed to spawn recat")
}

fn run_ok(args: &[&str]) {
    let out = recat(args);
    assert!(
        out.status.success(),
        "recat {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_config(dir: &Path, steps: usize) -> PathBuf {
    let path = dir.join(format!("config_{steps}.json"));
    fs::write(
        &path,
        format!(
            r#"{{
                "model.C": 2, "model.H": 8, "model.W": 8, "model.F": 8,
                "schedule.T": 100,
                "sampler.steps": 10,
                "train.lr": 0.001, "train.batch": 2, "train.grad_accum": 1,
                "train.steps": {steps},
                "data.n_train": 8, "data.n_test": 4, "data.n_patterns": 2,
                "eval.embed_dim": 16
            }}"#
        ),
    )
    .unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Double-run byte equality, checkpoint-resume equivalence, and thread-
/// count invariance, all through the command-line binary.
#[test]
fn c10_determinism_and_persistence() {
    let t0 = Instant::now();
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), 8);
    let c = cfg.to_str().unwrap();

    // Two from-scratch runs of the full pipeline.
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let d = dir.to_str().unwrap();
        run_ok(&["gen-data", "--config", c, "--out", d]);
        run_ok(&["train", "--config", c, "--out", d]);
        run_ok(&["sample", "--config", c, "--out", d]);
        run_ok(&["eval", "--config", c, "--out", d, "--threads", "1"]);
    }
    let artifacts = [
        "dataset.rcds",
        "checkpoint.rcvt",
        "metrics.jsonl",
        "sample_0.lgrd",
        "samples.png",
        "eval.csv",
    ];
    let double_run_equal = artifacts
        .iter()
        .all(|name| read(&a.join(name)) == read(&b.join(name)));

    // Interrupted training: 4 + 4 steps equals 8 straight through.
    let half_cfg = small_config(tmp.path(), 4);
    let hc = half_cfg.to_str().unwrap();
    let r = tmp.path().join("resumed");
    let rd = r.to_str().unwrap();
    run_ok(&["gen-data", "--config", c, "--out", rd]);
    run_ok(&["train", "--config", hc, "--out", rd]);
    run_ok(&["train", "--config", c, "--out", rd]);
    let resume_equal = read(&a.join("checkpoint.rcvt")) == read(&r.join("checkpoint.rcvt"))
        && read(&a.join("metrics.jsonl")) == read(&r.join("metrics.jsonl"));

    // Worker count must not leak into the report.
    run_ok(&["eval", "--config", c, "--out", a.to_str().unwrap(), "--threads", "4"]);
    let threads_equal = read(&a.join("eval.csv")) == read(&b.join("eval.csv"));

    verdict(
        "c10 determinism and persistence",
        double_run_equal && resume_equal && threads_equal,
        &format!(
            "double-run equal: {double_run_equal}, resume equal: {resume_equal}, 4-thread == 1-thread: {threads_equal}, {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}
