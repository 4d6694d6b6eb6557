//! Hot-path benchmarks at the default desk-scale shape: one denoiser
//! pass each way, a full guided sampling run, one optimizer step, and
//! the per-scene evaluation metrics.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use recat_core::denoiser::{NetConfig, TinyUNetParams};
use recat_core::dream::{train_step, AdamWState, TrainConfig};
use recat_core::grid::DuoGrid;
use recat_core::guidance::assemble_conditional_input;
use recat_core::metrics::{embed, ssim, EmbedKind, EmbeddingSpec, DYNAMIC_RANGE};
use recat_core::rng::StreamKey;
use recat_core::schedule::{build_schedule, NoiseSchedule, ScheduleKind};
use recat_core::toydata::{gen_dataset, DatasetSplit, GenParams, ToyScene};
use recat_core::tryon::{sample_tryon, SamplerConfig, SamplerKind};
use recat_core::guidance::{ConditioningVariant, GuidanceConfig};

const C: usize = 4;
const H: usize = 12;
const W: usize = 8;
const F: usize = 12;
const T: usize = 1000;

fn schedule() -> NoiseSchedule {
    build_schedule(ScheduleKind::ScaledLinear, T, 8.5e-4, 1.2e-2).unwrap()
}

fn net() -> TinyUNetParams {
    let cfg = NetConfig {
        latent_channels: C,
        features: F,
        temb_dim: 16,
        t_count: T,
    };
    TinyUNetParams::init(cfg, 7).unwrap()
}

fn dataset() -> DatasetSplit {
    let params = GenParams {
        channels: C,
        height: H,
        width: W,
        n_patterns: 4,
    };
    gen_dataset(5, 8, 4, &params).unwrap()
}

fn scene_input(scene: &ToyScene) -> recat_core::guidance::ModelInput {
    let noisy = StreamKey::root(11).child(1, 0).stream().normal_grid(C, 2 * H, W);
    let duo = DuoGrid::new(noisy, H).unwrap();
    assemble_conditional_input(&duo, scene.mask(), scene.person_masked(), scene.garment()).unwrap()
}

fn bench_denoiser(c: &mut Criterion) {
    let net = net();
    let split = dataset();
    let input = scene_input(&split.train[0]);
    c.bench_function("denoiser_forward", |b| {
        b.iter(|| net.forward(black_box(&input), 500).unwrap())
    });
    let (out, tape) = net.forward(&input, 500).unwrap();
    let out_grad = DuoGrid::new(out.grid().map(|_| 1.0), H).unwrap();
    c.bench_function("denoiser_backward", |b| {
        b.iter(|| net.backward(black_box(&tape), black_box(&out_grad)).unwrap())
    });
}

fn bench_sampler(c: &mut Criterion) {
    let net = net();
    let split = dataset();
    let s = schedule();
    let cfg = SamplerConfig {
        steps: 50,
        sampler: SamplerKind::Ddpm,
        guidance: GuidanceConfig::new(2.5, ConditioningVariant::ReCatVTON).unwrap(),
        gt_injection: true,
        seed: 3,
    };
    c.bench_function("sample_tryon_50_steps", |b| {
        b.iter(|| sample_tryon(&net, black_box(&split.test_paired[0]), &cfg, &s).unwrap())
    });
}

fn bench_training(c: &mut Criterion) {
    let mut net = net();
    let split = dataset();
    let s = schedule();
    let cfg = TrainConfig {
        lr: 1e-5,
        batch_size: 8,
        grad_accum: 2,
        ..TrainConfig::default()
    };
    let batch: Vec<&ToyScene> = (0..cfg.samples_per_step())
        .map(|i| &split.train[i % split.train.len()])
        .collect();
    let mut opt = AdamWState::new(net.data().len());
    let mut step = 0;
    c.bench_function("train_step_batch_16", |b| {
        b.iter(|| {
            let stats = train_step(&mut net, &mut opt, &batch, step, &cfg, &s).unwrap();
            step += 1;
            stats
        })
    });
}

fn bench_metrics(c: &mut Criterion) {
    let split = dataset();
    let x = split.test_paired[0].person_full();
    let y = split.test_paired[1].person_full();
    c.bench_function("ssim_pair", |b| {
        b.iter(|| ssim(black_box(x), black_box(y), DYNAMIC_RANGE).unwrap())
    });
    let spec = EmbeddingSpec {
        seed: 0,
        dim: 64,
        kind: EmbedKind::Tanh,
    };
    c.bench_function("embed_grid", |b| {
        b.iter(|| embed(black_box(x), &spec).unwrap())
    });
}

criterion_group!(benches, bench_denoiser, bench_sampler, bench_training, bench_metrics);
criterion_main!(benches);
