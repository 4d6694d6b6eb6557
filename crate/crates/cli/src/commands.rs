//! Implementations of the six `recat` subcommands. All of them share one
//! run directory: `gen-data` writes the dataset there, `train` leaves a
//! checkpoint and a metrics log, and the downstream commands read both.

use std::fs;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use recat_core::denoiser::{count_params_flops, DenoiserInputSpec, TinyUNetParams};
use recat_core::dream::{train_step, AdamWState};
use recat_core::guidance::ConditioningVariant;
use recat_core::metrics::{evaluate, sweep_guidance, EvalMode, MetricReport, SweepRow};
use recat_core::rng::StreamKey;
use recat_core::toydata::{gen_dataset, load_dataset, save_dataset, DatasetSplit, ToyScene};
use recat_core::tryon::{sample_tryon, SamplerConfig};
use serde_json::{json, Map, Value};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FILE};
use crate::config::{variant_str, write_resolved, RunConfig};
use crate::error::{CliError, Result};
use crate::image::{line_chart, panel_grid, Series};

pub const DATASET_FILE: &str = "dataset.rcds";
pub const METRICS_FILE: &str = "metrics.jsonl";
const CHECKPOINT_EVERY: u64 = 500;
const SWEEP_OMEGAS: [f64; 5] = [1.0, 1.5, 2.5, 5.0, 7.5];

const ROLE_BATCH: u64 = 0x636c_0001;
const ROLE_SAMPLE_SCENE: u64 = 0x636c_0002;

pub const CSV_HEADER: &str = "variant,omega,mode,ssim,fid_g,kid_p,kid_p_x1000,n_real,n_fake";

fn dataset_path(out: &Path) -> PathBuf {
    out.join(DATASET_FILE)
}

fn load_run_dataset(out: &Path) -> Result<DatasetSplit> {
    let path = dataset_path(out);
    if !path.exists() {
        return Err(CliError::Io(format!(
            "{}: no dataset found (run gen-data into this directory first)",
            path.display()
        )));
    }
    Ok(load_dataset(&path)?)
}

/// Keys whose stored values must match the current config before a
/// checkpoint may be reused: everything that shaped the weights or the
/// data. Guidance, sampler, and eval settings are free to vary, and so
/// is `train.steps` — it is the horizon, not part of the provenance.
fn provenance_mismatch(stored: &Map<String, Value>, current: &Map<String, Value>) -> Option<String> {
    for (key, cur) in current {
        if key == "train.steps"
            || !(key.starts_with("schedule.")
                || key.starts_with("model.")
                || key.starts_with("train.")
                || key.starts_with("data."))
        {
            continue;
        }
        match stored.get(key) {
            Some(old) if old == cur => {}
            Some(old) => return Some(format!("{key}: checkpoint has {old}, config says {cur}")),
            None => return Some(format!("{key}: missing from checkpoint")),
        }
    }
    None
}

fn load_run_model(cfg: &RunConfig, out: &Path) -> Result<(TinyUNetParams, Checkpoint)> {
    let path = out.join(CHECKPOINT_FILE);
    if !path.exists() {
        return Err(CliError::Io(format!(
            "{}: no checkpoint found (run train into this directory first)",
            path.display()
        )));
    }
    let ck = load_checkpoint(&path)?;
    if let Some(diff) = provenance_mismatch(&ck.config, &cfg.to_map()) {
        return Err(CliError::Config(format!(
            "checkpoint was trained under a different config ({diff})"
        )));
    }
    let mut net = TinyUNetParams::zeros(cfg.net_config())?;
    if ck.params.len() != net.data().len() {
        return Err(CliError::Shape(format!(
            "checkpoint holds {} parameters, model wants {}",
            ck.params.len(),
            net.data().len()
        )));
    }
    net.data_mut().copy_from_slice(&ck.params);
    Ok((net, ck))
}

pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_resolved(cfg, out)?;
    let split = gen_dataset(cfg.data_seed, cfg.n_train, cfg.n_test, &cfg.gen_params())?;
    let path = dataset_path(out);
    save_dataset(&split, &path)?;
    info!(
        "wrote {} train / {} paired / {} unpaired scenes to {}",
        split.train.len(),
        split.test_paired.len(),
        split.test_unpaired.len(),
        path.display()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_resolved(cfg, out)?;
    let split = load_run_dataset(out)?;
    let schedule = cfg.schedule()?;
    let tc = cfg.train;
    let ckpt_path = out.join(CHECKPOINT_FILE);

    let (mut net, mut opt, start) = if ckpt_path.exists() {
        let ck = load_checkpoint(&ckpt_path)?;
        if let Some(diff) = provenance_mismatch(&ck.config, &cfg.to_map()) {
            return Err(CliError::Config(format!(
                "cannot resume: checkpoint disagrees with config ({diff})"
            )));
        }
        let mut net = TinyUNetParams::zeros(cfg.net_config())?;
        net.data_mut().copy_from_slice(&ck.params);
        let opt = AdamWState::from_parts(ck.opt_m, ck.opt_v, ck.opt_step)?;
        info!("resuming from step {}", ck.train_step);
        (net, opt, ck.train_step)
    } else {
        let net = TinyUNetParams::init(cfg.net_config(), tc.seed)?;
        let n = net.data().len();
        (net, AdamWState::new(n), 0)
    };

    let total = tc.steps as u64;
    if start >= total {
        info!("checkpoint already covers {total} steps; nothing to do");
        return Ok(());
    }
    let mut metrics_log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out.join(METRICS_FILE))?;
    let key = StreamKey::root(tc.seed);
    let n_scenes = split.train.len() as u64;
    for step in start..total {
        let mut picks = key.child(ROLE_BATCH, step).stream();
        let batch: Vec<&ToyScene> = (0..tc.samples_per_step())
            .map(|_| &split.train[picks.index(n_scenes) as usize])
            .collect();
        let stats = train_step(&mut net, &mut opt, &batch, step, &tc, &schedule)?;
        writeln!(
            metrics_log,
            "{}",
            json!({
                "step": step,
                "loss": stats.loss.person_mse,
                "omega_t": stats.loss.omega_t_value,
                "grad_norm": stats.grad_norm,
            })
        )?;
        if (step + 1) % 100 == 0 || step + 1 == total {
            info!(
                "step {}/{total} loss {:.6} grad_norm {:.4}",
                step + 1,
                stats.loss.person_mse,
                stats.grad_norm
            );
        }
        if (step + 1) % CHECKPOINT_EVERY == 0 || step + 1 == total {
            save_checkpoint(
                &Checkpoint {
                    config: cfg.to_map(),
                    train_step: step + 1,
                    opt_step: opt.step(),
                    params: net.data().to_vec(),
                    opt_m: opt.m().to_vec(),
                    opt_v: opt.v().to_vec(),
                },
                &ckpt_path,
            )?;
        }
    }
    Ok(())
}

pub fn sample(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_resolved(cfg, out)?;
    let split = load_run_dataset(out)?;
    let (net, _) = load_run_model(cfg, out)?;
    let schedule = cfg.schedule()?;
    let base = cfg.sampler_config(cfg.train.seed)?;
    let n = split.test_paired.len().min(4);
    if n == 0 {
        return Err(CliError::Config("dataset has no paired test scenes".into()));
    }
    let key = StreamKey::root(base.seed);
    let mut rows = Vec::with_capacity(n);
    let mut outputs = Vec::with_capacity(n);
    for (i, scene) in split.test_paired.iter().take(n).enumerate() {
        let sc = SamplerConfig {
            seed: key.child(ROLE_SAMPLE_SCENE, i as u64).u64_at(0),
            ..base
        };
        let result = sample_tryon(&net, scene, &sc, &schedule)?;
        let path = out.join(format!("sample_{i}.lgrd"));
        let file = fs::File::create(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        result.write_to(std::io::BufWriter::new(file))?;
        outputs.push(result);
        rows.push(i);
    }
    let panels: Vec<Vec<&recat_core::LatentGrid>> = rows
        .iter()
        .map(|&i| {
            let scene = &split.test_paired[i];
            vec![
                scene.person_masked(),
                scene.garment(),
                &outputs[i],
                scene.person_full(),
            ]
        })
        .collect();
    let png_path = out.join("samples.png");
    panel_grid(&panels)?.write_png(&png_path)?;
    info!("wrote {n} samples and {}", png_path.display());
    Ok(())
}

fn csv_row(variant: ConditioningVariant, omega: f64, mode: EvalMode, r: &MetricReport) -> String {
    let ssim = r.ssim.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        variant_str(variant),
        omega,
        mode,
        ssim,
        r.fid_g,
        r.kid_p,
        r.kid_p * 1000.0,
        r.n_real,
        r.n_fake
    )
}

fn write_csv(path: &Path, rows: &[String]) -> Result<()> {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    print!("{text}");
    Ok(())
}

pub fn eval(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_resolved(cfg, out)?;
    let split = load_run_dataset(out)?;
    let (net, _) = load_run_model(cfg, out)?;
    let schedule = cfg.schedule()?;
    let sc = cfg.sampler_config(cfg.train.seed)?;
    let spec = cfg.embedding_spec();
    let mut rows = Vec::new();
    for mode in [EvalMode::Paired, EvalMode::Unpaired] {
        let report = evaluate(&net, &split, &sc, &schedule, &spec, mode)?;
        rows.push(csv_row(cfg.guide_variant, cfg.guide_omega, mode, &report));
    }
    write_csv(&out.join("eval.csv"), &rows)
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_resolved(cfg, out)?;
    let split = load_run_dataset(out)?;
    let (net, _) = load_run_model(cfg, out)?;
    let schedule = cfg.schedule()?;
    let base = cfg.sampler_config(cfg.train.seed)?;
    let spec = cfg.embedding_spec();
    let variants = [ConditioningVariant::CatVTON, ConditioningVariant::ReCatVTON];
    let mut cells: Vec<SweepRow> = Vec::new();
    for mode in [EvalMode::Paired, EvalMode::Unpaired] {
        cells.extend(sweep_guidance(
            &net,
            &split,
            &base,
            &schedule,
            &spec,
            &SWEEP_OMEGAS,
            &variants,
            mode,
        )?);
    }
    let rows: Vec<String> = cells
        .iter()
        .map(|c| csv_row(c.variant, c.omega, c.mode, &c.report))
        .collect();
    write_csv(&out.join("sweep.csv"), &rows)?;

    let series: Vec<Series<'_>> = variants
        .iter()
        .zip([[200, 60, 40], [40, 90, 200]])
        .map(|(&variant, color)| Series {
            label: variant_str(variant),
            color,
            points: cells
                .iter()
                .filter(|c| c.variant == variant && c.mode == EvalMode::Paired)
                .map(|c| (c.omega, c.report.fid_g))
                .collect(),
        })
        .collect();
    let png_path = out.join("sweep.png");
    line_chart(&series, "omega", "FID_g")?.write_png(&png_path)?;
    info!("wrote sweep table and {}", png_path.display());
    Ok(())
}

pub fn complexity(cfg: &RunConfig) -> Result<()> {
    let net = TinyUNetParams::zeros(cfg.net_config())?;
    let spec = DenoiserInputSpec {
        latent_channels: cfg.channels,
        region_height: cfg.height,
        width: cfg.width,
    };
    let (params, flops) = count_params_flops(&net, &spec);
    println!(
        "TinyUNet C={} F={} duo {}x{} T={}",
        cfg.channels,
        cfg.features,
        2 * cfg.height,
        cfg.width,
        cfg.schedule_t
    );
    println!("params: {params}");
    println!("flops_per_forward: {flops}");
    println!("Params (M): {:.6}", params as f64 / 1e6);
    println!("GFLOPs: {:.6}", flops as f64 / 1e9);
    Ok(())
}
