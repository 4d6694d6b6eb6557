//! Run configuration: a flat dotted-key JSON document. Missing keys take
//! the published training defaults, unknown keys are rejected, and the
//! fully resolved document is echoed next to every run's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use recat_core::denoiser::NetConfig;
use recat_core::dream::TrainConfig;
use recat_core::guidance::{ConditioningVariant, GuidanceConfig};
use recat_core::metrics::{EmbedKind, EmbeddingSpec};
use recat_core::schedule::{build_schedule, NoiseSchedule, ScheduleKind};
use recat_core::toydata::GenParams;
use recat_core::tryon::{SamplerConfig, SamplerKind};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Timestep-embedding width; not a config knob.
pub const TEMB_DIM: usize = 16;

pub const RESOLVED_FILE: &str = "config.resolved.json";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub schedule_kind: ScheduleKind,
    pub schedule_t: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub features: usize,
    pub train: TrainConfig,
    pub guide_variant: ConditioningVariant,
    pub guide_omega: f64,
    pub sampler_steps: usize,
    pub sampler_kind: SamplerKind,
    pub gt_injection: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub n_patterns: usize,
    pub data_seed: u64,
    pub embed_seed: u64,
    pub embed_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule_kind: ScheduleKind::ScaledLinear,
            schedule_t: 1000,
            beta_start: 8.5e-4,
            beta_end: 1.2e-2,
            channels: 4,
            height: 12,
            width: 8,
            features: 12,
            train: TrainConfig::default(),
            guide_variant: ConditioningVariant::ReCatVTON,
            guide_omega: 2.5,
            sampler_steps: 50,
            sampler_kind: SamplerKind::Ddpm,
            gt_injection: true,
            n_train: 256,
            n_test: 96,
            n_patterns: 8,
            data_seed: 0,
            embed_seed: 0,
            embed_dim: 64,
        }
    }
}

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {why}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, format_args!("expected a finite number, got {v}")))
}

fn as_count(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| bad(key, format_args!("expected a non-negative integer, got {v}")))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| bad(key, format_args!("expected a non-negative integer, got {v}")))
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| bad(key, format_args!("expected true or false, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| bad(key, format_args!("expected a string, got {v}")))
}

fn parse_variant(key: &str, v: &Value) -> Result<ConditioningVariant> {
    match as_str(key, v)? {
        "catvton" => Ok(ConditioningVariant::CatVTON),
        "recatvton" => Ok(ConditioningVariant::ReCatVTON),
        other => Err(bad(key, format_args!("expected \"catvton\" or \"recatvton\", got \"{other}\""))),
    }
}

fn unit_open(key: &str, v: &Value) -> Result<f64> {
    let x = as_f64(key, v)?;
    if (0.0..1.0).contains(&x) {
        Ok(x)
    } else {
        Err(bad(key, format_args!("must be in [0, 1), got {x}")))
    }
}

fn positive(key: &str, v: &Value) -> Result<f64> {
    let x = as_f64(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, format_args!("must be > 0, got {x}")))
    }
}

fn nonneg(key: &str, v: &Value) -> Result<f64> {
    let x = as_f64(key, v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(bad(key, format_args!("must be >= 0, got {x}")))
    }
}

fn at_least(key: &str, v: &Value, min: usize) -> Result<usize> {
    let x = as_count(key, v)?;
    if x >= min {
        Ok(x)
    } else {
        Err(bad(key, format_args!("must be >= {min}, got {x}")))
    }
}

impl RunConfig {
    fn apply(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "schedule.kind" => {
                self.schedule_kind = match as_str(key, v)? {
                    "linear" => ScheduleKind::Linear,
                    "scaled_linear" => ScheduleKind::ScaledLinear,
                    other => {
                        return Err(bad(
                            key,
                            format_args!("expected \"linear\" or \"scaled_linear\", got \"{other}\""),
                        ))
                    }
                }
            }
            "schedule.T" => self.schedule_t = at_least(key, v, 1)?,
            "schedule.beta_start" => self.beta_start = positive(key, v)?,
            "schedule.beta_end" => self.beta_end = positive(key, v)?,
            "model.C" => self.channels = at_least(key, v, 1)?,
            "model.H" => self.height = at_least(key, v, 8)?,
            "model.W" => self.width = at_least(key, v, 8)?,
            "model.F" => self.features = at_least(key, v, 1)?,
            "train.lr" => self.train.lr = positive(key, v)?,
            "train.weight_decay" => self.train.weight_decay = nonneg(key, v)?,
            "train.beta1" => self.train.beta1 = unit_open(key, v)?,
            "train.beta2" => self.train.beta2 = unit_open(key, v)?,
            "train.grad_clip" => self.train.grad_clip_norm = positive(key, v)?,
            "train.batch" => self.train.batch_size = at_least(key, v, 1)?,
            "train.grad_accum" => self.train.grad_accum = at_least(key, v, 1)?,
            "train.steps" => self.train.steps = at_least(key, v, 1)?,
            "train.lambda" => self.train.lambda = nonneg(key, v)?,
            "train.dropout_p" => self.train.dropout_p = unit_open(key, v)?,
            "train.outfit_only" => self.train.outfit_only = as_bool(key, v)?,
            "train.variant" => self.train.variant = parse_variant(key, v)?,
            "train.seed" => self.train.seed = as_u64(key, v)?,
            "cfg.variant" => self.guide_variant = parse_variant(key, v)?,
            "cfg.omega" => self.guide_omega = as_f64(key, v)?,
            "sampler.steps" => self.sampler_steps = at_least(key, v, 1)?,
            "sampler.kind" => {
                self.sampler_kind = match as_str(key, v)? {
                    "ddpm" => SamplerKind::Ddpm,
                    "ddim" => SamplerKind::Ddim,
                    other => {
                        return Err(bad(key, format_args!("expected \"ddpm\" or \"ddim\", got \"{other}\"")))
                    }
                }
            }
            "sampler.gt_injection" => self.gt_injection = as_bool(key, v)?,
            "data.n_train" => self.n_train = at_least(key, v, 1)?,
            "data.n_test" => self.n_test = at_least(key, v, 4)?,
            "data.n_patterns" => self.n_patterns = at_least(key, v, 2)?,
            "data.seed" => self.data_seed = as_u64(key, v)?,
            "eval.embed_seed" => self.embed_seed = as_u64(key, v)?,
            "eval.embed_dim" => self.embed_dim = at_least(key, v, 1)?,
            _ => return Err(CliError::Config(format!("unknown config key \"{key}\""))),
        }
        Ok(())
    }

    /// Cross-field checks, run after the whole document is applied.
    pub fn validate(&self) -> Result<()> {
        if self.beta_start > self.beta_end {
            return Err(CliError::Config(format!(
                "schedule.beta_start: must not exceed schedule.beta_end ({} > {})",
                self.beta_start, self.beta_end
            )));
        }
        if self.beta_end >= 1.0 {
            return Err(CliError::Config(format!(
                "schedule.beta_end: must be < 1, got {}",
                self.beta_end
            )));
        }
        if self.width % 2 != 0 {
            return Err(CliError::Config(format!(
                "model.W: the down/up path needs an even width, got {}",
                self.width
            )));
        }
        if self.sampler_steps > self.schedule_t {
            return Err(CliError::Config(format!(
                "sampler.steps: must not exceed schedule.T ({} > {})",
                self.sampler_steps, self.schedule_t
            )));
        }
        if self.n_test % 2 != 0 {
            return Err(CliError::Config(format!(
                "data.n_test: must be even (half paired, half unpaired), got {}",
                self.n_test
            )));
        }
        self.net_config().validate().map_err(CliError::from)?;
        self.train.validate().map_err(CliError::from)?;
        GuidanceConfig::new(self.guide_omega, self.guide_variant).map_err(CliError::from)?;
        self.embedding_spec().validate().map_err(CliError::from)?;
        Ok(())
    }

    pub fn to_map(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put(
            "schedule.kind",
            match self.schedule_kind {
                ScheduleKind::Linear => "linear",
                ScheduleKind::ScaledLinear => "scaled_linear",
            }
            .into(),
        );
        put("schedule.T", (self.schedule_t as u64).into());
        put("schedule.beta_start", self.beta_start.into());
        put("schedule.beta_end", self.beta_end.into());
        put("model.C", (self.channels as u64).into());
        put("model.H", (self.height as u64).into());
        put("model.W", (self.width as u64).into());
        put("model.F", (self.features as u64).into());
        put("train.lr", self.train.lr.into());
        put("train.weight_decay", self.train.weight_decay.into());
        put("train.beta1", self.train.beta1.into());
        put("train.beta2", self.train.beta2.into());
        put("train.grad_clip", self.train.grad_clip_norm.into());
        put("train.batch", (self.train.batch_size as u64).into());
        put("train.grad_accum", (self.train.grad_accum as u64).into());
        put("train.steps", (self.train.steps as u64).into());
        put("train.lambda", self.train.lambda.into());
        put("train.dropout_p", self.train.dropout_p.into());
        put("train.outfit_only", self.train.outfit_only.into());
        put("train.variant", variant_str(self.train.variant).into());
        put("train.seed", self.train.seed.into());
        put("cfg.variant", variant_str(self.guide_variant).into());
        put("cfg.omega", self.guide_omega.into());
        put("sampler.steps", (self.sampler_steps as u64).into());
        put(
            "sampler.kind",
            match self.sampler_kind {
                SamplerKind::Ddpm => "ddpm",
                SamplerKind::Ddim => "ddim",
            }
            .into(),
        );
        put("sampler.gt_injection", self.gt_injection.into());
        put("data.n_train", (self.n_train as u64).into());
        put("data.n_test", (self.n_test as u64).into());
        put("data.n_patterns", (self.n_patterns as u64).into());
        put("data.seed", self.data_seed.into());
        put("eval.embed_seed", self.embed_seed.into());
        put("eval.embed_dim", (self.embed_dim as u64).into());
        m
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        Ok(build_schedule(
            self.schedule_kind,
            self.schedule_t,
            self.beta_start,
            self.beta_end,
        )?)
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            latent_channels: self.channels,
            features: self.features,
            temb_dim: TEMB_DIM,
            t_count: self.schedule_t,
        }
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            channels: self.channels,
            height: self.height,
            width: self.width,
            n_patterns: self.n_patterns,
        }
    }

    pub fn sampler_config(&self, seed: u64) -> Result<SamplerConfig> {
        Ok(SamplerConfig {
            steps: self.sampler_steps,
            sampler: self.sampler_kind,
            guidance: GuidanceConfig::new(self.guide_omega, self.guide_variant)?,
            gt_injection: self.gt_injection,
            seed,
        })
    }

    pub fn embedding_spec(&self) -> EmbeddingSpec {
        EmbeddingSpec {
            seed: self.embed_seed,
            dim: self.embed_dim,
            kind: EmbedKind::Tanh,
        }
    }
}

pub fn variant_str(v: ConditioningVariant) -> &'static str {
    match v {
        ConditioningVariant::CatVTON => "catvton",
        ConditioningVariant::ReCatVTON => "recatvton",
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if !text.trim().is_empty() {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Format(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = doc else {
            return Err(CliError::Format("config root must be a JSON object".into()));
        };
        for (k, v) in &map {
            cfg.apply(k, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Write the fully resolved configuration next to the run's outputs.
pub fn write_resolved(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join(RESOLVED_FILE);
    let text = serde_json::to_string_pretty(&Value::Object(cfg.to_map()))
        .map_err(|e| CliError::Format(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}
