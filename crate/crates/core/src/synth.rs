//! Synthetic experiments with a known scaling law and two-level noise.
//!
//! A value is generated as `exp(log_c + α·ln N + u_scale + ε_run)`: `u_scale`
//! is drawn once per scale (shared by all its runs, like a pretraining seed)
//! and `ε_run` once per run (like a finetuning seed). Each scale draws from
//! its own random substream.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{Direction, RunRecord, RunSet, ScaleSpec};
use crate::registry::Registry;
use crate::rng::{substream, StreamRng};

/// Zero-mean, unit-variance noise distribution.
pub trait NoiseModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn sample(&self, rng: &mut StreamRng) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GaussianNoise;

impl NoiseModel for GaussianNoise {
    fn name(&self) -> &'static str {
        "normal"
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        rng.sample(StandardNormal)
    }
}

/// Uniform on `[-√3, √3]`.
#[derive(Debug, Default, Clone, Copy)]
pub struct UniformNoise;

impl NoiseModel for UniformNoise {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        let half_width = 3f64.sqrt();
        rng.random_range(-half_width..=half_width)
    }
}

pub fn noise_models() -> Registry<dyn NoiseModel> {
    let mut reg: Registry<dyn NoiseModel> = Registry::new("noise model");
    reg.register("normal", || Box::new(GaussianNoise))
        .register("uniform", || Box::new(UniformNoise));
    reg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub true_alpha: f64,
    pub true_log_c: f64,
    pub scales: Vec<ScaleSpec>,
    pub seeds_per_scale: usize,
    pub sigma_pre: f64,
    pub sigma_fin: f64,
    pub rng_seed: u64,
    pub direction: Direction,
    pub noise: String,
    pub task: String,
    pub family: String,
    pub metric: String,
}

impl SynthSpec {
    /// Normal noise, maximized metric, labels `synth/synth/metric`.
    pub fn new(true_alpha: f64, true_log_c: f64, scales: Vec<ScaleSpec>, seeds_per_scale: usize) -> Self {
        Self {
            true_alpha,
            true_log_c,
            scales,
            seeds_per_scale,
            sigma_pre: 0.0,
            sigma_fin: 0.0,
            rng_seed: 0,
            direction: Direction::Maximize,
            noise: "normal".into(),
            task: "synth".into(),
            family: "synth".into(),
            metric: "metric".into(),
        }
    }

    pub fn noise(mut self, sigma_pre: f64, sigma_fin: f64) -> Self {
        self.sigma_pre = sigma_pre;
        self.sigma_fin = sigma_fin;
        self
    }

    pub fn seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    pub fn labels(mut self, task: &str, family: &str, metric: &str) -> Self {
        self.task = task.into();
        self.family = family.into();
        self.metric = metric.into();
        self
    }

    /// Noiseless value of the law at `params`.
    pub fn truth_at(&self, params: f64) -> f64 {
        (self.true_log_c + self.true_alpha * params.ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleOffset {
    pub params: u64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub alpha: f64,
    pub log_c: f64,
    pub scale_offsets: Vec<ScaleOffset>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub runset: RunSet,
    pub truth: GroundTruth,
}

/// Scales `L = layers` with hidden width `aspect_ratio · L`.
pub fn aspect_ratio_scales(aspect_ratio: u32, layers: impl IntoIterator<Item = u32>) -> Result<Vec<ScaleSpec>> {
    layers
        .into_iter()
        .map(|l| ScaleSpec::new(l, aspect_ratio * l))
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    if spec.scales.is_empty() {
        return Err(Error::invalid("scales", "at least one scale is required"));
    }
    if spec.seeds_per_scale == 0 {
        return Err(Error::invalid("seeds_per_scale", "must be at least 1"));
    }
    for (name, sigma) in [("sigma_pre", spec.sigma_pre), ("sigma_fin", spec.sigma_fin)] {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(name, format!("must be nonnegative, got {sigma}")));
        }
    }
    let noise = noise_models().create(&spec.noise)?;

    let mut records = Vec::with_capacity(spec.scales.len() * spec.seeds_per_scale);
    let mut offsets = Vec::with_capacity(spec.scales.len());
    for (i, scale) in spec.scales.iter().enumerate() {
        let mut rng = substream(spec.rng_seed, i as u64);
        let offset = spec.sigma_pre * noise.sample(&mut rng);
        let center = spec.true_log_c + spec.true_alpha * scale.x().ln() + offset;
        for t in 0..spec.seeds_per_scale {
            let eps = spec.sigma_fin * noise.sample(&mut rng);
            records.push(RunRecord {
                scale: scale.clone(),
                task: spec.task.clone(),
                family: spec.family.clone(),
                pretrain_seed: 0,
                finetune_seed: t as u64,
                metric: spec.metric.clone(),
                value: (center + eps).exp(),
                direction: spec.direction,
                tokens: None,
            });
        }
        offsets.push(ScaleOffset {
            params: scale.params,
            offset,
        });
    }
    Ok(Synthetic {
        runset: RunSet::new(records)?,
        truth: GroundTruth {
            alpha: spec.true_alpha,
            log_c: spec.true_log_c,
            scale_offsets: offsets,
        },
    })
}
