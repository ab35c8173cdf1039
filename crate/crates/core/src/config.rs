//! Run configuration: a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default; unknown keys are rejected. [`RunConfig::to_text`] writes every
//! key with its effective value and parses back to the same config.

use std::path::{Path, PathBuf};

use crate::data::{ingest, Dataset, DatasetSpec};
use crate::error::{DlgnError, Result};
use crate::gates::GateId;
use crate::init::{InitKind, InitScheme};
use crate::network::{EncoderConfig, InterventionStrategy, NetworkConfig, Parametrization};
use crate::neuron::EstimatorKind;
use crate::train::{Regularization, TrainConfig};

/// Keys in echo order.
pub const KEYS: &[&str] = &[
    "dataset",
    "holdout",
    "out",
    "seed",
    "thresholds",
    "layer_width",
    "base_layers",
    "depth_scale",
    "final_width_multiplier",
    "classes",
    "tau",
    "parametrization",
    "estimator",
    "init",
    "init_targets",
    "init_sigma",
    "init_mu",
    "op_bias",
    "op_jitter",
    "residual_fraction",
    "learning_rate",
    "steps",
    "batch_size",
    "accumulation",
    "beta1",
    "beta2",
    "epsilon",
    "weight_decay",
    "eval_every",
    "p_intervene",
    "intervention",
    "p_dropout",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    /// When false every row is used for training and the test set is empty.
    pub holdout: bool,
    pub out: PathBuf,
    pub seed: u64,
    pub thresholds: usize,
    pub layer_width: usize,
    pub base_layers: usize,
    pub depth_scale: usize,
    pub final_width_multiplier: usize,
    /// `None` takes the class count from the dataset.
    pub classes: Option<usize>,
    pub tau: f64,
    pub parametrization: Parametrization,
    pub estimator: EstimatorKind,
    pub init: InitScheme,
    pub residual_fraction: Option<(f64, f64)>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSpec::Parity(4),
            holdout: true,
            out: PathBuf::from("out"),
            seed: 0,
            thresholds: 1,
            layer_width: 256,
            base_layers: 4,
            depth_scale: 1,
            final_width_multiplier: 1,
            classes: None,
            tau: 10.0,
            parametrization: Parametrization::Iwp,
            estimator: EstimatorKind::Sin01,
            init: InitScheme::residual(),
            residual_fraction: None,
            train: TrainConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| DlgnError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "default" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "default".to_string(), |x| x.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut targets: Option<Vec<GateId>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DlgnError::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "init_targets" {
                targets = Some(parse_targets(value)?);
                continue;
            }
            cfg.set(key, value).map_err(|e| match e {
                DlgnError::Config(message) => DlgnError::Parse {
                    line: i + 1,
                    message,
                },
                other => other,
            })?;
        }
        if let Some(t) = targets {
            match &mut cfg.init.kind {
                InitKind::HeavyTailSet(set) => *set = t,
                _ if t.is_empty() => {}
                _ => {
                    return Err(DlgnError::Config(
                        "init_targets is only valid with init = heavy_tail".into(),
                    ))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key. `init_targets` is only meaningful after `init`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "dataset" => self.dataset = value.parse()?,
            "holdout" => self.holdout = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => {
                self.seed = num(key, value)?;
                t.seed = self.seed;
            }
            "thresholds" => self.thresholds = num(key, value)?,
            "layer_width" => self.layer_width = num(key, value)?,
            "base_layers" => self.base_layers = num(key, value)?,
            "depth_scale" => self.depth_scale = num(key, value)?,
            "final_width_multiplier" => self.final_width_multiplier = num(key, value)?,
            "classes" => {
                self.classes = if value == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "tau" => self.tau = num(key, value)?,
            "parametrization" => self.parametrization = value.parse()?,
            "estimator" => self.estimator = value.parse()?,
            "init" => {
                let keep = self.init.clone();
                let kind = match value {
                    "gaussian" => InitKind::Gaussian,
                    "residual" => InitKind::Residual,
                    "and_or" => InitKind::HeavyTailSet(vec![GateId::AND, GateId::OR]),
                    "uniform16" => InitKind::Uniform16,
                    "heavy_tail" => match keep.kind {
                        InitKind::HeavyTailSet(t) => InitKind::HeavyTailSet(t),
                        _ => InitKind::HeavyTailSet(Vec::new()),
                    },
                    other => {
                        return Err(DlgnError::Config(format!("unknown init scheme `{other}`")))
                    }
                };
                self.init.kind = kind;
            }
            "init_targets" => match &mut self.init.kind {
                InitKind::HeavyTailSet(set) => *set = parse_targets(value)?,
                _ => {
                    return Err(DlgnError::Config(
                        "init_targets is only valid with init = heavy_tail".into(),
                    ))
                }
            },
            "init_sigma" => self.init.sigma = opt_num(key, value)?,
            "init_mu" => self.init.mu = opt_num(key, value)?,
            "op_bias" => self.init.op_bias = num(key, value)?,
            "op_jitter" => self.init.op_jitter = num(key, value)?,
            "residual_fraction" => {
                self.residual_fraction = if value == "none" {
                    None
                } else {
                    let (a, b) = value.split_once(',').ok_or_else(|| {
                        DlgnError::Config("residual_fraction must be `none` or `start,end`".into())
                    })?;
                    Some((num(key, a.trim())?, num(key, b.trim())?))
                }
            }
            "learning_rate" => t.learning_rate = num(key, value)?,
            "steps" => t.steps = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "accumulation" => t.accumulation = num(key, value)?,
            "beta1" => t.beta1 = num(key, value)?,
            "beta2" => t.beta2 = num(key, value)?,
            "epsilon" => t.epsilon = num(key, value)?,
            "weight_decay" => t.weight_decay = num(key, value)?,
            "eval_every" => t.eval_every = num(key, value)?,
            "p_intervene" => t.regularization.p_intervene = num(key, value)?,
            "intervention" => t.regularization.strategy = value.parse::<InterventionStrategy>()?,
            "p_dropout" => t.regularization.p_dropout = num(key, value)?,
            other => return Err(DlgnError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds == 0 {
            return Err(DlgnError::Config("thresholds must be positive".into()));
        }
        if self.classes == Some(0) {
            return Err(DlgnError::Config("classes must be positive".into()));
        }
        self.init.validate()?;
        self.train.validate(self.parametrization)
    }

    /// Network shape for a dataset with `input_dim` features and `classes` classes.
    pub fn network_config(
        &self,
        input_dim: usize,
        dataset_classes: usize,
    ) -> Result<NetworkConfig> {
        let classes = self.classes.unwrap_or(dataset_classes);
        if classes < dataset_classes {
            return Err(DlgnError::Config(format!(
                "classes = {classes} but the dataset has {dataset_classes}"
            )));
        }
        let cfg = NetworkConfig {
            encoder: EncoderConfig::new(self.thresholds, input_dim)?,
            layer_width: self.layer_width,
            base_layers: self.base_layers,
            depth_scale: self.depth_scale,
            class_count: classes,
            tau: self.tau,
            parametrization: self.parametrization,
            estimator: self.estimator,
            init: self.init.clone(),
            residual_fraction: self.residual_fraction,
            final_width_multiplier: self.final_width_multiplier,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `(train, test)` for the configured dataset and holdout policy.
    pub fn load_datasets(&self) -> Result<(Dataset, Dataset)> {
        let (train, test) = ingest(&self.dataset)?;
        if self.holdout {
            Ok((train, test))
        } else {
            let all = train.concat(&test)?;
            let empty = all.select(&[]);
            Ok((all, empty))
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// Every key with its effective value, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let (init, targets) = match &self.init.kind {
            InitKind::Gaussian => ("gaussian", String::new()),
            InitKind::Residual => ("residual", String::new()),
            InitKind::Uniform16 => ("uniform16", String::new()),
            InitKind::HeavyTailSet(set) => (
                "heavy_tail",
                set.iter()
                    .map(|g| g.id().to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        };
        let Regularization {
            p_intervene,
            strategy,
            p_dropout,
        } = t.regularization;
        let values: Vec<String> = vec![
            self.dataset.to_string(),
            self.holdout.to_string(),
            self.out.display().to_string(),
            self.seed.to_string(),
            self.thresholds.to_string(),
            self.layer_width.to_string(),
            self.base_layers.to_string(),
            self.depth_scale.to_string(),
            self.final_width_multiplier.to_string(),
            self.classes
                .map_or_else(|| "auto".into(), |c| c.to_string()),
            self.tau.to_string(),
            self.parametrization.to_string(),
            self.estimator.to_string(),
            init.to_string(),
            targets,
            fmt_opt(self.init.sigma),
            fmt_opt(self.init.mu),
            self.init.op_bias.to_string(),
            self.init.op_jitter.to_string(),
            self.residual_fraction
                .map_or_else(|| "none".into(), |(a, b)| format!("{a},{b}")),
            t.learning_rate.to_string(),
            t.steps.to_string(),
            t.batch_size.to_string(),
            t.accumulation.to_string(),
            t.beta1.to_string(),
            t.beta2.to_string(),
            t.epsilon.to_string(),
            t.weight_decay.to_string(),
            t.eval_every.to_string(),
            p_intervene.to_string(),
            strategy.to_string(),
            p_dropout.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{}\n", format!("{k} = {v}").trim_end()))
            .collect()
    }
}

fn parse_targets(value: &str) -> Result<Vec<GateId>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u8>()
                .ok()
                .and_then(|id| GateId::new(id).ok())
                .or_else(|| GateId::from_mnemonic(s))
                .ok_or_else(|| DlgnError::Config(format!("unknown gate `{s}` in init_targets")))
        })
        .collect()
}
