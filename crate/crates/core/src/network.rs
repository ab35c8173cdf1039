//! Dense logic gate networks.
//!
//! Input features in `[0, 1]` are thermometer-encoded into bits, passed through
//! a stack of logic layers with fixed random two-input wiring, and summed per
//! class by the GroupSum head.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{CircuitNode, DiscreteCircuit, Ref};
use crate::error::{DlgnError, Result};
use crate::gates::{GateId, GATE_COUNT};
use crate::init::{self, InitScheme};
use crate::matrix::Matrix;
use crate::neuron::{self, EstimatorKind, IwpParams, OpParams};
use crate::rng::{self, tags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parametrization {
    /// Softmax over the sixteen gates.
    Op,
    /// One estimate per input corner.
    Iwp,
}

impl Parametrization {
    pub fn params_per_neuron(self) -> usize {
        match self {
            Parametrization::Op => GATE_COUNT,
            Parametrization::Iwp => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parametrization::Op => "op",
            Parametrization::Iwp => "iwp",
        }
    }
}

impl fmt::Display for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parametrization {
    type Err = DlgnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "op" => Ok(Parametrization::Op),
            "iwp" => Ok(Parametrization::Iwp),
            other => Err(DlgnError::Config(format!(
                "unknown parametrization `{other}`"
            ))),
        }
    }
}

/// Thermometer encoder: `k` evenly spaced thresholds `i / (k + 1)` per feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub thresholds: usize,
    pub input_dim: usize,
}

impl EncoderConfig {
    pub fn new(thresholds: usize, input_dim: usize) -> Result<Self> {
        let enc = EncoderConfig {
            thresholds,
            input_dim,
        };
        enc.validate()?;
        Ok(enc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds == 0 || self.input_dim == 0 {
            return Err(DlgnError::Config(
                "encoder thresholds and input_dim must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn output_width(&self) -> usize {
        self.thresholds * self.input_dim
    }

    pub fn threshold_values(&self) -> Vec<f64> {
        threshold_values(self.thresholds)
    }

    /// Feature-major: bits of feature `f` occupy `f*k .. (f+1)*k`.
    pub fn encode(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_dim {
            return Err(DlgnError::Contract(format!(
                "feature width {} does not match encoder input_dim {}",
                features.cols(),
                self.input_dim
            )));
        }
        let thresholds = self.threshold_values();
        let mut out = Matrix::zeros(features.rows(), self.output_width());
        for r in 0..features.rows() {
            let row = features.row(r);
            let dst = out.row_mut(r);
            for (f, &x) in row.iter().enumerate() {
                check_feature(x)?;
                for (i, &t) in thresholds.iter().enumerate() {
                    dst[f * self.thresholds + i] = if x > t { 1.0 } else { 0.0 };
                }
            }
        }
        Ok(out)
    }
}

fn threshold_values(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

fn check_feature(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(DlgnError::Domain(format!("feature {x} outside [0, 1]")))
    }
}

/// Bits `x > i / (k + 1)` for each feature and threshold, feature-major.
pub fn thermometer_encode(features: &[f64], k: usize) -> Result<Vec<u8>> {
    if k == 0 {
        return Err(DlgnError::Config(
            "thermometer needs at least one threshold".into(),
        ));
    }
    let thresholds = threshold_values(k);
    let mut bits = Vec::with_capacity(features.len() * k);
    for &x in features {
        check_feature(x)?;
        bits.extend(thresholds.iter().map(|&t| u8::from(x > t)));
    }
    Ok(bits)
}

/// Fixed input pairs `(a, b)` of every neuron in one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wiring {
    pub pairs: Vec<(u32, u32)>,
}

impl Wiring {
    /// Uniform with replacement, `a` and `b` independent.
    pub fn random<R: Rng + ?Sized>(width: usize, input_width: usize, rng: &mut R) -> Self {
        let pairs = (0..width)
            .map(|_| {
                let a = rng.random_range(0..input_width) as u32;
                let b = rng.random_range(0..input_width) as u32;
                (a, b)
            })
            .collect();
        Wiring { pairs }
    }

    pub fn validate(&self, input_width: usize) -> Result<()> {
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            if a as usize >= input_width || b as usize >= input_width {
                return Err(DlgnError::Validation(format!(
                    "neuron {k} wired to ({a}, {b}) but input width is {input_width}"
                )));
            }
        }
        Ok(())
    }
}

/// One layer of logic neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicLayer {
    input_width: usize,
    wiring: Wiring,
    parametrization: Parametrization,
    estimator: EstimatorKind,
    /// `width * params_per_neuron` logits, neuron-major.
    logits: Vec<f64>,
    /// Neurons fixed to forward their `a` input.
    residual: Vec<bool>,
}

impl LogicLayer {
    pub fn new(
        input_width: usize,
        wiring: Wiring,
        parametrization: Parametrization,
        estimator: EstimatorKind,
        logits: Vec<f64>,
        residual: Vec<bool>,
    ) -> Result<Self> {
        let width = wiring.pairs.len();
        if width == 0 {
            return Err(DlgnError::Config("layer width must be positive".into()));
        }
        wiring.validate(input_width)?;
        if logits.len() != width * parametrization.params_per_neuron() {
            return Err(DlgnError::Contract(format!(
                "expected {} logits, got {}",
                width * parametrization.params_per_neuron(),
                logits.len()
            )));
        }
        if residual.len() != width {
            return Err(DlgnError::Contract("residual mask length mismatch".into()));
        }
        Ok(LogicLayer {
            input_width,
            wiring,
            parametrization,
            estimator,
            logits,
            residual,
        })
    }

    pub fn width(&self) -> usize {
        self.wiring.pairs.len()
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn residual(&self) -> &[bool] {
        &self.residual
    }

    pub fn is_residual(&self, k: usize) -> bool {
        self.residual[k]
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    fn neuron_logits(&self, k: usize) -> &[f64] {
        let n = self.parametrization.params_per_neuron();
        &self.logits[k * n..(k + 1) * n]
    }

    pub fn op_params(&self, k: usize) -> Option<OpParams> {
        (self.parametrization == Parametrization::Op)
            .then(|| OpParams::new(self.neuron_logits(k).try_into().expect("16 logits")))
    }

    pub fn iwp_params(&self, k: usize) -> Option<IwpParams> {
        (self.parametrization == Parametrization::Iwp).then(|| {
            IwpParams::new(
                self.neuron_logits(k).try_into().expect("4 logits"),
                self.estimator,
            )
        })
    }

    pub fn set_op_params(&mut self, k: usize, params: &OpParams) -> Result<()> {
        if self.parametrization != Parametrization::Op {
            return Err(DlgnError::Contract("layer is not OP".into()));
        }
        self.logits[k * GATE_COUNT..(k + 1) * GATE_COUNT].copy_from_slice(&params.logits);
        Ok(())
    }

    pub fn set_iwp_params(&mut self, k: usize, params: &IwpParams) -> Result<()> {
        if self.parametrization != Parametrization::Iwp {
            return Err(DlgnError::Contract("layer is not IWP".into()));
        }
        self.logits[k * 4..(k + 1) * 4].copy_from_slice(&params.logits);
        Ok(())
    }

    /// Output of each neuron at the four binary input corners.
    pub fn corner_values(&self) -> Result<Vec<[f64; 4]>> {
        if let Some(pos) = self.logits.iter().position(|v| !v.is_finite()) {
            return Err(DlgnError::numeric(
                None,
                format!(
                    "non-finite logit in neuron {}",
                    pos / self.parametrization.params_per_neuron()
                ),
            ));
        }
        Ok((0..self.width())
            .map(|k| {
                if self.residual[k] {
                    return [0.0, 0.0, 1.0, 1.0];
                }
                let l = self.neuron_logits(k);
                match self.parametrization {
                    Parametrization::Op => {
                        let w = neuron::softmax16(l.try_into().expect("16 logits"));
                        neuron::corners_from_weights(&w)
                    }
                    Parametrization::Iwp => std::array::from_fn(|j| self.estimator.value(l[j])),
                }
            })
            .collect())
    }

    /// Hardened gate of each neuron.
    pub fn discretize(&self) -> Result<Vec<GateId>> {
        (0..self.width())
            .map(|k| {
                if self.residual[k] {
                    return Ok(GateId::A);
                }
                match self.parametrization {
                    Parametrization::Op => {
                        Ok(neuron::discretize_op(&self.op_params(k).expect("op layer")))
                    }
                    Parametrization::Iwp => {
                        neuron::discretize_iwp(&self.iwp_params(k).expect("iwp layer"))
                    }
                }
            })
            .collect()
    }

    /// Maps accumulated gradients with respect to the corner values onto the
    /// logits. Residual neurons get zero gradient.
    pub fn logit_grads_from_corners(&self, corner_grads: &[[f64; 4]]) -> Vec<f64> {
        let n = self.parametrization.params_per_neuron();
        let mut out = vec![0.0; self.logits.len()];
        for (k, dc) in corner_grads.iter().enumerate() {
            if self.residual[k] {
                continue;
            }
            let l = self.neuron_logits(k);
            let dst = &mut out[k * n..(k + 1) * n];
            match self.parametrization {
                Parametrization::Iwp => {
                    for j in 0..4 {
                        dst[j] = dc[j] * self.estimator.derivative(l[j]);
                    }
                }
                Parametrization::Op => {
                    let w = neuron::softmax16(l.try_into().expect("16 logits"));
                    let mut dw = [0.0; GATE_COUNT];
                    for gate in GateId::all() {
                        let bits = gate.truth_bits();
                        dw[gate.index()] = (0..4).filter(|&j| bits[j] == 1).map(|j| dc[j]).sum();
                    }
                    let mean: f64 = w.iter().zip(&dw).map(|(a, b)| a * b).sum();
                    for i in 0..GATE_COUNT {
                        dst[i] = w[i] * (dw[i] - mean);
                    }
                }
            }
        }
        out
    }

    /// Serialized size in bytes of the layer's parameter block.
    pub fn param_block_bytes(&self) -> usize {
        self.logits.len() * std::mem::size_of::<f64>()
    }
}

/// Monomial coefficients `[c00, c10 - c00, c01 - c00, c00 - c01 - c10 + c11]`
/// so that `g = m0 + m1 p + m2 q + m3 p q`. Exact for pass-through corners.
#[inline]
pub(crate) fn monomial(c: &[f64; 4]) -> [f64; 4] {
    [c[0], c[2] - c[0], c[1] - c[0], c[0] - c[1] - c[2] + c[3]]
}

#[inline]
pub(crate) fn eval_monomial(m: &[f64; 4], p: f64, q: f64) -> f64 {
    m[0] + m[1] * p + m[2] * q + m[3] * p * q
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub encoder: EncoderConfig,
    pub layer_width: usize,
    pub base_layers: usize,
    pub depth_scale: usize,
    pub class_count: usize,
    /// GroupSum temperature.
    pub tau: f64,
    pub parametrization: Parametrization,
    pub estimator: EstimatorKind,
    pub init: InitScheme,
    /// Fraction of residual neurons at the first and last layer.
    pub residual_fraction: Option<(f64, f64)>,
    pub final_width_multiplier: usize,
}

impl NetworkConfig {
    pub fn new(
        encoder: EncoderConfig,
        layer_width: usize,
        layers: usize,
        class_count: usize,
    ) -> Self {
        NetworkConfig {
            encoder,
            layer_width,
            base_layers: layers,
            depth_scale: 1,
            class_count,
            tau: 1.0,
            parametrization: Parametrization::Iwp,
            estimator: EstimatorKind::Sin01,
            init: InitScheme::residual(),
            residual_fraction: None,
            final_width_multiplier: 1,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.base_layers * self.depth_scale
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        let n = self.layer_count();
        (0..n)
            .map(|l| {
                if l + 1 == n {
                    self.layer_width * self.final_width_multiplier
                } else {
                    self.layer_width
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.layer_width == 0 || self.base_layers == 0 || self.depth_scale == 0 {
            return Err(DlgnError::Config(
                "layer_width, base_layers and depth_scale must be positive".into(),
            ));
        }
        if self.final_width_multiplier == 0 {
            return Err(DlgnError::Config(
                "final_width_multiplier must be positive".into(),
            ));
        }
        if self.class_count == 0 {
            return Err(DlgnError::Config("class_count must be positive".into()));
        }
        let final_width = self.layer_width * self.final_width_multiplier;
        if !final_width.is_multiple_of(self.class_count) {
            return Err(DlgnError::Config(format!(
                "final layer width {final_width} not divisible by {} classes",
                self.class_count
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(DlgnError::Config("tau must be positive".into()));
        }
        if let Some((s, e)) = self.residual_fraction {
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&e) {
                return Err(DlgnError::Config(
                    "residual fractions must lie in [0, 1]".into(),
                ));
            }
        }
        self.init.validate()
    }

    /// Number of residual neurons per layer. Grows linearly from the start
    /// fraction at layer 1 to the end fraction at the last layer and never
    /// shrinks, so every residual stream continues to the last layer.
    pub fn residual_counts(&self) -> Vec<usize> {
        let widths = self.layer_widths();
        let n = widths.len();
        let Some((start, end)) = self.residual_fraction else {
            return vec![0; n];
        };
        let mut counts = Vec::with_capacity(n);
        let mut prev = 0usize;
        for (l, &w) in widths.iter().enumerate() {
            let t = if n == 1 {
                0.0
            } else {
                l as f64 / (n - 1) as f64
            };
            let frac = start + (end - start) * t;
            let cap = if l == 0 {
                w.min(self.encoder.output_width())
            } else {
                w.min(widths[l - 1])
            };
            let count = ((frac * w as f64).floor() as usize).max(prev).min(cap);
            counts.push(count);
            prev = count;
        }
        counts
    }
}

/// How a gate output is replaced during a random intervention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterventionStrategy {
    Constant(f64),
    Uniform,
    BernoulliHalf,
}

impl fmt::Display for InterventionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterventionStrategy::Constant(c) => write!(f, "constant:{c}"),
            InterventionStrategy::Uniform => f.write_str("uniform"),
            InterventionStrategy::BernoulliHalf => f.write_str("bernoulli_half"),
        }
    }
}

impl FromStr for InterventionStrategy {
    type Err = DlgnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InterventionStrategy::Uniform),
            "bernoulli_half" => Ok(InterventionStrategy::BernoulliHalf),
            _ => {
                let value = s
                    .strip_prefix("constant:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| (0.0..=1.0).contains(v))
                    .ok_or_else(|| {
                        DlgnError::Config(format!("unknown intervention strategy `{s}`"))
                    })?;
                Ok(InterventionStrategy::Constant(value))
            }
        }
    }
}

/// Replaces each activation with probability `p` and returns the mask of
/// replaced entries (which must receive no gradient).
pub fn apply_interventions<R: Rng + ?Sized>(
    activations: &mut [f64],
    p: f64,
    strategy: InterventionStrategy,
    rng: &mut R,
) -> Vec<bool> {
    let mut mask = vec![false; activations.len()];
    if p <= 0.0 {
        return mask;
    }
    for (v, m) in activations.iter_mut().zip(mask.iter_mut()) {
        if rng.random::<f64>() < p {
            *m = true;
            *v = match strategy {
                InterventionStrategy::Constant(c) => c,
                InterventionStrategy::Uniform => rng.random::<f64>(),
                InterventionStrategy::BernoulliHalf => f64::from(u8::from(rng.random::<bool>())),
            };
        }
    }
    mask
}

/// Random gate interventions. Row `r` of a batch draws from its own stream
/// seeded by `(seed, row_offset + r)`, so results do not depend on how rows
/// are grouped into batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intervention {
    pub p: f64,
    pub strategy: InterventionStrategy,
    pub seed: u64,
    pub row_offset: u64,
}

/// Training-time perturbations applied during a forward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardHooks {
    pub intervention: Option<Intervention>,
    /// Final-layer gates forced to 0 and cut from the gradient.
    pub dropout_mask: Option<Vec<bool>>,
}

/// Everything backward needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the encoded input, `activations[l]` the output of layer `l`.
    pub activations: Vec<Matrix>,
    pub logits: Matrix,
    pub(crate) monomials: Vec<Vec<[f64; 4]>>,
    pub(crate) intervened: Vec<Option<Vec<bool>>>,
    pub(crate) dropout: Option<Vec<bool>>,
    pub(crate) version: u64,
}

impl ForwardTrace {
    pub fn final_activations(&self) -> &Matrix {
        self.activations.last().expect("at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    encoder: EncoderConfig,
    layers: Vec<LogicLayer>,
    classes: usize,
    tau: f64,
    version: u64,
}

impl Network {
    pub fn from_layers(
        encoder: EncoderConfig,
        layers: Vec<LogicLayer>,
        classes: usize,
        tau: f64,
    ) -> Result<Self> {
        encoder.validate()?;
        if layers.is_empty() {
            return Err(DlgnError::Config("network needs at least one layer".into()));
        }
        let mut width = encoder.output_width();
        for (l, layer) in layers.iter().enumerate() {
            if layer.input_width() != width {
                return Err(DlgnError::Config(format!(
                    "layer {} expects {} inputs but previous width is {width}",
                    l + 1,
                    layer.input_width()
                )));
            }
            if layer.parametrization() != layers[0].parametrization() {
                return Err(DlgnError::Config("mixed parametrizations".into()));
            }
            width = layer.width();
        }
        if classes == 0 || !width.is_multiple_of(classes) {
            return Err(DlgnError::Config(format!(
                "final width {width} not divisible by {classes} classes"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(DlgnError::Config("tau must be positive".into()));
        }
        Ok(Network {
            encoder,
            layers,
            classes,
            tau,
            version: 0,
        })
    }

    pub fn encoder(&self) -> &EncoderConfig {
        &self.encoder
    }

    pub fn layers(&self) -> &[LogicLayer] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &LogicLayer {
        &self.layers[l]
    }

    /// Mutable access to one layer. Invalidates previous forward traces.
    pub fn layer_mut(&mut self, l: usize) -> &mut LogicLayer {
        self.version += 1;
        &mut self.layers[l]
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn parametrization(&self) -> Parametrization {
        self.layers[0].parametrization()
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.layers[0].estimator()
    }

    pub fn input_width(&self) -> usize {
        self.encoder.output_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").width()
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.layers.iter().map(LogicLayer::width).collect()
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(LogicLayer::width).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Deterministic forward pass without training hooks.
    pub fn forward(&self, batch: &Matrix) -> Result<ForwardTrace> {
        self.forward_with(batch, &ForwardHooks::default())
    }

    /// Forward pass over already encoded rows.
    pub fn forward_with(&self, batch: &Matrix, hooks: &ForwardHooks) -> Result<ForwardTrace> {
        if batch.cols() != self.input_width() {
            return Err(DlgnError::Contract(format!(
                "row width {} does not match encoded input width {}",
                batch.cols(),
                self.input_width()
            )));
        }
        if let Some(v) = batch.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DlgnError::Domain(format!("input value {v} outside [0, 1]")));
        }
        if let Some(mask) = &hooks.dropout_mask {
            if mask.len() != self.output_width() {
                return Err(DlgnError::Contract("dropout mask width mismatch".into()));
            }
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.clone());
        let mut monomials = Vec::with_capacity(self.layers.len());
        let mut intervened = Vec::with_capacity(self.layers.len());
        let mut row_rngs: Vec<rng::DetRng> = match hooks.intervention {
            Some(iv) if iv.p > 0.0 => (0..batch.rows() as u64)
                .map(|r| rng::stream(iv.seed, tags::REGULARIZE, iv.row_offset + r))
                .collect(),
            _ => Vec::new(),
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let mono: Vec<[f64; 4]> = layer
                .corner_values()
                .map_err(|e| relabel_layer(e, l + 1))?
                .iter()
                .map(monomial)
                .collect();
            let mut out = layer_forward(layer, &mono, activations.last().expect("input"));
            let mask = match hooks.intervention {
                Some(iv) if iv.p > 0.0 => {
                    let mut mask = Vec::with_capacity(out.rows() * out.cols());
                    for (r, rng) in row_rngs.iter_mut().enumerate() {
                        mask.extend(apply_interventions(out.row_mut(r), iv.p, iv.strategy, rng));
                    }
                    Some(mask)
                }
                _ => None,
            };
            monomials.push(mono);
            intervened.push(mask);
            activations.push(out);
        }
        let dropout = hooks.dropout_mask.clone();
        let last = activations.last_mut().expect("layers");
        if let Some(mask) = &dropout {
            for r in 0..last.rows() {
                for (v, &m) in last.row_mut(r).iter_mut().zip(mask) {
                    if m {
                        *v = 0.0;
                    }
                }
            }
        }
        let mut logits = Matrix::zeros(batch.rows(), self.classes);
        for r in 0..batch.rows() {
            let scores = group_sum(last.row(r), self.classes, self.tau)?;
            logits.row_mut(r).copy_from_slice(&scores);
        }
        Ok(ForwardTrace {
            activations,
            logits,
            monomials,
            intervened,
            dropout,
            version: self.version,
        })
    }

    /// GroupSum logits without retaining intermediate activations.
    pub fn infer(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols() != self.input_width() {
            return Err(DlgnError::Contract(format!(
                "row width {} does not match encoded input width {}",
                batch.cols(),
                self.input_width()
            )));
        }
        let mut current = batch.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mono: Vec<[f64; 4]> = layer
                .corner_values()
                .map_err(|e| relabel_layer(e, l + 1))?
                .iter()
                .map(monomial)
                .collect();
            current = layer_forward(layer, &mono, &current);
        }
        let mut logits = Matrix::zeros(batch.rows(), self.classes);
        for r in 0..batch.rows() {
            let scores = group_sum(current.row(r), self.classes, self.tau)?;
            logits.row_mut(r).copy_from_slice(&scores);
        }
        Ok(logits)
    }

    /// Predicted class per row (argmax of the GroupSum logits, lowest class on ties).
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<usize>> {
        Ok(self.infer(batch)?.iter_rows().map(argmax).collect())
    }

    /// Final-layer gates reachable through the wiring from any selected input channel.
    /// A channel is one original feature, i.e. its `k` thermometer bits.
    pub fn reachable_from_channels(&self, selected: &[bool]) -> Result<Vec<bool>> {
        if selected.len() != self.encoder.input_dim {
            return Err(DlgnError::Contract(
                "channel selection length mismatch".into(),
            ));
        }
        let k = self.encoder.thresholds;
        let mut tainted: Vec<bool> = (0..self.input_width()).map(|i| selected[i / k]).collect();
        for layer in &self.layers {
            tainted = layer
                .wiring
                .pairs
                .iter()
                .map(|&(a, b)| tainted[a as usize] || tainted[b as usize])
                .collect();
        }
        Ok(tainted)
    }

    /// Selects each input channel with probability `p` and masks every
    /// final-layer gate path-connected to a selected channel.
    pub fn dropout_mask<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<Vec<bool>> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DlgnError::Config(format!(
                "dropout probability {p} outside [0, 1]"
            )));
        }
        let selected: Vec<bool> = (0..self.encoder.input_dim)
            .map(|_| p > 0.0 && rng.random::<f64>() < p)
            .collect();
        self.reachable_from_channels(&selected)
    }

    /// Hardens every neuron and copies wiring and head.
    pub fn discretize(&self) -> Result<DiscreteCircuit> {
        let mut nodes = Vec::with_capacity(self.neuron_count());
        let mut offset: Option<u32> = None;
        for layer in &self.layers {
            let gates = layer.discretize()?;
            let start = nodes.len() as u32;
            let to_ref = |i: u32| match offset {
                None => Ref::Input(i),
                Some(o) => Ref::Node(o + i),
            };
            for (gate, &(a, b)) in gates.into_iter().zip(&layer.wiring.pairs) {
                nodes.push(CircuitNode {
                    gate,
                    a: to_ref(a),
                    b: to_ref(b),
                });
            }
            offset = Some(start);
        }
        let last = offset.expect("non-empty");
        let outputs = (0..self.output_width() as u32)
            .map(|i| Ref::Node(last + i))
            .collect();
        DiscreteCircuit::new(self.input_width(), nodes, outputs, self.classes)
    }

    /// Mutable access to all layers. Invalidates previous forward traces.
    pub fn layers_mut(&mut self) -> &mut [LogicLayer] {
        self.version += 1;
        &mut self.layers
    }
}

fn relabel_layer(e: DlgnError, layer: usize) -> DlgnError {
    match e {
        DlgnError::Numeric { message, .. } => DlgnError::Numeric {
            layer: Some(layer),
            message,
        },
        other => other,
    }
}

fn layer_forward(layer: &LogicLayer, mono: &[[f64; 4]], input: &Matrix) -> Matrix {
    let width = layer.width();
    let in_width = input.cols();
    let mut out = Matrix::zeros(input.rows(), width);
    let pairs = &layer.wiring.pairs;
    out.as_mut_slice()
        .par_chunks_mut(width)
        .zip(input.as_slice().par_chunks(in_width))
        .for_each(|(o, x)| {
            for k in 0..width {
                let (a, b) = pairs[k];
                o[k] = eval_monomial(&mono[k], x[a as usize], x[b as usize]);
            }
        });
    out
}

/// Sums `C` contiguous bins of the final layer and divides by `tau`.
pub fn group_sum(final_outputs: &[f64], classes: usize, tau: f64) -> Result<Vec<f64>> {
    if classes == 0 || !final_outputs.len().is_multiple_of(classes) {
        return Err(DlgnError::Contract(format!(
            "{} outputs cannot be split into {classes} equal bins",
            final_outputs.len()
        )));
    }
    let bin = final_outputs.len() / classes;
    Ok(final_outputs
        .chunks(bin.max(1))
        .take(classes)
        .map(|c| c.iter().sum::<f64>() / tau)
        .collect())
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Builds a network with random wiring and initialized parameters.
/// Each layer draws from its own seeded streams.
pub fn build_network(config: &NetworkConfig, seed: u64) -> Result<Network> {
    config.validate()?;
    let widths = config.layer_widths();
    let residual_counts = config.residual_counts();
    let input_width = config.encoder.output_width();
    let ppn = config.parametrization.params_per_neuron();
    let layers: Vec<LogicLayer> = (0..widths.len())
        .into_par_iter()
        .map(|l| {
            let in_w = if l == 0 { input_width } else { widths[l - 1] };
            let width = widths[l];
            let mut wiring_rng = rng::stream(seed, tags::WIRING, l as u64);
            let mut wiring = Wiring::random(width, in_w, &mut wiring_rng);
            let mut param_rng = rng::stream(seed, tags::PARAMS, l as u64);
            let mut logits = Vec::with_capacity(width * ppn);
            for _ in 0..width {
                match config.parametrization {
                    Parametrization::Op => logits
                        .extend_from_slice(&init::init_op(&config.init, &mut param_rng).logits),
                    Parametrization::Iwp => logits.extend_from_slice(
                        &init::init_iwp(&config.init, config.estimator, &mut param_rng).logits,
                    ),
                }
            }
            let mut residual = vec![false; width];
            for i in 0..residual_counts[l] {
                residual[i] = true;
                wiring.pairs[i] = (i as u32, i as u32);
                let pass: Vec<f64> = match config.parametrization {
                    Parametrization::Op => {
                        let mut z = [0.0; GATE_COUNT];
                        z[GateId::A.index()] = config.init.op_bias;
                        z.to_vec()
                    }
                    Parametrization::Iwp => IwpParams::exact(GateId::A, config.estimator)
                        .logits
                        .to_vec(),
                };
                logits[i * ppn..(i + 1) * ppn].copy_from_slice(&pass);
            }
            LogicLayer::new(
                in_w,
                wiring,
                config.parametrization,
                config.estimator,
                logits,
                residual,
            )
        })
        .collect::<Result<_>>()?;
    Network::from_layers(config.encoder, layers, config.class_count, config.tau)
}
