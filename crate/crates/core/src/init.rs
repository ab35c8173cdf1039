//! Parameter initialization schemes.
//!
//! A scheme either draws i.i.d. Gaussian logits, or biases every neuron
//! toward one target gate. For OP neurons the bias is a large logit on the
//! target; for IWP neurons each corner logit is drawn from `N(+mu, sigma^2)`
//! when the target's truth bit is 1 and from `N(-mu, sigma^2)` otherwise,
//! which piles the corner estimates up near 0 and 1.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DlgnError, Result};
use crate::gates::{self, GateId, GATE_COUNT};
use crate::neuron::{EstimatorKind, IwpParams, OpParams};

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// i.i.d. `N(0, sigma^2)` logits.
    Gaussian,
    /// Bias toward the pass-through gate `A`.
    Residual,
    /// Bias toward a target drawn uniformly per neuron from the set.
    HeavyTailSet(Vec<GateId>),
    /// Bias toward a target drawn uniformly from all sixteen gates.
    Uniform16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitScheme {
    pub kind: InitKind,
    /// Logit spread. Gaussian kind: defaults to 1. Biased kinds on IWP
    /// neurons: defaults per estimator (see [`default_iwp_spread`]).
    pub sigma: Option<f64>,
    /// IWP corner shift; defaults per estimator (see [`default_iwp_shift`]).
    pub mu: Option<f64>,
    /// OP logit given to the target gate.
    pub op_bias: f64,
    /// Standard deviation of Gaussian jitter added to all OP logits of biased kinds.
    pub op_jitter: f64,
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::residual()
    }
}

/// Default OP bias toward the target gate.
pub const DEFAULT_OP_BIAS: f64 = 5.0;

pub fn default_iwp_shift(estimator: EstimatorKind) -> f64 {
    match estimator {
        EstimatorKind::Sin01 => 1.2,
        EstimatorKind::Sigmoid => 3.0,
        EstimatorKind::CappedLinearSt => 1.0,
    }
}

pub fn default_iwp_spread(estimator: EstimatorKind) -> f64 {
    match estimator {
        EstimatorKind::Sin01 => 0.25,
        EstimatorKind::Sigmoid => 0.5,
        EstimatorKind::CappedLinearSt => 0.25,
    }
}

impl InitScheme {
    fn with_kind(kind: InitKind) -> Self {
        InitScheme {
            kind,
            sigma: None,
            mu: None,
            op_bias: DEFAULT_OP_BIAS,
            op_jitter: 0.0,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        InitScheme {
            sigma: Some(sigma),
            ..InitScheme::with_kind(InitKind::Gaussian)
        }
    }

    pub fn residual() -> Self {
        InitScheme::with_kind(InitKind::Residual)
    }

    pub fn heavy_tail(targets: &[GateId]) -> Self {
        InitScheme::with_kind(InitKind::HeavyTailSet(targets.to_vec()))
    }

    /// Targets AND and OR with equal probability.
    pub fn and_or() -> Self {
        InitScheme::heavy_tail(&[GateId::AND, GateId::OR])
    }

    pub fn uniform16() -> Self {
        InitScheme::with_kind(InitKind::Uniform16)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("mu", self.mu)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(DlgnError::Config(format!("init {name} must be finite")));
                }
            }
        }
        if matches!(self.sigma, Some(s) if s < 0.0) {
            return Err(DlgnError::Config("init sigma must be >= 0".into()));
        }
        if !(self.op_jitter >= 0.0 && self.op_jitter.is_finite()) {
            return Err(DlgnError::Config("init op_jitter must be >= 0".into()));
        }
        if !self.op_bias.is_finite() {
            return Err(DlgnError::Config("init op_bias must be finite".into()));
        }
        if let InitKind::HeavyTailSet(t) = &self.kind {
            if t.is_empty() {
                return Err(DlgnError::Config(
                    "heavy-tail target set must not be empty".into(),
                ));
            }
        }
        Ok(())
    }

    /// Gates a neuron may be biased toward; empty for the Gaussian kind.
    pub fn target_gates(&self) -> Vec<GateId> {
        match &self.kind {
            InitKind::Gaussian => Vec::new(),
            InitKind::Residual => vec![GateId::A],
            InitKind::HeavyTailSet(t) => t.clone(),
            InitKind::Uniform16 => GateId::all().collect(),
        }
    }

    /// True iff the target set never contains both a gate and its negation.
    /// The Gaussian kind treats every gate and its negation alike and is
    /// reported as symmetric.
    pub fn is_negation_asymmetric(&self) -> bool {
        let targets: BTreeSet<GateId> = self.target_gates().into_iter().collect();
        !targets.is_empty() && targets.iter().all(|g| !targets.contains(&g.negation()))
    }

    pub fn iwp_shift(&self, estimator: EstimatorKind) -> f64 {
        self.mu.unwrap_or_else(|| default_iwp_shift(estimator))
    }

    pub fn iwp_spread(&self, estimator: EstimatorKind) -> f64 {
        match self.kind {
            InitKind::Gaussian => self.sigma.unwrap_or(1.0),
            _ => self.sigma.unwrap_or_else(|| default_iwp_spread(estimator)),
        }
    }

    fn draw_target<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<GateId> {
        match &self.kind {
            InitKind::Gaussian => None,
            InitKind::Residual => Some(GateId::A),
            InitKind::HeavyTailSet(t) => Some(t[rng.random_range(0..t.len())]),
            InitKind::Uniform16 => Some(GateId::from_index(rng.random_range(0..GATE_COUNT))),
        }
    }
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated spread")
}

/// Truth bits of the target gate, used to choose the sign of each corner shift.
pub fn target_bits(gate: GateId) -> [u8; 4] {
    gates::truth_table(gate)
}

pub fn init_op<R: Rng + ?Sized>(scheme: &InitScheme, rng: &mut R) -> OpParams {
    let mut logits = [0.0; GATE_COUNT];
    match scheme.draw_target(rng) {
        None => {
            let dist = normal(0.0, scheme.sigma.unwrap_or(1.0));
            for l in &mut logits {
                *l = dist.sample(rng);
            }
        }
        Some(target) => {
            if scheme.op_jitter > 0.0 {
                let dist = normal(0.0, scheme.op_jitter);
                for l in &mut logits {
                    *l = dist.sample(rng);
                }
            }
            logits[target.index()] += scheme.op_bias;
        }
    }
    OpParams::new(logits)
}

pub fn init_iwp<R: Rng + ?Sized>(
    scheme: &InitScheme,
    estimator: EstimatorKind,
    rng: &mut R,
) -> IwpParams {
    let spread = scheme.iwp_spread(estimator);
    let logits = match scheme.draw_target(rng) {
        None => {
            let dist = normal(0.0, spread);
            std::array::from_fn(|_| dist.sample(rng))
        }
        Some(target) => {
            let shift = scheme.iwp_shift(estimator);
            let bits = target_bits(target);
            std::array::from_fn(|k| {
                let mean = if bits[k] == 1 { shift } else { -shift };
                normal(mean, spread).sample(rng)
            })
        }
    };
    IwpParams::new(logits, estimator)
}
