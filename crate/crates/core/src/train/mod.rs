//! Training: cross-entropy, reverse-mode backward through the network, Adam,
//! micro-batch accumulation and periodic evaluation.

mod diagnostics;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::circuit::{pack, DiscreteCircuit};
use crate::data::Dataset;
use crate::error::{DlgnError, Result};
use crate::matrix::Matrix;
use crate::network::{
    argmax, ForwardHooks, ForwardTrace, Intervention, InterventionStrategy, Network,
    Parametrization,
};
use crate::neuron::corner_basis;
use crate::rng::{self, tags};

pub use diagnostics::{
    concentration_samples, discretization_gap, gate_output_histogram, grad_norm_profile,
    histogram_csv, ConcentrationSummary, GapReport, HISTOGRAM_BINS,
};

/// Numerically stable loss and its gradient `softmax - one_hot`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(DlgnError::Contract(format!(
            "label {label} outside 0..{}",
            logits.len()
        )));
    }
    let top = argmax(logits);
    let max = logits[top];
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    // The top term is exactly 1; ln_1p keeps precision for confident logits.
    let rest: f64 = exps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, e)| e)
        .sum();
    let sum = 1.0 + rest;
    let loss = rest.ln_1p() + (max - logits[label]);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Per-layer gradient magnitudes recorded during one backward pass.
/// Entry `l - 1` belongs to logic layer `l`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradientProfile {
    /// Norm of the loss gradient with respect to the inputs of the layer.
    pub input_grad_norms: Vec<f64>,
    /// Norm of the loss gradient with respect to the outputs of the layer.
    pub output_grad_norms: Vec<f64>,
    /// `‖(d_p, d_q)‖ / ‖upstream‖` over all neurons and rows, before the
    /// partials are summed into shared predecessors.
    pub local_gains: Vec<f64>,
}

impl GradientProfile {
    /// Norm at layer 1 over norm at the last layer.
    pub fn end_to_end_ratio(&self) -> f64 {
        self.input_grad_norms[0] / self.input_grad_norms[self.input_grad_norms.len() - 1]
    }

    /// Ratios `gn_{l} / gn_{l+1}` of successive input-gradient norms.
    pub fn successive_ratios(&self) -> Vec<f64> {
        self.input_grad_norms
            .windows(2)
            .map(|w| w[0] / w[1])
            .collect()
    }
}

/// Gradients with respect to each neuron's four corner values, summed over
/// rows. They are mapped onto logits once per optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerGrads {
    layers: Vec<Vec<[f64; 4]>>,
}

impl CornerGrads {
    pub fn zeros(net: &Network) -> Self {
        CornerGrads {
            layers: net
                .layers()
                .iter()
                .map(|l| vec![[0.0; 4]; l.width()])
                .collect(),
        }
    }

    pub fn layer(&self, l: usize) -> &[[f64; 4]] {
        &self.layers[l]
    }

    pub fn reset(&mut self) {
        for layer in &mut self.layers {
            layer.fill([0.0; 4]);
        }
    }

    /// Logit gradients per layer, flat in the layer's parameter layout.
    pub fn logit_grads(&self, net: &Network) -> Vec<Vec<f64>> {
        net.layers()
            .par_iter()
            .zip(&self.layers)
            .map(|(layer, dc)| layer.logit_grads_from_corners(dc))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BackwardOutput {
    pub profile: GradientProfile,
    /// Gradient with respect to the encoded input rows.
    pub input_grad: Matrix,
}

/// Backpropagates `d_logits` (one row per sample) through the network that
/// produced `trace`, adding corner gradients into `acc`.
///
/// A neuron wired to the same predecessor as other neurons passes its partial
/// to it along with theirs; the predecessor receives the sum.
pub fn backward(
    net: &Network,
    trace: &ForwardTrace,
    d_logits: &Matrix,
    acc: &mut CornerGrads,
) -> Result<BackwardOutput> {
    if trace.version != net.version() {
        return Err(DlgnError::Contract(
            "activations are stale: parameters changed after the forward pass".into(),
        ));
    }
    let rows = trace.logits.rows();
    if d_logits.rows() != rows || d_logits.cols() != net.classes() {
        return Err(DlgnError::Contract("d_logits shape mismatch".into()));
    }
    if acc.layers.len() != net.layers().len() {
        return Err(DlgnError::Contract(
            "gradient accumulator shape mismatch".into(),
        ));
    }
    let n_layers = net.layers().len();
    let width = net.output_width();
    let bin = width / net.classes();
    let tau = net.tau();
    let mut upstream = Matrix::zeros(rows, width);
    for r in 0..rows {
        let d = d_logits.row(r);
        for (k, u) in upstream.row_mut(r).iter_mut().enumerate() {
            let masked = trace.dropout.as_ref().is_some_and(|m| m[k]);
            *u = if masked { 0.0 } else { d[k / bin] / tau };
        }
    }

    let mut profile = GradientProfile {
        input_grad_norms: vec![0.0; n_layers],
        output_grad_norms: vec![0.0; n_layers],
        local_gains: vec![0.0; n_layers],
    };
    for l in (0..n_layers).rev() {
        let layer = net.layer(l);
        let mono = &trace.monomials[l];
        let input = &trace.activations[l];
        if let Some(mask) = &trace.intervened[l] {
            for (u, &m) in upstream.as_mut_slice().iter_mut().zip(mask) {
                if m {
                    *u = 0.0;
                }
            }
        }
        let w = layer.width();
        let in_w = layer.input_width();
        let pairs = &layer.wiring().pairs;

        acc.layers[l]
            .par_iter_mut()
            .enumerate()
            .for_each(|(k, dc)| {
                let (a, b) = pairs[k];
                for r in 0..rows {
                    let u = upstream.get(r, k);
                    let x = input.row(r);
                    let e = corner_basis(x[a as usize], x[b as usize]);
                    for j in 0..4 {
                        dc[j] += u * e[j];
                    }
                }
            });

        let mut grad_in = Matrix::zeros(rows, in_w);
        let local: Vec<f64> = grad_in
            .as_mut_slice()
            .par_chunks_mut(in_w)
            .zip(upstream.as_slice().par_chunks(w))
            .zip(input.as_slice().par_chunks(in_w))
            .map(|((g, u), x)| {
                let mut sq = 0.0;
                for k in 0..w {
                    let (a, b) = pairs[k];
                    let (p, q) = (x[a as usize], x[b as usize]);
                    let m = &mono[k];
                    let dp = (m[1] + m[3] * q) * u[k];
                    let dq = (m[2] + m[3] * p) * u[k];
                    g[a as usize] += dp;
                    g[b as usize] += dq;
                    sq += dp * dp + dq * dq;
                }
                sq
            })
            .collect();
        let up_norm = upstream.norm();
        let in_norm = grad_in.norm();
        if !in_norm.is_finite() || !up_norm.is_finite() {
            return Err(DlgnError::numeric(Some(l + 1), "non-finite gradient"));
        }
        profile.output_grad_norms[l] = up_norm;
        profile.input_grad_norms[l] = in_norm;
        profile.local_gains[l] = local.iter().sum::<f64>().sqrt() / up_norm;
        upstream = grad_in;
    }
    Ok(BackwardOutput {
        profile,
        input_grad: upstream,
    })
}

/// Mean loss over the rows of `trace` and the matching `d_logits`, scaled by
/// `1 / normalizer`.
pub fn loss_and_grad(
    trace: &ForwardTrace,
    labels: &[usize],
    normalizer: usize,
) -> Result<(f64, Matrix)> {
    if labels.len() != trace.logits.rows() {
        return Err(DlgnError::Contract(
            "label count does not match batch".into(),
        ));
    }
    let mut d = Matrix::zeros(trace.logits.rows(), trace.logits.cols());
    let mut total = 0.0;
    let scale = 1.0 / normalizer as f64;
    for (r, &label) in labels.iter().enumerate() {
        let (loss, g) = softmax_cross_entropy(trace.logits.row(r), label)?;
        total += loss;
        for (dst, v) in d.row_mut(r).iter_mut().zip(g) {
            *dst = v * scale;
        }
    }
    if !total.is_finite() {
        return Err(DlgnError::numeric(None, "non-finite loss"));
    }
    Ok((total * scale, d))
}

/// Gradient-based perturbations active during training only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub p_intervene: f64,
    pub strategy: InterventionStrategy,
    pub p_dropout: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization {
            p_intervene: 0.0,
            strategy: InterventionStrategy::BernoulliHalf,
            p_dropout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: u64,
    /// Rows per micro-batch.
    pub batch_size: usize,
    /// Micro-batches per optimizer step.
    pub accumulation: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled weight decay, OP only.
    pub weight_decay: f64,
    pub eval_every: u64,
    pub seed: u64,
    pub regularization: Regularization,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            steps: 5_000,
            batch_size: 100,
            accumulation: 1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            eval_every: 1_000,
            seed: 0,
            regularization: Regularization::default(),
        }
    }
}

impl TrainConfig {
    pub fn effective_batch(&self) -> usize {
        self.batch_size * self.accumulation
    }

    pub fn validate(&self, parametrization: Parametrization) -> Result<()> {
        let bad = |m: &str| Err(DlgnError::Config(m.into()));
        if self.batch_size == 0 || self.accumulation == 0 {
            return bad("batch_size and accumulation must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return bad("weight_decay must be non-negative");
        }
        if parametrization == Parametrization::Iwp && self.weight_decay > 0.0 {
            return bad("weight decay is not supported for the input-wise parametrization");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        let r = &self.regularization;
        if !(0.0..=1.0).contains(&r.p_intervene) || !(0.0..=1.0).contains(&r.p_dropout) {
            return bad("regularization probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

/// First and second moment estimates, one vector per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        let zeros: Vec<Vec<f64>> = net
            .layers()
            .iter()
            .map(|l| vec![0.0; l.logits().len()])
            .collect();
        AdamState {
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// Bias-corrected Adam with optional decoupled weight decay. Residual
/// neurons are frozen. Aborts before touching parameters if any gradient is
/// non-finite.
pub fn adam_step(
    net: &mut Network,
    grads: &[Vec<f64>],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if grads.len() != net.layers().len() || state.m.len() != grads.len() {
        return Err(DlgnError::Contract(
            "gradient/optimizer shape mismatch".into(),
        ));
    }
    for (l, (g, layer)) in grads.iter().zip(net.layers()).enumerate() {
        if g.len() != layer.logits().len() || state.m[l].len() != g.len() {
            return Err(DlgnError::Contract(format!(
                "layer {} gradient shape mismatch",
                l + 1
            )));
        }
        if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
            return Err(DlgnError::numeric(
                Some(l + 1),
                format!("non-finite gradient at parameter {pos}"),
            ));
        }
    }
    state.t += 1;
    let t = state.t as f64;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    let lr = config.learning_rate;
    let wd = config.weight_decay;
    let AdamState { m, v, .. } = state;
    net.layers_mut()
        .par_iter_mut()
        .zip(grads.par_iter())
        .zip(m.par_iter_mut().zip(v.par_iter_mut()))
        .for_each(|((layer, g), (m, v))| {
            let per = layer.parametrization().params_per_neuron();
            let residual: Vec<bool> = layer.residual().to_vec();
            let params = layer.logits_mut();
            for i in 0..params.len() {
                if residual[i / per] {
                    continue;
                }
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * (m_hat / (v_hat.sqrt() + config.epsilon) + wd * params[i]);
            }
        });
    Ok(())
}

/// One row of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    /// Mean cross-entropy on the training set.
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub train_discrete_accuracy: f64,
    pub test_discrete_accuracy: Option<f64>,
    /// Input-gradient norm per layer on the probe batch.
    pub grad_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub layers: usize,
    pub points: Vec<EvalPoint>,
}

impl RunMetrics {
    /// `step,loss,train_acc,test_acc,train_disc_acc,test_disc_acc,gn_1,...,gn_L`
    pub fn csv_header(layers: usize) -> String {
        let mut s = String::from("step,loss,train_acc,test_acc,train_disc_acc,test_disc_acc");
        for l in 1..=layers {
            let _ = write!(s, ",gn_{l}");
        }
        s
    }

    pub fn csv_row(p: &EvalPoint) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut s = format!(
            "{},{},{},{},{},{}",
            p.step,
            p.loss,
            p.train_accuracy,
            opt(p.test_accuracy),
            p.train_discrete_accuracy,
            opt(p.test_discrete_accuracy)
        );
        for g in &p.grad_norms {
            let _ = write!(s, ",{g:e}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = Self::csv_header(self.layers);
        s.push('\n');
        for p in &self.points {
            s.push_str(&Self::csv_row(p));
            s.push('\n');
        }
        s
    }

    pub fn last(&self) -> Option<&EvalPoint> {
        self.points.last()
    }
}

/// Encoded rows and labels ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet {
    pub rows: Matrix,
    pub labels: Vec<usize>,
}

impl EncodedSet {
    pub fn new(net: &Network, data: &Dataset) -> Result<Self> {
        if data.classes > net.classes() {
            return Err(DlgnError::Config(format!(
                "dataset has {} classes but the network has {}",
                data.classes,
                net.classes()
            )));
        }
        Ok(EncodedSet {
            rows: net.encoder().encode(&data.features)?,
            labels: data.labels.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bit_rows(&self) -> Vec<Vec<bool>> {
        self.rows
            .iter_rows()
            .take(self.len())
            .map(|r| r.iter().map(|&v| v > 0.5).collect())
            .collect()
    }
}

const EVAL_CHUNK: usize = 256;

/// Continuous accuracy and mean loss of the network on an encoded set.
pub fn evaluate_continuous(net: &Network, set: &EncodedSet) -> Result<(f64, f64)> {
    if set.is_empty() {
        return Err(DlgnError::Dataset(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let logits = net.infer(&set.rows.select_rows(chunk))?;
        for (r, &i) in chunk.iter().enumerate() {
            let row = logits.row(r);
            correct += usize::from(argmax(row) == set.labels[i]);
            loss += softmax_cross_entropy(row, set.labels[i])?.0;
        }
    }
    Ok((correct as f64 / set.len() as f64, loss / set.len() as f64))
}

/// Accuracy of a hardened circuit on an encoded set, using packed evaluation.
pub fn evaluate_circuit(circuit: &DiscreteCircuit, set: &EncodedSet) -> Result<f64> {
    if set.is_empty() {
        return Err(DlgnError::Dataset(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let scores = pack(circuit).eval(&set.bit_rows())?;
    let correct = scores
        .iter()
        .zip(&set.labels)
        .filter(|(s, &l)| crate::circuit::argmax_u32(s) == l)
        .count();
    Ok(correct as f64 / set.len() as f64)
}

/// Row order: an endless stream of per-epoch permutations, each seeded by
/// `(seed, epoch)`. Step `s` consumes positions `s*E .. (s+1)*E`.
#[derive(Debug, Clone)]
struct BatchSampler {
    n: usize,
    seed: u64,
    epoch: Option<u64>,
    perm: Vec<usize>,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        BatchSampler {
            n,
            seed,
            epoch: None,
            perm: Vec::new(),
        }
    }

    fn indices(&mut self, start: u64, count: usize) -> Vec<usize> {
        (0..count as u64)
            .map(|i| {
                let pos = start + i;
                let epoch = pos / self.n as u64;
                if self.epoch != Some(epoch) {
                    self.perm = (0..self.n).collect();
                    self.perm
                        .shuffle(&mut rng::stream(self.seed, tags::DATA_ORDER, epoch));
                    self.epoch = Some(epoch);
                }
                self.perm[(pos % self.n as u64) as usize]
            })
            .collect()
    }
}

/// Owns the network and optimizer state for a training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    net: Network,
    adam: AdamState,
    step: u64,
    config: TrainConfig,
    train: EncodedSet,
    test: Option<EncodedSet>,
    sampler: BatchSampler,
    acc: CornerGrads,
}

impl Trainer {
    pub fn new(net: Network, config: TrainConfig, train: &Dataset, test: &Dataset) -> Result<Self> {
        let adam = AdamState::new(&net);
        Self::resume(net, adam, 0, config, train, test)
    }

    /// Continues a run from a saved step. Sample order and regularizer draws
    /// depend only on the seed and the step, so the trajectory matches an
    /// uninterrupted run.
    pub fn resume(
        net: Network,
        adam: AdamState,
        step: u64,
        config: TrainConfig,
        train: &Dataset,
        test: &Dataset,
    ) -> Result<Self> {
        config.validate(net.parametrization())?;
        if train.is_empty() {
            return Err(DlgnError::Dataset("training set is empty".into()));
        }
        if adam.m.len() != net.layers().len() {
            return Err(DlgnError::Checkpoint(
                "optimizer state does not match network".into(),
            ));
        }
        let train_set = EncodedSet::new(&net, train)?;
        let test_set = if test.is_empty() {
            None
        } else {
            Some(EncodedSet::new(&net, test)?)
        };
        Ok(Trainer {
            acc: CornerGrads::zeros(&net),
            sampler: BatchSampler::new(train_set.len(), config.seed),
            net,
            adam,
            step,
            config,
            train: train_set,
            test: test_set,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Row indices used by optimizer step `step`.
    pub fn step_indices(&mut self, step: u64) -> Vec<usize> {
        let e = self.config.effective_batch();
        self.sampler.indices(step * e as u64, e)
    }

    /// One optimizer step over `accumulation` micro-batches. Returns the mean loss.
    pub fn step_once(&mut self) -> Result<f64> {
        let e = self.config.effective_batch();
        let b = self.config.batch_size;
        let indices = self.step_indices(self.step);
        let reg = self.config.regularization;
        let dropout_mask = if reg.p_dropout > 0.0 {
            let mut r = rng::stream(self.config.seed, tags::DROPOUT, self.step);
            Some(self.net.dropout_mask(reg.p_dropout, &mut r)?)
        } else {
            None
        };
        let intervention_seed = rng::derive_seed(self.config.seed, tags::INTERVENE, self.step);
        self.acc.reset();
        let mut loss = 0.0;
        for (m, chunk) in indices.chunks(b).enumerate() {
            let hooks = ForwardHooks {
                intervention: (reg.p_intervene > 0.0).then_some(Intervention {
                    p: reg.p_intervene,
                    strategy: reg.strategy,
                    seed: intervention_seed,
                    row_offset: (m * b) as u64,
                }),
                dropout_mask: dropout_mask.clone(),
            };
            let batch = self.train.rows.select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| self.train.labels[i]).collect();
            let trace = self.net.forward_with(&batch, &hooks)?;
            let (l, d) = loss_and_grad(&trace, &labels, e)?;
            loss += l;
            backward(&self.net, &trace, &d, &mut self.acc)?;
        }
        let grads = self.acc.logit_grads(&self.net);
        adam_step(&mut self.net, &grads, &mut self.adam, &self.config)?;
        self.step += 1;
        Ok(loss)
    }

    /// Accuracies, loss and gradient profile at the current parameters.
    pub fn evaluate(&self) -> Result<EvalPoint> {
        let (train_accuracy, loss) = evaluate_continuous(&self.net, &self.train)?;
        let circuit = self.net.discretize()?;
        let train_discrete_accuracy = evaluate_circuit(&circuit, &self.train)?;
        let (test_accuracy, test_discrete_accuracy) = match &self.test {
            Some(t) => (
                Some(evaluate_continuous(&self.net, t)?.0),
                Some(evaluate_circuit(&circuit, t)?),
            ),
            None => (None, None),
        };
        let probe: Vec<usize> = (0..self.train.len().min(self.config.effective_batch())).collect();
        let profile = grad_norm_profile(
            &self.net,
            &self.train.rows.select_rows(&probe),
            &probe
                .iter()
                .map(|&i| self.train.labels[i])
                .collect::<Vec<_>>(),
        )?;
        Ok(EvalPoint {
            step: self.step,
            loss,
            train_accuracy,
            test_accuracy,
            train_discrete_accuracy,
            test_discrete_accuracy,
            grad_norms: profile.input_grad_norms,
        })
    }

    /// Trains up to `config.steps`, evaluating at the start of a fresh run,
    /// every `eval_every` steps and at the final step. `on_eval` sees the
    /// trainer after each evaluation.
    pub fn run<F>(&mut self, mut on_eval: F) -> Result<RunMetrics>
    where
        F: FnMut(&Trainer, &EvalPoint) -> Result<()>,
    {
        let mut metrics = RunMetrics {
            layers: self.net.layers().len(),
            points: Vec::new(),
        };
        if self.step == 0 {
            let p = self.evaluate()?;
            on_eval(self, &p)?;
            metrics.points.push(p);
        }
        while self.step < self.config.steps {
            self.step_once()?;
            if self.step.is_multiple_of(self.config.eval_every) || self.step == self.config.steps {
                let p = self.evaluate()?;
                on_eval(self, &p)?;
                metrics.points.push(p);
            }
        }
        Ok(metrics)
    }
}

/// Trains `net` and returns the final network and the metrics log.
pub fn train_loop(
    net: Network,
    train: &Dataset,
    test: &Dataset,
    config: &TrainConfig,
) -> Result<(Network, RunMetrics)> {
    let mut trainer = Trainer::new(net, config.clone(), train, test)?;
    let metrics = trainer.run(|_, _| Ok(()))?;
    Ok((trainer.into_network(), metrics))
}
