use std::fmt::Write as _;

use super::{
    backward, evaluate_circuit, evaluate_continuous, loss_and_grad, CornerGrads, EncodedSet,
    GradientProfile,
};
use crate::data::Dataset;
use crate::error::{DlgnError, Result};
use crate::init::{self, InitScheme};
use crate::matrix::Matrix;
use crate::network::{Network, Parametrization};
use crate::neuron::{iwp_backward, op_backward, EstimatorKind};
use crate::rng::{self, tags};

/// Bins of a gate-output histogram over `[0, 1]`.
pub const HISTOGRAM_BINS: usize = 50;

/// One forward and backward pass on `batch`; parameters are left untouched.
pub fn grad_norm_profile(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
) -> Result<GradientProfile> {
    let trace = net.forward(batch)?;
    let (_, d) = loss_and_grad(&trace, labels, batch.rows().max(1))?;
    let mut scratch = CornerGrads::zeros(net);
    Ok(backward(net, &trace, &d, &mut scratch)?.profile)
}

/// Counts of layer `layer` (1-based) activations over the batch, in
/// `HISTOGRAM_BINS` uniform bins. The value 1.0 falls in the top bin.
pub fn gate_output_histogram(net: &Network, batch: &Matrix, layer: usize) -> Result<Vec<u64>> {
    if layer == 0 || layer > net.layers().len() {
        return Err(DlgnError::Contract(format!(
            "layer {layer} outside 1..={}",
            net.layers().len()
        )));
    }
    let trace = net.forward(batch)?;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &v in trace.activations[layer].as_slice() {
        let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    Ok(counts)
}

/// `layer,bin_lo,bin_hi,count` rows for each `(layer, counts)` pair.
pub fn histogram_csv(histograms: &[(usize, Vec<u64>)]) -> String {
    let mut s = String::from("layer,bin_lo,bin_hi,count\n");
    for (layer, counts) in histograms {
        let n = counts.len();
        for (i, c) in counts.iter().enumerate() {
            let _ = writeln!(
                s,
                "{layer},{},{},{c}",
                i as f64 / n as f64,
                (i + 1) as f64 / n as f64
            );
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub continuous_accuracy: f64,
    pub discrete_accuracy: f64,
    /// Continuous minus discrete accuracy.
    pub gap: f64,
}

pub fn discretization_gap(net: &Network, data: &Dataset) -> Result<GapReport> {
    let set = EncodedSet::new(net, data)?;
    let (continuous_accuracy, _) = evaluate_continuous(net, &set)?;
    let discrete_accuracy = evaluate_circuit(&net.discretize()?, &set)?;
    Ok(GapReport {
        continuous_accuracy,
        discrete_accuracy,
        gap: continuous_accuracy - discrete_accuracy,
    })
}

/// Input gradients `d_p` at `p = q = 0.5` with unit upstream for `n` freshly
/// initialized neurons.
pub fn concentration_samples(
    scheme: &InitScheme,
    parametrization: Parametrization,
    estimator: EstimatorKind,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    scheme.validate()?;
    let mut r = rng::stream(seed, tags::PROBE, 0);
    (0..n)
        .map(|_| match parametrization {
            Parametrization::Op => {
                Ok(op_backward(&init::init_op(scheme, &mut r), 0.5, 0.5, 1.0)?.d_p)
            }
            Parametrization::Iwp => {
                Ok(iwp_backward(&init::init_iwp(scheme, estimator, &mut r), 0.5, 0.5, 1.0)?.d_p)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationSummary {
    pub median_abs: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl ConcentrationSummary {
    pub fn of(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut abs: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        ConcentrationSummary {
            median_abs: quantile(&abs, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
