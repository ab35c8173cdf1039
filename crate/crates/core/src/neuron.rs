//! Neuron parametrizations.
//!
//! * [`OpParams`]: one logit per gate, softmax-weighted mixture of the sixteen
//!   surrogates.
//! * [`IwpParams`]: one logit per input corner, mapped through an output
//!   estimator to `omega_ij` in `[0, 1]` and bilinearly interpolated.
//!
//! Both produce a bilinear function of `(p, q)`, so the network kernels work
//! on four corner values per neuron regardless of parametrization.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{DlgnError, Result};
use crate::gates::{self, GateId, GATE_COUNT};

/// Map from an unbounded logit to a corner estimate in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EstimatorKind {
    Sigmoid,
    #[default]
    Sin01,
    /// `max(0, min(1, x))` with a straight-through gradient of 1.
    CappedLinearSt,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Sigmoid,
        EstimatorKind::Sin01,
        EstimatorKind::CappedLinearSt,
    ];

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            EstimatorKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            EstimatorKind::Sin01 => 0.5 + 0.5 * x.sin(),
            EstimatorKind::CappedLinearSt => x.clamp(0.0, 1.0),
        }
    }

    /// Derivative used by backpropagation. For the capped linear estimator
    /// this is the straight-through constant, not the true subgradient.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            EstimatorKind::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            EstimatorKind::Sin01 => 0.5 * x.cos(),
            EstimatorKind::CappedLinearSt => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Sigmoid => "sigmoid",
            EstimatorKind::Sin01 => "sin01",
            EstimatorKind::CappedLinearSt => "capped_linear_st",
        }
    }

    /// Logit whose estimate is exactly `bit` (0 or 1).
    pub fn saturating_logit(self, bit: bool) -> f64 {
        match (self, bit) {
            (EstimatorKind::Sin01, true) => FRAC_PI_2,
            (EstimatorKind::Sin01, false) => -FRAC_PI_2,
            (EstimatorKind::CappedLinearSt, true) => 1.0,
            (EstimatorKind::CappedLinearSt, false) => 0.0,
            // Saturates to exactly 0 / 1 in double precision.
            (EstimatorKind::Sigmoid, true) => 800.0,
            (EstimatorKind::Sigmoid, false) => -800.0,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = DlgnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(EstimatorKind::Sigmoid),
            "sin01" => Ok(EstimatorKind::Sin01),
            "capped_linear_st" => Ok(EstimatorKind::CappedLinearSt),
            other => Err(DlgnError::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Bilinear basis `e_ij(p, q)` in corner order `00, 01, 10, 11`.
#[inline]
pub fn corner_basis(p: f64, q: f64) -> [f64; 4] {
    [(1.0 - p) * (1.0 - q), (1.0 - p) * q, p * (1.0 - q), p * q]
}

/// Bilinear interpolation of four corner values.
#[inline]
pub fn bilinear(corners: &[f64; 4], p: f64, q: f64) -> f64 {
    let e = corner_basis(p, q);
    e[0] * corners[0] + e[1] * corners[1] + e[2] * corners[2] + e[3] * corners[3]
}

/// `(d/dp, d/dq)` of [`bilinear`].
#[inline]
pub fn bilinear_input_grad(c: &[f64; 4], p: f64, q: f64) -> (f64, f64) {
    (
        (1.0 - q) * (c[2] - c[0]) + q * (c[3] - c[1]),
        (1.0 - p) * (c[1] - c[0]) + p * (c[3] - c[2]),
    )
}

fn check_unit(p: f64, q: f64) -> Result<()> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(DlgnError::Domain(format!("{name}={v} outside [0, 1]")));
        }
    }
    Ok(())
}

fn check_finite(logits: &[f64]) -> Result<()> {
    if logits.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DlgnError::numeric(None, "non-finite neuron logit"))
    }
}

/// Gradients of a single neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronGrad {
    pub d_p: f64,
    pub d_q: f64,
    /// 16 entries for OP neurons, 4 for IWP neurons.
    pub d_logits: Vec<f64>,
}

/// Softmax-over-gates neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpParams {
    pub logits: [f64; GATE_COUNT],
}

impl Default for OpParams {
    fn default() -> Self {
        OpParams {
            logits: [0.0; GATE_COUNT],
        }
    }
}

impl OpParams {
    pub fn new(logits: [f64; GATE_COUNT]) -> Self {
        OpParams { logits }
    }

    /// Corner outputs `sum_i w_i * G_i(corner)` of the mixture.
    pub fn corner_values(&self) -> Result<[f64; 4]> {
        let w = op_weights(self)?;
        Ok(corners_from_weights(&w))
    }
}

pub(crate) fn softmax16(logits: &[f64; GATE_COUNT]) -> [f64; GATE_COUNT] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w = [0.0; GATE_COUNT];
    let mut sum = 0.0;
    for (wi, &l) in w.iter_mut().zip(logits) {
        *wi = (l - max).exp();
        sum += *wi;
    }
    for wi in &mut w {
        *wi /= sum;
    }
    w
}

pub(crate) fn corners_from_weights(w: &[f64; GATE_COUNT]) -> [f64; 4] {
    let mut c = [0.0; 4];
    for gate in GateId::all() {
        let bits = gate.truth_bits();
        for k in 0..4 {
            if bits[k] == 1 {
                c[k] += w[gate.index()];
            }
        }
    }
    c
}

/// Softmax of the logits, with max-subtraction.
pub fn op_weights(params: &OpParams) -> Result<[f64; GATE_COUNT]> {
    check_finite(&params.logits)?;
    Ok(softmax16(&params.logits))
}

/// Mixture `sum_i w_i g_i(p, q)`.
pub fn op_forward(params: &OpParams, p: f64, q: f64) -> Result<f64> {
    check_unit(p, q)?;
    let w = op_weights(params)?;
    Ok(GateId::all()
        .map(|g| w[g.index()] * gates::surrogate_unchecked(g, p, q))
        .sum())
}

/// Input gradient through the sign-symmetric pairing of each gate with its
/// negation, and logit gradient through the exact softmax Jacobian
/// `dL/dOmega_k = u * w_k * (g_k - g)`.
pub fn op_backward(params: &OpParams, p: f64, q: f64, upstream: f64) -> Result<NeuronGrad> {
    check_unit(p, q)?;
    let w = op_weights(params)?;
    let mut d_p = 0.0;
    let mut d_q = 0.0;
    for i in 1..=8u8 {
        let gate = GateId::new(i)?;
        let neg = gate.negation();
        let diff = w[gate.index()] - w[neg.index()];
        let (ga, gb) = gates::surrogate_grad_unchecked(gate, p, q);
        d_p += diff * ga;
        d_q += diff * gb;
    }
    let outputs: Vec<f64> = GateId::all()
        .map(|g| gates::surrogate_unchecked(g, p, q))
        .collect();
    let mixture: f64 = w.iter().zip(&outputs).map(|(wi, gi)| wi * gi).sum();
    let d_logits = w
        .iter()
        .zip(&outputs)
        .map(|(wi, gi)| upstream * wi * (gi - mixture))
        .collect();
    Ok(NeuronGrad {
        d_p: upstream * d_p,
        d_q: upstream * d_q,
        d_logits,
    })
}

/// Gate with the largest weight; ties go to the lowest id.
pub fn discretize_op(params: &OpParams) -> GateId {
    argmax_gate(&params.logits)
}

/// Index of the largest entry as a gate, lowest id on ties.
pub fn argmax_gate(values: &[f64; GATE_COUNT]) -> GateId {
    let mut best = 0;
    for k in 1..GATE_COUNT {
        if values[k] > values[best] {
            best = k;
        }
    }
    GateId::from_index(best)
}

/// Input-wise neuron: one logit per input corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwpParams {
    /// `Omega_00, Omega_01, Omega_10, Omega_11`.
    pub logits: [f64; 4],
    pub estimator: EstimatorKind,
}

impl IwpParams {
    pub fn new(logits: [f64; 4], estimator: EstimatorKind) -> Self {
        IwpParams { logits, estimator }
    }

    /// Parameters whose estimates equal the truth table of `gate` exactly.
    pub fn exact(gate: GateId, estimator: EstimatorKind) -> Self {
        let bits = gate.truth_bits();
        IwpParams {
            logits: bits.map(|b| estimator.saturating_logit(b == 1)),
            estimator,
        }
    }
}

/// Corner estimates `omega_ij`.
pub fn iwp_outputs(params: &IwpParams) -> Result<[f64; 4]> {
    check_finite(&params.logits)?;
    Ok(params.logits.map(|x| params.estimator.value(x)))
}

pub fn iwp_forward(params: &IwpParams, p: f64, q: f64) -> Result<f64> {
    check_unit(p, q)?;
    let omega = iwp_outputs(params)?;
    Ok(bilinear(&omega, p, q))
}

pub fn iwp_backward(params: &IwpParams, p: f64, q: f64, upstream: f64) -> Result<NeuronGrad> {
    check_unit(p, q)?;
    let omega = iwp_outputs(params)?;
    let (dp, dq) = bilinear_input_grad(&omega, p, q);
    let e = corner_basis(p, q);
    let d_logits = (0..4)
        .map(|k| upstream * e[k] * params.estimator.derivative(params.logits[k]))
        .collect();
    Ok(NeuronGrad {
        d_p: upstream * dp,
        d_q: upstream * dq,
        d_logits,
    })
}

/// Rounds each corner estimate at 0.5 (exactly 0.5 rounds to 0) and looks up
/// the gate with that truth table.
pub fn discretize_iwp(params: &IwpParams) -> Result<GateId> {
    let omega = iwp_outputs(params)?;
    Ok(round_corners(&omega))
}

pub fn round_corners(omega: &[f64; 4]) -> GateId {
    GateId::from_truth_bits(omega.map(|w| u8::from(w > 0.5)))
}

/// `sum_corners |output - bit|^power` for one gate (power 1 gives the L1 distance).
pub fn corner_distance(outputs: &[f64; 4], gate: GateId, power: f64) -> f64 {
    outputs
        .iter()
        .zip(gate.truth_bits())
        .map(|(o, b)| (o - f64::from(b)).abs().powf(power))
        .sum()
}

/// Brute-force search for the gate whose truth table is L1-closest to the
/// given corner outputs. Ties go to the lowest id.
pub fn l1_closest_gate(outputs: &[f64; 4]) -> GateId {
    let mut best = GateId::FALSE;
    let mut best_d = f64::INFINITY;
    for gate in GateId::all() {
        let d = corner_distance(outputs, gate, 1.0);
        if d < best_d {
            best = gate;
            best_d = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ri_op(z: f64) -> OpParams {
        let mut logits = [0.0; GATE_COUNT];
        logits[GateId::A.index()] = z;
        OpParams::new(logits)
    }

    fn op_from_weights(pairs: &[(GateId, f64)]) -> OpParams {
        let mut logits = [-60.0; GATE_COUNT];
        for &(g, w) in pairs {
            logits[g.index()] = w.ln();
        }
        OpParams::new(logits)
    }

    #[test]
    fn uniform_weights() {
        let w = op_weights(&OpParams::default()).unwrap();
        for wi in w {
            assert!((wi - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ri_pass_through_weight() {
        let w = op_weights(&ri_op(5.0)).unwrap();
        let e5 = 5f64.exp();
        assert!((w[3] - e5 / (e5 + 15.0)).abs() < 1e-14);
        assert!((w[3] - 0.908208).abs() < 1e-6);
    }

    #[test]
    fn softmax_shift_invariance() {
        let base = OpParams::new(std::array::from_fn(|k| (k as f64 * 0.37).sin() * 3.0));
        let shifted = OpParams::new(base.logits.map(|l| l + 123.4));
        let a = op_weights(&base).unwrap();
        let b = op_weights(&shifted).unwrap();
        for k in 0..GATE_COUNT {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_logits_rejected() {
        let mut logits = [0.0; GATE_COUNT];
        logits[2] = f64::NAN;
        assert!(op_weights(&OpParams::new(logits)).unwrap_err().is_numeric());
        let iwp = IwpParams::new([0.0, f64::INFINITY, 0.0, 0.0], EstimatorKind::Sin01);
        assert!(iwp_outputs(&iwp).is_err());
    }

    #[test]
    fn op_forward_vertex_is_and() {
        let params = op_from_weights(&[(GateId::AND, 1.0)]);
        let out = op_forward(&params, 0.3, 0.7).unwrap();
        assert!((out - 0.21).abs() < 1e-12);
    }

    #[test]
    fn redundant_mixture_corners() {
        let params = op_from_weights(&[(GateId::A, 0.4), (GateId::B, 0.3), (GateId::OR, 0.3)]);
        let corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
            .map(|(p, q)| op_forward(&params, p, q).unwrap());
        let expected = [0.0, 0.6, 0.7, 1.0];
        for k in 0..4 {
            assert!((corners[k] - expected[k]).abs() < 1e-12, "{corners:?}");
        }
        assert_eq!(discretize_op(&params), GateId::A);
        assert_eq!(l1_closest_gate(&expected), GateId::OR);
        assert!((corner_distance(&expected, GateId::OR, 1.0) - 0.7).abs() < 1e-12);
        assert!((corner_distance(&expected, GateId::A, 1.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn uniform_mixture_at_origin() {
        let out = op_forward(&OpParams::default(), 0.0, 0.0).unwrap();
        assert!((out - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ri_input_gradient_factor() {
        let e5 = 5f64.exp();
        let factor = (e5 - 1.0) / (e5 + 15.0);
        for &(p, q) in &[(0.1, 0.9), (0.5, 0.5), (1.0, 0.0), (0.3, 0.2)] {
            let g = op_backward(&ri_op(5.0), p, q, 1.0).unwrap();
            assert!((g.d_p - factor).abs() < 1e-12);
            assert!(g.d_q.abs() < 1e-12);
        }
        assert!((factor - 0.902089).abs() < 1e-6);
        let g3 = op_backward(&ri_op(3.0), 0.4, 0.6, 1.0).unwrap();
        let e3 = 3f64.exp();
        assert!((g3.d_p - (e3 - 1.0) / (e3 + 15.0)).abs() < 1e-12);
        assert!((g3.d_p - 0.543972).abs() < 1e-6);
        assert!(g3.d_p < 0.55);
    }

    #[test]
    fn op_backward_scales_with_upstream() {
        let params = OpParams::new(std::array::from_fn(|k| (k as f64).cos()));
        let g1 = op_backward(&params, 0.2, 0.8, 1.0).unwrap();
        let g2 = op_backward(&params, 0.2, 0.8, -2.5).unwrap();
        assert!((g2.d_p + 2.5 * g1.d_p).abs() < 1e-14);
        assert_eq!(g1.d_logits.len(), 16);
        // Softmax Jacobian rows sum to zero.
        assert!(g1.d_logits.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn estimator_values() {
        let zeros = IwpParams::new([0.0; 4], EstimatorKind::Sin01);
        assert_eq!(iwp_outputs(&zeros).unwrap(), [0.5; 4]);
        let zeros = IwpParams::new([0.0; 4], EstimatorKind::Sigmoid);
        assert_eq!(iwp_outputs(&zeros).unwrap(), [0.5; 4]);
        assert_eq!(EstimatorKind::Sin01.value(FRAC_PI_2), 1.0);
        assert_eq!(EstimatorKind::CappedLinearSt.value(1.7), 1.0);
        assert_eq!(EstimatorKind::CappedLinearSt.value(-0.2), 0.0);
        assert_eq!(EstimatorKind::CappedLinearSt.derivative(-5.0), 1.0);
        for est in EstimatorKind::ALL {
            for bit in [false, true] {
                assert_eq!(
                    est.value(est.saturating_logit(bit)),
                    f64::from(u8::from(bit))
                );
            }
            assert_eq!(est.name().parse::<EstimatorKind>().unwrap(), est);
        }
    }

    #[test]
    fn iwp_forward_examples() {
        let pass_a = IwpParams::exact(GateId::A, EstimatorKind::CappedLinearSt);
        let or = IwpParams::exact(GateId::OR, EstimatorKind::CappedLinearSt);
        for &(p, q) in &[(0.2, 0.9), (0.7, 0.1), (0.5, 0.5)] {
            assert!((iwp_forward(&pass_a, p, q).unwrap() - p).abs() < 1e-15);
            assert!((iwp_forward(&or, p, q).unwrap() - (p + q - p * q)).abs() < 1e-15);
        }
        assert!(iwp_forward(&or, 1.01, 0.0).is_err());
    }

    #[test]
    fn iwp_backward_examples() {
        let params = IwpParams::new([0.3, -1.0, 2.0, 0.4], EstimatorKind::Sigmoid);
        let omega = iwp_outputs(&params).unwrap();
        let g = iwp_backward(&params, 0.37, 0.0, 1.0).unwrap();
        assert!((g.d_p - (omega[2] - omega[0])).abs() < 1e-15);

        let xor = IwpParams::exact(GateId::XOR, EstimatorKind::Sin01);
        let g = iwp_backward(&xor, 0.5, 0.5, 1.0).unwrap();
        assert_eq!(g.d_p, 0.0);
        assert_eq!(g.d_q, 0.0);
    }

    #[test]
    fn capped_linear_straight_through() {
        let params = IwpParams::new([-3.0, 0.5, 2.0, 0.9], EstimatorKind::CappedLinearSt);
        let g = iwp_backward(&params, 0.25, 0.5, 2.0).unwrap();
        let e = corner_basis(0.25, 0.5);
        for k in 0..4 {
            assert_eq!(g.d_logits[k], 2.0 * e[k]);
        }
    }

    #[test]
    fn discretization_examples() {
        let ri = ri_op(5.0);
        assert_eq!(discretize_op(&ri), GateId::A);
        let mut one_hot = [0.0; GATE_COUNT];
        one_hot[10] = 1.0;
        assert_eq!(
            discretize_op(&OpParams::new(one_hot)),
            GateId::new(11).unwrap()
        );
        // Ties pick the lowest id.
        assert_eq!(discretize_op(&OpParams::default()), GateId::FALSE);

        assert_eq!(round_corners(&[0.1, 0.6, 0.7, 0.9]), GateId::OR);
        assert_eq!(round_corners(&[0.49; 4]), GateId::FALSE);
        assert_eq!(round_corners(&[0.5; 4]), GateId::FALSE);
        let params = IwpParams::new([0.0, 0.0, 0.0, 0.0], EstimatorKind::Sin01);
        assert_eq!(discretize_iwp(&params).unwrap(), GateId::FALSE);
    }

    #[test]
    fn l1_closest_examples() {
        assert_eq!(l1_closest_gate(&[0.0, 0.0, 1.0, 1.0]), GateId::A);
        assert_eq!(corner_distance(&[0.0, 0.0, 1.0, 1.0], GateId::A, 1.0), 0.0);
    }

    #[test]
    fn parameter_footprint() {
        assert_eq!(
            IwpParams::exact(GateId::A, EstimatorKind::Sin01)
                .logits
                .len(),
            4
        );
        assert_eq!(OpParams::default().logits.len(), 16);
    }
}
