//! The sixteen two-input Boolean functions.
//!
//! Gates are identified by their 1-based position in the canonical ordering,
//! where the truth vector `(G(0,0), G(0,1), G(1,0), G(1,1))` read as a binary
//! number (first corner most significant) equals `id - 1`. Every gate `i` has
//! its negation at `17 - i`.
//!
//! Each gate comes with its probabilistic surrogate, the expectation of the
//! gate under independent Bernoulli inputs, which is a bilinear polynomial in
//! `(p, q)`, together with its two partial derivatives.

use std::fmt;

use crate::error::{DlgnError, Result};

/// Number of distinct two-input Boolean functions.
pub const GATE_COUNT: usize = 16;

/// Canonical 1-based gate identifier in `1..=16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId(u8);

impl GateId {
    pub const FALSE: GateId = GateId(1);
    pub const AND: GateId = GateId(2);
    pub const A_AND_NOT_B: GateId = GateId(3);
    pub const A: GateId = GateId(4);
    pub const B_AND_NOT_A: GateId = GateId(5);
    pub const B: GateId = GateId(6);
    pub const XOR: GateId = GateId(7);
    pub const OR: GateId = GateId(8);
    pub const NOR: GateId = GateId(9);
    pub const XNOR: GateId = GateId(10);
    pub const NOT_B: GateId = GateId(11);
    pub const B_IMPLIES_A: GateId = GateId(12);
    pub const NOT_A: GateId = GateId(13);
    pub const A_IMPLIES_B: GateId = GateId(14);
    pub const NAND: GateId = GateId(15);
    pub const TRUE: GateId = GateId(16);

    pub fn new(id: u8) -> Result<Self> {
        if (1..=16).contains(&id) {
            Ok(GateId(id))
        } else {
            Err(DlgnError::Contract(format!("gate id {id} outside 1..=16")))
        }
    }

    /// The 1-based id.
    pub fn id(self) -> u8 {
        self.0
    }

    /// 0-based position, for indexing per-gate arrays.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < GATE_COUNT, "gate index {index} out of range");
        GateId(index as u8 + 1)
    }

    /// All gates in canonical order.
    pub fn all() -> impl Iterator<Item = GateId> {
        (1..=16u8).map(GateId)
    }

    /// Gate whose truth vector is `bits` in corner order `(0,0),(0,1),(1,0),(1,1)`.
    pub fn from_truth_bits(bits: [u8; 4]) -> Self {
        let code = bits
            .iter()
            .fold(0u8, |acc, &b| (acc << 1) | u8::from(b != 0));
        GateId(code + 1)
    }

    pub fn truth_bits(self) -> [u8; 4] {
        truth_table(self)
    }

    /// Output for boolean inputs.
    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        let corner = (usize::from(a) << 1) | usize::from(b);
        ((self.0 - 1) >> (3 - corner)) & 1 == 1
    }

    pub fn negation(self) -> Self {
        negation_of(self)
    }

    pub fn mnemonic(self) -> &'static str {
        MNEMONICS[self.index()]
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        MNEMONICS
            .iter()
            .position(|m| *m == s)
            .map(GateId::from_index)
    }

    /// Gate computing `self(not a, b)`.
    pub fn with_negated_a(self) -> Self {
        let [b00, b01, b10, b11] = self.truth_bits();
        GateId::from_truth_bits([b10, b11, b00, b01])
    }

    /// Gate computing `self(a, not b)`.
    pub fn with_negated_b(self) -> Self {
        let [b00, b01, b10, b11] = self.truth_bits();
        GateId::from_truth_bits([b01, b00, b11, b10])
    }

    /// Gate computing `self(b, a)`.
    pub fn with_swapped_inputs(self) -> Self {
        let [b00, b01, b10, b11] = self.truth_bits();
        GateId::from_truth_bits([b00, b10, b01, b11])
    }

    pub fn depends_on_a(self) -> bool {
        let [b00, b01, b10, b11] = self.truth_bits();
        b00 != b10 || b01 != b11
    }

    pub fn depends_on_b(self) -> bool {
        let [b00, b01, b10, b11] = self.truth_bits();
        b00 != b01 || b10 != b11
    }

    pub fn is_constant(self) -> bool {
        self == GateId::FALSE || self == GateId::TRUE
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mnemonic())
    }
}

impl TryFrom<u8> for GateId {
    type Error = DlgnError;

    fn try_from(id: u8) -> Result<Self> {
        GateId::new(id)
    }
}

/// Netlist mnemonics, ids 1..=16 in order.
pub const MNEMONICS: [&str; GATE_COUNT] = [
    "FALSE", "AND", "ANOTB", "A", "BNOTA", "B", "XOR", "OR", "NOR", "XNOR", "NOTB", "BIMPA",
    "NOTA", "AIMPB", "NAND", "TRUE",
];

/// Output bits for inputs `(0,0), (0,1), (1,0), (1,1)`.
pub fn truth_table(gate: GateId) -> [u8; 4] {
    let code = gate.0 - 1;
    [(code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1]
}

pub fn negation_of(gate: GateId) -> GateId {
    GateId(17 - gate.0)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(DlgnError::Domain(format!("{name}={v} outside [0, 1]")))
    }
}

/// Closed-form surrogate without the domain check. Hot loops call this once
/// their inputs are known to lie in the unit square.
#[inline]
pub fn surrogate_unchecked(gate: GateId, a: f64, b: f64) -> f64 {
    match gate.0 {
        1 => 0.0,
        2 => a * b,
        3 => a * (1.0 - b),
        4 => a,
        5 => b * (1.0 - a),
        6 => b,
        7 => a + b - 2.0 * a * b,
        8 => a + b - a * b,
        9 => 1.0 - a - b + a * b,
        10 => 1.0 - a - b + 2.0 * a * b,
        11 => 1.0 - b,
        12 => 1.0 - b + a * b,
        13 => 1.0 - a,
        14 => 1.0 - a + a * b,
        15 => 1.0 - a * b,
        16 => 1.0,
        _ => unreachable!("GateId invariant"),
    }
}

/// Partial derivatives `(d/dA, d/dB)` of the surrogate, without the domain check.
#[inline]
pub fn surrogate_grad_unchecked(gate: GateId, a: f64, b: f64) -> (f64, f64) {
    match gate.0 {
        1 => (0.0, 0.0),
        2 => (b, a),
        3 => (1.0 - b, -a),
        4 => (1.0, 0.0),
        5 => (-b, 1.0 - a),
        6 => (0.0, 1.0),
        7 => (1.0 - 2.0 * b, 1.0 - 2.0 * a),
        8 => (1.0 - b, 1.0 - a),
        9 => (-1.0 + b, -1.0 + a),
        10 => (-1.0 + 2.0 * b, -1.0 + 2.0 * a),
        11 => (0.0, -1.0),
        12 => (b, -1.0 + a),
        13 => (-1.0, 0.0),
        14 => (-1.0 + b, a),
        15 => (-b, -a),
        16 => (0.0, 0.0),
        _ => unreachable!("GateId invariant"),
    }
}

/// Probabilistic surrogate of `gate` at `(p, q)` in the unit square.
pub fn surrogate_eval(gate: GateId, p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(surrogate_unchecked(gate, p, q))
}

pub fn surrogate_grad(gate: GateId, p: f64, q: f64) -> Result<(f64, f64)> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(surrogate_grad_unchecked(gate, p, q))
}

/// Expectation of the gate output under `A ~ Ber(p)`, `B ~ Ber(q)`, summed
/// over the four outcomes. Independent of the closed forms above; used as a
/// reference in tests.
pub fn expectation_oracle(gate: GateId, p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let bits = truth_table(gate);
    let mut total = 0.0;
    for (corner, &bit) in bits.iter().enumerate() {
        let a = corner >> 1;
        let b = corner & 1;
        let pa = if a == 1 { p } else { 1.0 - p };
        let pb = if b == 1 { q } else { 1.0 - q };
        total += pa * pb * f64::from(bit);
    }
    Ok(total)
}
