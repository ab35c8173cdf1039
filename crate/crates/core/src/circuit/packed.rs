use rayon::prelude::*;

use super::{DiscreteCircuit, Ref};
use crate::error::{DlgnError, Result};
use crate::gates::GateId;

/// Samples per machine word.
pub const LANES: usize = 64;

/// Bitwise template realizing one gate id on 64 lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    False,
    And,
    AndNotB,
    A,
    AndNotA,
    B,
    Xor,
    Or,
    Nor,
    Xnor,
    NotB,
    OrNotB,
    NotA,
    OrNotA,
    Nand,
    True,
}

impl Op {
    pub fn from_gate(g: GateId) -> Op {
        const OPS: [Op; 16] = [
            Op::False,
            Op::And,
            Op::AndNotB,
            Op::A,
            Op::AndNotA,
            Op::B,
            Op::Xor,
            Op::Or,
            Op::Nor,
            Op::Xnor,
            Op::NotB,
            Op::OrNotB,
            Op::NotA,
            Op::OrNotA,
            Op::Nand,
            Op::True,
        ];
        OPS[g.index()]
    }

    #[inline]
    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            Op::False => 0,
            Op::And => a & b,
            Op::AndNotB => a & !b,
            Op::A => a,
            Op::AndNotA => !a & b,
            Op::B => b,
            Op::Xor => a ^ b,
            Op::Or => a | b,
            Op::Nor => !(a | b),
            Op::Xnor => !(a ^ b),
            Op::NotB => !b,
            Op::OrNotB => a | !b,
            Op::NotA => !a,
            Op::OrNotA => !a | b,
            Op::Nand => !(a & b),
            Op::True => u64::MAX,
        }
    }
}

/// Circuit compiled to word-parallel form. Slots `0..inputs` hold the input
/// words, slot `inputs + i` holds node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCircuit {
    inputs: usize,
    ops: Vec<(Op, u32, u32)>,
    outputs: Vec<u32>,
    classes: usize,
}

pub fn pack(c: &DiscreteCircuit) -> PackedCircuit {
    let inputs = c.input_width();
    let slot = |r: Ref| match r {
        Ref::Input(i) => i,
        Ref::Node(n) => inputs as u32 + n,
    };
    PackedCircuit {
        inputs,
        ops: c
            .nodes()
            .iter()
            .map(|n| (Op::from_gate(n.gate), slot(n.a), slot(n.b)))
            .collect(),
        outputs: c.outputs().iter().map(|&r| slot(r)).collect(),
        classes: c.classes(),
    }
}

impl PackedCircuit {
    pub fn input_width(&self) -> usize {
        self.inputs
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn ops(&self) -> &[(Op, u32, u32)] {
        &self.ops
    }

    /// Output words for one block of input words (one word per input bit).
    pub fn eval_words(&self, input_words: &[u64]) -> Result<Vec<u64>> {
        if input_words.len() != self.inputs {
            return Err(DlgnError::Contract(format!(
                "expected {} input words, got {}",
                self.inputs,
                input_words.len()
            )));
        }
        let mut slots = Vec::with_capacity(self.inputs + self.ops.len());
        slots.extend_from_slice(input_words);
        for &(op, a, b) in &self.ops {
            let v = op.apply(slots[a as usize], slots[b as usize]);
            slots.push(v);
        }
        Ok(self.outputs.iter().map(|&s| slots[s as usize]).collect())
    }

    /// Class scores per row, evaluating 64 rows per word.
    pub fn eval(&self, rows: &[Vec<bool>]) -> Result<Vec<Vec<u32>>> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.inputs) {
            return Err(DlgnError::Contract(format!(
                "row width {} does not match circuit input width {}",
                r.len(),
                self.inputs
            )));
        }
        let bin = self.outputs.len() / self.classes;
        let blocks: Vec<Vec<Vec<u32>>> = rows
            .par_chunks(LANES)
            .map(|chunk| {
                let words: Vec<u64> = (0..self.inputs)
                    .map(|i| {
                        chunk
                            .iter()
                            .enumerate()
                            .fold(0u64, |w, (lane, row)| w | (u64::from(row[i]) << lane))
                    })
                    .collect();
                let out = self.eval_words(&words)?;
                Ok((0..chunk.len())
                    .map(|lane| {
                        let mut scores = vec![0u32; self.classes];
                        for (k, w) in out.iter().enumerate() {
                            scores[k / bin] += ((w >> lane) & 1) as u32;
                        }
                        scores
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }
}
