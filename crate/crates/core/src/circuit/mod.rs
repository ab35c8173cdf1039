//! Hardened logic circuits.

mod netlist;
mod packed;
mod simplify;

use std::fmt;

use crate::error::{DlgnError, Result};
use crate::gates::{GateId, GATE_COUNT};

pub use netlist::{export_netlist, import_netlist, NETLIST_HEADER};
pub use packed::{pack, PackedCircuit, LANES};
pub use simplify::{simplify, SIMPLIFY_PASS_BUDGET};

/// A wire: either a circuit input bit or the output of an earlier node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ref {
    Input(u32),
    Node(u32),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Input(i) => write!(f, "in:{i}"),
            Ref::Node(i) => write!(f, "n:{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircuitNode {
    pub gate: GateId,
    pub a: Ref,
    pub b: Ref,
}

/// Topologically ordered two-input gates plus a GroupSum head over `outputs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteCircuit {
    input_width: usize,
    nodes: Vec<CircuitNode>,
    outputs: Vec<Ref>,
    classes: usize,
}

impl DiscreteCircuit {
    /// Validates acyclicity, reference ranges and the bin partition.
    pub fn new(
        input_width: usize,
        nodes: Vec<CircuitNode>,
        outputs: Vec<Ref>,
        classes: usize,
    ) -> Result<Self> {
        if input_width == 0 {
            return Err(DlgnError::Validation(
                "circuit needs at least one input".into(),
            ));
        }
        let check = |r: Ref, limit: usize, what: &str| -> Result<()> {
            match r {
                Ref::Input(i) if (i as usize) < input_width => Ok(()),
                Ref::Input(i) => Err(DlgnError::Validation(format!(
                    "{what} references input {i} but there are {input_width} inputs"
                ))),
                Ref::Node(n) if (n as usize) < limit => Ok(()),
                Ref::Node(n) => Err(DlgnError::Validation(format!(
                    "{what} references node {n} which is not defined before it"
                ))),
            }
        };
        for (id, node) in nodes.iter().enumerate() {
            check(node.a, id, &format!("node {id}"))?;
            check(node.b, id, &format!("node {id}"))?;
        }
        for r in &outputs {
            check(*r, nodes.len(), "output")?;
        }
        if classes == 0 || outputs.is_empty() || !outputs.len().is_multiple_of(classes) {
            return Err(DlgnError::Validation(format!(
                "{} outputs cannot be split into {classes} equal bins",
                outputs.len()
            )));
        }
        Ok(DiscreteCircuit {
            input_width,
            nodes,
            outputs,
            classes,
        })
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn nodes(&self) -> &[CircuitNode] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[Ref] {
        &self.outputs
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn bin_size(&self) -> usize {
        self.outputs.len() / self.classes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of nodes per gate id (index 0 is gate 1).
    pub fn gate_histogram(&self) -> [usize; GATE_COUNT] {
        let mut h = [0; GATE_COUNT];
        for n in &self.nodes {
            h[n.gate.index()] += 1;
        }
        h
    }

    /// Node values for one input row.
    pub fn node_values(&self, bits: &[bool]) -> Result<Vec<bool>> {
        if bits.len() != self.input_width {
            return Err(DlgnError::Contract(format!(
                "row width {} does not match circuit input width {}",
                bits.len(),
                self.input_width
            )));
        }
        let mut values = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let get = |r: Ref| match r {
                Ref::Input(i) => bits[i as usize],
                Ref::Node(n) => values[n as usize],
            };
            let v = node.gate.eval(get(node.a), get(node.b));
            values.push(v);
        }
        Ok(values)
    }

    /// Bin-wise counts of true outputs and the winning class.
    pub fn eval(&self, bits: &[bool]) -> Result<(Vec<u32>, usize)> {
        let values = self.node_values(bits)?;
        let mut scores = vec![0u32; self.classes];
        for (k, r) in self.outputs.iter().enumerate() {
            let v = match *r {
                Ref::Input(i) => bits[i as usize],
                Ref::Node(n) => values[n as usize],
            };
            scores[k / self.bin_size()] += u32::from(v);
        }
        let prediction = argmax_u32(&scores);
        Ok((scores, prediction))
    }
}

pub fn eval_circuit(c: &DiscreteCircuit, bits: &[bool]) -> Result<(Vec<u32>, usize)> {
    c.eval(bits)
}

/// Index of the largest score, lowest index on ties.
pub fn argmax_u32(scores: &[u32]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
