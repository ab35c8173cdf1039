use std::collections::HashMap;

use super::{CircuitNode, DiscreteCircuit, Ref};
use crate::gates::GateId;

/// Upper bound on simplification rounds.
pub const SIMPLIFY_PASS_BUDGET: usize = 100;

/// What an original wire reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Signal {
    Const(bool),
    /// A wire of the rewritten circuit, optionally inverted.
    Wire {
        r: Ref,
        neg: bool,
    },
}

impl Signal {
    fn negate(self) -> Signal {
        match self {
            Signal::Const(v) => Signal::Const(!v),
            Signal::Wire { r, neg } => Signal::Wire { r, neg: !neg },
        }
    }

    /// Applies the unary function with truth values `(f(0), f(1))`.
    fn apply(self, f0: bool, f1: bool) -> Signal {
        match (f0, f1) {
            (false, true) => self,
            (true, false) => self.negate(),
            (v, _) => Signal::Const(v),
        }
    }
}

fn wire(r: Ref) -> Signal {
    Signal::Wire { r, neg: false }
}

/// Constant propagation, pass-through and negation folding, then dead-node
/// elimination, repeated until the circuit stops changing.
/// Scores are identical on every input.
pub fn simplify(c: &DiscreteCircuit) -> DiscreteCircuit {
    let mut current = c.clone();
    for _ in 0..SIMPLIFY_PASS_BUDGET {
        let next = eliminate_dead(&rewrite(&current));
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn rewrite(c: &DiscreteCircuit) -> DiscreteCircuit {
    let mut nodes: Vec<CircuitNode> = Vec::with_capacity(c.nodes.len());
    let mut signals: Vec<Signal> = Vec::with_capacity(c.nodes.len());
    let resolve = |signals: &[Signal], r: Ref| match r {
        Ref::Input(_) => wire(r),
        Ref::Node(n) => signals[n as usize],
    };
    for node in &c.nodes {
        let a = resolve(&signals, node.a);
        let b = resolve(&signals, node.b);
        let g = node.gate;
        let s = match (a, b) {
            (Signal::Const(x), Signal::Const(y)) => Signal::Const(g.eval(x, y)),
            (Signal::Const(x), other) => other.apply(g.eval(x, false), g.eval(x, true)),
            (other, Signal::Const(y)) => other.apply(g.eval(false, y), g.eval(true, y)),
            (Signal::Wire { r: ra, neg: na }, Signal::Wire { r: rb, neg: nb }) if ra == rb => {
                let f = |x: bool| g.eval(x ^ na, x ^ nb);
                wire(ra).apply(f(false), f(true))
            }
            (Signal::Wire { r: ra, neg: na }, Signal::Wire { r: rb, neg: nb }) => {
                let mut folded = g;
                if na {
                    folded = folded.with_negated_a();
                }
                if nb {
                    folded = folded.with_negated_b();
                }
                match folded {
                    GateId::FALSE => Signal::Const(false),
                    GateId::TRUE => Signal::Const(true),
                    GateId::A => wire(ra),
                    GateId::B => wire(rb),
                    GateId::NOT_A => wire(ra).negate(),
                    GateId::NOT_B => wire(rb).negate(),
                    gate => {
                        nodes.push(CircuitNode { gate, a: ra, b: rb });
                        wire(Ref::Node(nodes.len() as u32 - 1))
                    }
                }
            }
        };
        signals.push(s);
    }

    // Outputs that reduced to a constant or an inverted wire need a node of
    // their own. One per original output node, so the count never grows.
    let anchor = Ref::Input(0);
    let mut materialized: HashMap<Ref, Ref> = HashMap::new();
    let mut outputs = Vec::with_capacity(c.outputs.len());
    for &orig in &c.outputs {
        let s = resolve(&signals, orig);
        let r = match s {
            Signal::Wire { r, neg: false } => r,
            _ => *materialized.entry(orig).or_insert_with(|| {
                let new = match s {
                    Signal::Const(v) => CircuitNode {
                        gate: if v { GateId::TRUE } else { GateId::FALSE },
                        a: anchor,
                        b: anchor,
                    },
                    Signal::Wire {
                        r: Ref::Node(n), ..
                    } => {
                        let inner = nodes[n as usize];
                        CircuitNode {
                            gate: inner.gate.negation(),
                            ..inner
                        }
                    }
                    Signal::Wire { r, .. } => CircuitNode {
                        gate: GateId::NOT_A,
                        a: r,
                        b: r,
                    },
                };
                nodes.push(new);
                Ref::Node(nodes.len() as u32 - 1)
            }),
        };
        outputs.push(r);
    }
    DiscreteCircuit {
        input_width: c.input_width,
        nodes,
        outputs,
        classes: c.classes,
    }
}

fn eliminate_dead(c: &DiscreteCircuit) -> DiscreteCircuit {
    let mut live = vec![false; c.nodes.len()];
    for r in &c.outputs {
        if let Ref::Node(n) = r {
            live[*n as usize] = true;
        }
    }
    for id in (0..c.nodes.len()).rev() {
        if !live[id] {
            continue;
        }
        for r in [c.nodes[id].a, c.nodes[id].b] {
            if let Ref::Node(n) = r {
                live[n as usize] = true;
            }
        }
    }
    let mut remap = vec![u32::MAX; c.nodes.len()];
    let mut nodes = Vec::new();
    let map = |remap: &[u32], r: Ref| match r {
        Ref::Node(n) => Ref::Node(remap[n as usize]),
        input => input,
    };
    for (id, node) in c.nodes.iter().enumerate() {
        if live[id] {
            remap[id] = nodes.len() as u32;
            nodes.push(CircuitNode {
                gate: node.gate,
                a: map(&remap, node.a),
                b: map(&remap, node.b),
            });
        }
    }
    let outputs = c.outputs.iter().map(|&r| map(&remap, r)).collect();
    DiscreteCircuit {
        input_width: c.input_width,
        nodes,
        outputs,
        classes: c.classes,
    }
}
