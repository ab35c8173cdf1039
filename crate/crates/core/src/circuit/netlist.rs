//! Text netlist, one record per line:
//!
//! ```text
//! dlgn-netlist v1 inputs=<n> classes=<C>
//! in <i>
//! node <id> <MNEMONIC> <ref> <ref>
//! bin <class> <ref> ...
//! ```
//!
//! Refs are `in:<i>` or `n:<id>`. Blank lines are ignored.

use std::fmt::Write;

use super::{CircuitNode, DiscreteCircuit, Ref};
use crate::error::{DlgnError, Result};
use crate::gates::GateId;

pub const NETLIST_HEADER: &str = "dlgn-netlist v1";

pub fn export_netlist(c: &DiscreteCircuit) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{NETLIST_HEADER} inputs={} classes={}",
        c.input_width(),
        c.classes()
    );
    for i in 0..c.input_width() {
        let _ = writeln!(s, "in {i}");
    }
    for (id, n) in c.nodes().iter().enumerate() {
        let _ = writeln!(s, "node {id} {} {} {}", n.gate.mnemonic(), n.a, n.b);
    }
    for (class, bin) in c.outputs().chunks(c.bin_size()).enumerate() {
        let _ = write!(s, "bin {class}");
        for r in bin {
            let _ = write!(s, " {r}");
        }
        s.push('\n');
    }
    s
}

fn parse_err(line: usize, message: impl Into<String>) -> DlgnError {
    DlgnError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn parse_ref(tok: &str, line: usize) -> Result<Ref> {
    if let Some(i) = tok.strip_prefix("in:") {
        Ok(Ref::Input(parse_num(i, line, "input index")?))
    } else if let Some(n) = tok.strip_prefix("n:") {
        Ok(Ref::Node(parse_num(n, line, "node id")?))
    } else {
        Err(parse_err(line, format!("invalid reference `{tok}`")))
    }
}

pub fn import_netlist(text: &str) -> Result<DiscreteCircuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty netlist"))?;
    let rest = header
        .strip_prefix(NETLIST_HEADER)
        .ok_or_else(|| parse_err(hline, "missing `dlgn-netlist v1` header"))?;
    let mut inputs = None;
    let mut classes = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("inputs", v)) => inputs = Some(parse_num::<usize>(v, hline, "input count")?),
            Some(("classes", v)) => classes = Some(parse_num::<usize>(v, hline, "class count")?),
            _ => return Err(parse_err(hline, format!("unexpected header field `{tok}`"))),
        }
    }
    let inputs = inputs.ok_or_else(|| parse_err(hline, "header lacks inputs="))?;
    let classes = classes.ok_or_else(|| parse_err(hline, "header lacks classes="))?;

    let mut declared = 0usize;
    let mut nodes: Vec<CircuitNode> = Vec::new();
    let mut bins: Vec<Vec<Ref>> = Vec::new();
    for (line, content) in lines {
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks[0] {
            "in" => {
                if toks.len() != 2 {
                    return Err(parse_err(line, "expected `in <i>`"));
                }
                let i: usize = parse_num(toks[1], line, "input index")?;
                if i != declared || !nodes.is_empty() || !bins.is_empty() {
                    return Err(DlgnError::Validation(format!(
                        "line {line}: inputs must be declared in order before nodes"
                    )));
                }
                declared += 1;
            }
            "node" => {
                if toks.len() != 5 {
                    return Err(parse_err(line, "expected `node <id> <gate> <ref> <ref>`"));
                }
                let id: usize = parse_num(toks[1], line, "node id")?;
                let gate = GateId::from_mnemonic(toks[2]).ok_or_else(|| {
                    parse_err(line, format!("unknown gate mnemonic `{}`", toks[2]))
                })?;
                let a = parse_ref(toks[3], line)?;
                let b = parse_ref(toks[4], line)?;
                if id != nodes.len() || !bins.is_empty() {
                    return Err(DlgnError::Validation(format!(
                        "line {line}: node {id} out of order, expected {}",
                        nodes.len()
                    )));
                }
                check_ref(a, id, inputs, line)?;
                check_ref(b, id, inputs, line)?;
                nodes.push(CircuitNode { gate, a, b });
            }
            "bin" => {
                if toks.len() < 2 {
                    return Err(parse_err(line, "expected `bin <class> <ref> ...`"));
                }
                let class: usize = parse_num(toks[1], line, "class")?;
                if class != bins.len() {
                    return Err(DlgnError::Validation(format!(
                        "line {line}: bin {class} out of order, expected {}",
                        bins.len()
                    )));
                }
                let refs = toks[2..]
                    .iter()
                    .map(|t| parse_ref(t, line))
                    .collect::<Result<Vec<_>>>()?;
                for &r in &refs {
                    check_ref(r, nodes.len(), inputs, line)?;
                }
                bins.push(refs);
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    if declared != inputs {
        return Err(DlgnError::Validation(format!(
            "header declares {inputs} inputs but {declared} `in` lines found"
        )));
    }
    if bins.len() != classes {
        return Err(DlgnError::Validation(format!(
            "header declares {classes} classes but {} bins found",
            bins.len()
        )));
    }
    if bins.iter().any(|b| b.len() != bins[0].len()) {
        return Err(DlgnError::Validation("bins must have equal size".into()));
    }
    DiscreteCircuit::new(inputs, nodes, bins.concat(), classes)
}

fn check_ref(r: Ref, limit: usize, inputs: usize, line: usize) -> Result<()> {
    match r {
        Ref::Input(i) if (i as usize) >= inputs => Err(DlgnError::Validation(format!(
            "line {line}: input {i} out of range"
        ))),
        Ref::Node(n) if (n as usize) >= limit => Err(DlgnError::Validation(format!(
            "line {line}: reference to node {n} which is not defined earlier"
        ))),
        _ => Ok(()),
    }
}
