//! Binary checkpoints.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "DLGNCKPT" | u32 version
//! u32 len, config echo (UTF-8)
//! u64 seed | u64 step
//! u8 parametrization | u8 estimator
//! u32 thresholds | u32 input_dim | u32 classes | f64 tau
//! u32 layer count, then per layer:
//!   u32 input_width | u32 width
//!   width x (u32 a, u32 b) wiring
//!   width x u8 residual flag
//!   parameter block: width x params_per_neuron x f64
//! u64 adam t, then per layer the m block and the v block
//! ```

use std::path::Path;

use crate::error::{DlgnError, Result};
use crate::network::{EncoderConfig, LogicLayer, Network, Parametrization, Wiring};
use crate::neuron::EstimatorKind;
use crate::train::AdamState;

pub const MAGIC: &[u8; 8] = b"DLGNCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config_text: String,
    pub seed: u64,
    pub step: u64,
    pub network: Network,
    pub adam: AdamState,
}

fn param_code(p: Parametrization) -> u8 {
    match p {
        Parametrization::Op => 0,
        Parametrization::Iwp => 1,
    }
}

fn estimator_code(e: EstimatorKind) -> u8 {
    match e {
        EstimatorKind::Sigmoid => 0,
        EstimatorKind::Sin01 => 1,
        EstimatorKind::CappedLinearSt => 2,
    }
}

/// Serialized parameter block of one layer.
pub fn encode_param_block(layer: &LogicLayer) -> Vec<u8> {
    let mut out = Vec::with_capacity(layer.param_block_bytes());
    put_f64s(&mut out, layer.logits());
    out
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v =
        u32::try_from(v).map_err(|_| DlgnError::Checkpoint(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let net = &self.network;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_u32(&mut out, self.config_text.len())?;
        out.extend_from_slice(self.config_text.as_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.push(param_code(net.parametrization()));
        out.push(estimator_code(net.estimator()));
        put_u32(&mut out, net.encoder().thresholds)?;
        put_u32(&mut out, net.encoder().input_dim)?;
        put_u32(&mut out, net.classes())?;
        out.extend_from_slice(&net.tau().to_le_bytes());
        put_u32(&mut out, net.layers().len())?;
        for layer in net.layers() {
            put_u32(&mut out, layer.input_width())?;
            put_u32(&mut out, layer.width())?;
            for &(a, b) in &layer.wiring().pairs {
                out.extend_from_slice(&a.to_le_bytes());
                out.extend_from_slice(&b.to_le_bytes());
            }
            out.extend(layer.residual().iter().map(|&r| r as u8));
            out.extend(encode_param_block(layer));
        }
        if self.adam.m.len() != net.layers().len() || self.adam.v.len() != net.layers().len() {
            return Err(DlgnError::Checkpoint(
                "optimizer state does not match network".into(),
            ));
        }
        out.extend_from_slice(&self.adam.t.to_le_bytes());
        for (l, layer) in net.layers().iter().enumerate() {
            let n = layer.logits().len();
            if self.adam.m[l].len() != n || self.adam.v[l].len() != n {
                return Err(DlgnError::Checkpoint(format!(
                    "optimizer state for layer {} has the wrong size",
                    l + 1
                )));
            }
            put_f64s(&mut out, &self.adam.m[l]);
            put_f64s(&mut out, &self.adam.v[l]);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(DlgnError::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(DlgnError::Checkpoint(format!(
                "unsupported version {version}"
            )));
        }
        let len = r.u32()? as usize;
        let config_text = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| DlgnError::Checkpoint("config echo is not UTF-8".into()))?;
        let seed = r.u64()?;
        let step = r.u64()?;
        let parametrization = match r.u8()? {
            0 => Parametrization::Op,
            1 => Parametrization::Iwp,
            c => {
                return Err(DlgnError::Checkpoint(format!(
                    "unknown parametrization code {c}"
                )))
            }
        };
        let estimator = match r.u8()? {
            0 => EstimatorKind::Sigmoid,
            1 => EstimatorKind::Sin01,
            2 => EstimatorKind::CappedLinearSt,
            c => return Err(DlgnError::Checkpoint(format!("unknown estimator code {c}"))),
        };
        let thresholds = r.u32()? as usize;
        let input_dim = r.u32()? as usize;
        let classes = r.u32()? as usize;
        let tau = r.f64()?;
        let n_layers = r.u32()? as usize;
        let per = parametrization.params_per_neuron();
        let mut layers = Vec::with_capacity(n_layers.min(1 << 16));
        for _ in 0..n_layers {
            let input_width = r.u32()? as usize;
            let width = r.u32()? as usize;
            let pairs = (0..width)
                .map(|_| Ok((r.u32()?, r.u32()?)))
                .collect::<Result<Vec<_>>>()?;
            let residual = r
                .take(width)?
                .iter()
                .map(|&b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(DlgnError::Checkpoint(format!("bad residual flag {b}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let logits = r.f64s(width * per)?;
            layers.push(
                LogicLayer::new(
                    input_width,
                    Wiring { pairs },
                    parametrization,
                    estimator,
                    logits,
                    residual,
                )
                .map_err(|e| DlgnError::Checkpoint(e.to_string()))?,
            );
        }
        let encoder = EncoderConfig::new(thresholds, input_dim)
            .map_err(|e| DlgnError::Checkpoint(e.to_string()))?;
        let network = Network::from_layers(encoder, layers, classes, tau)
            .map_err(|e| DlgnError::Checkpoint(e.to_string()))?;
        let t = r.u64()?;
        let mut m = Vec::with_capacity(n_layers);
        let mut v = Vec::with_capacity(n_layers);
        for layer in network.layers() {
            let n = layer.logits().len();
            m.push(r.f64s(n)?);
            v.push(r.f64s(n)?);
        }
        if r.pos != bytes.len() {
            return Err(DlgnError::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            config_text,
            seed,
            step,
            network,
            adam: AdamState { t, m, v },
        })
    }

    /// Loads and checks that the stored parametrization is `expected`.
    pub fn from_bytes_expecting(bytes: &[u8], expected: Parametrization) -> Result<Self> {
        let ck = Self::from_bytes(bytes)?;
        if ck.network.parametrization() != expected {
            return Err(DlgnError::Checkpoint(format!(
                "checkpoint holds a {} network, expected {expected}",
                ck.network.parametrization()
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| DlgnError::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| DlgnError::Checkpoint("size overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
