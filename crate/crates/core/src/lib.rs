//! Differentiable logic gate networks.
//!
//! Relaxed two-input logic gates under two parametrizations (softmax over all
//! sixteen gates, or one learnable estimate per input corner), dense networks
//! built from them, a training engine with gradient diagnostics, and the
//! hardened circuit pipeline: discretization, simplification, bit-packed
//! inference and a text netlist format.

pub mod checkpoint;
pub mod circuit;
pub mod config;
pub mod data;
pub mod error;
pub mod gates;
pub mod init;
pub mod matrix;
pub mod network;
pub mod neuron;
pub mod rng;
pub mod train;

pub use error::{DlgnError, Result};
pub use gates::GateId;
pub use matrix::Matrix;
