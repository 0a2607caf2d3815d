//! Dense ReLU network with hand-written backpropagation and Adam.
//!
//! Parameters live in one flat vector (per layer: weights row-major
//! `out × in`, then biases), which keeps optimizer updates, target-network
//! copies and checksums trivial.

mod io;
mod mlp;
mod optim;

pub use io::{load_weights, save_weights, WeightsFile, WEIGHTS_FORMAT_VERSION};
pub use mlp::{init_network, Batch, Gradients, Mlp};
pub use optim::{clip_global_norm, copy_into_target, OptimizerKind, OptimizerState};

use thiserror::Error;

/// `[4, 64, 64, 64, 4]`: observation in, one Q-value per action out.
pub const Q_NETWORK_DIMS: [usize; 5] = [4, 64, 64, 64, 4];

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid layer dims {0:?}: need at least two positive sizes")]
    InvalidDims(Vec<usize>),
    #[error("input has {found} values, network expects {expected}")]
    InputSize { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("empty batch")]
    EmptyBatch,
    #[error("action {action} out of range for {outputs} outputs")]
    ActionOutOfRange { action: usize, outputs: usize },
    #[error("shape mismatch: expected {expected} parameters, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("architecture mismatch: file has {found:?}, expected {expected:?}")]
    Architecture { expected: Vec<usize>, found: Vec<usize> },
    #[error("unsupported weights format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("malformed weights file: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NeuralError> = std::result::Result<T, E>;
