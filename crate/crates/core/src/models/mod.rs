//! The four sketch classifiers: an all-classical LSTM baseline and three
//! hybrid variants whose head is the hardware-efficient ansatz.
//!
//! ```text
//! baseline: LSTM → LSTM → affine(H → classes)
//! QD*:      LSTM → LSTM → maxpool(H → H/2) → fc1 → ReLU → fc2 → ReLU
//!           → fc_embed(→ qubits) → π·tanh → circuit ⟨σ_z⟩ → fc_out(→ classes)
//! ```
//!
//! The circuit enters the autodiff tape as an external node whose
//! Jacobians come from the parameter-shift rule.

mod config;
mod hybrid;

pub use config::{ModelConfig, ModelKind};
pub use hybrid::{argmax, Affine, GradMode, Head, HybridModel, QuantumHead, Trace};

use thiserror::Error;

use crate::autograd::AutogradError;
use crate::qsim::QsimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Autograd(#[from] AutogradError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("sample rows must have width {expected}, got shape {got:?}")]
    Width { expected: usize, got: Vec<usize> },
    #[error("sample has no valid rows")]
    NoValidRows,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("unknown model kind `{0}` (expected baseline, qd, qd-frozen or qd-sep)")]
    UnknownKind(String),
    #[error("backward called on a value that no forward pass produced")]
    BackwardWithoutForward,
    #[error("bad model checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
