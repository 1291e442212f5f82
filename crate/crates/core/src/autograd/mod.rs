//! Reverse-mode automatic differentiation over small dense tensors, plus
//! the pieces the sketch models are assembled from.

mod adam;
mod checkpoint;
mod graph;
mod lstm;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use graph::{softmax, Graph, Value};
pub use lstm::{lstm_cell, LstmLayer, LstmParams};
pub use params::{Bound, Gradients, ParamId, ParamStore, Parameter};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutogradError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("slice {start}..{} out of range for shape {shape:?}", start + len)]
    SliceOutOfRange {
        start: usize,
        len: usize,
        shape: Vec<usize>,
    },
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("backward needs a scalar root, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("external node has {inputs} inputs but {jacobians} jacobians")]
    JacobianCount { inputs: usize, jacobians: usize },
    #[error("optimizer step without gradients from a completed backward pass")]
    MissingGradients,
    #[error("gradient buffers do not match the parameter layout")]
    GradientLayout,
    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, AutogradError>;
