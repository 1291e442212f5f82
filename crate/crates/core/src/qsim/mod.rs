//! Dense statevector simulation of small parameterized circuits.
//!
//! Conventions used throughout:
//!
//! * qubit 0 is the most significant bit of a basis index, so for two qubits
//!   the basis order is `|00⟩, |01⟩, |10⟩, |11⟩` and `|10⟩` has index 2;
//! * rotations are `R_a(θ) = exp(−i θ/2 σ_a)`, which makes the ±π/2 shift
//!   rule exact for every angle slot;
//! * expectation values are exact (no shot sampling).

mod circuit;
mod gradient;
mod state;

pub use circuit::{build_hea, build_hea_layers, run_circuit, CircuitLayout, ParamSlot};
pub use gradient::{param_shift_grad, param_shift_grad_with, ShiftJacobian, ShiftRecipe};
pub use state::{
    apply_gate, born_probabilities, expval_z, z_expectation_from_probabilities, Axis, GateOp,
    ObservableZ, StateVector,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("CNOT control and target are both qubit {0}")]
    ControlIsTarget(usize),
    #[error("rotation gate requires an angle")]
    MissingAngle,
    #[error("CNOT takes no angle")]
    UnexpectedAngle,
    #[error("register must have at least one qubit")]
    NoQubits,
    #[error("register of {0} qubits is too large for dense simulation")]
    TooManyQubits(usize),
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("{kind} slot {index} is bound {count} times")]
    SlotBinding {
        kind: &'static str,
        index: usize,
        count: usize,
    },
    #[error("expected {expected} {kind} angles, got {got}")]
    AngleCount {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("layout parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, QsimError>;
