//! Hybrid classical-quantum sketch recognition.
//!
//! The crate bundles everything needed to train and ablate a recurrent
//! sketch classifier whose head is a small variational quantum circuit:
//!
//! * [`qsim`]: dense statevector simulator, hardware-efficient ansatz and
//!   parameter-shift gradients;
//! * [`autograd`]: tape-based reverse-mode differentiation, LSTM cell,
//!   max-pool, softmax cross-entropy and Adam;
//! * [`sketchdata`]: QuickDraw ingestion, cubic Bezier stroke encoding and
//!   padded dataset files;
//! * [`models`]: the baseline and the three quantum variants;
//! * [`harness`]: training, evaluation, multi-seed suites and reports;
//! * [`gradcheck`]: finite-difference audits of every gradient path.

pub mod autograd;
pub mod gradcheck;
pub mod harness;
pub mod qsim;
pub mod sketchdata;
pub mod models;
pub mod par;
