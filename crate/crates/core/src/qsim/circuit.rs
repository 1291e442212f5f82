use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::state::{z_expectation_from_probabilities, born_probabilities, Axis, GateOp, StateVector};
use super::{QsimError, Result};

/// Where a rotation reads its angle from: the per-sample embedding vector or
/// the trainable parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamSlot {
    Embed(usize),
    Train(usize),
}

impl fmt::Display for ParamSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSlot::Embed(i) => write!(f, "embed {i}"),
            ParamSlot::Train(i) => write!(f, "train {i}"),
        }
    }
}

/// A validated gate sequence with its slot bookkeeping.
///
/// Every embed index in `0..n_embed` and every train index in `0..n_train`
/// is bound by exactly one rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLayout {
    n_qubits: usize,
    gates: Vec<GateOp>,
    n_embed: usize,
    n_train: usize,
    entangling: bool,
}

impl CircuitLayout {
    pub fn new(n_qubits: usize, gates: Vec<GateOp>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QsimError::NoQubits);
        }
        let check = |q: usize| {
            if q >= n_qubits {
                Err(QsimError::QubitOutOfRange { index: q, n_qubits })
            } else {
                Ok(())
            }
        };
        let mut embed_counts: Vec<usize> = Vec::new();
        let mut train_counts: Vec<usize> = Vec::new();
        let mut entangling = false;
        for gate in &gates {
            match *gate {
                GateOp::Rotation { qubit, slot, .. } => {
                    check(qubit)?;
                    let (counts, i) = match slot {
                        ParamSlot::Embed(i) => (&mut embed_counts, i),
                        ParamSlot::Train(i) => (&mut train_counts, i),
                    };
                    if counts.len() <= i {
                        counts.resize(i + 1, 0);
                    }
                    counts[i] += 1;
                }
                GateOp::Cnot { control, target } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return Err(QsimError::ControlIsTarget(control));
                    }
                    entangling = true;
                }
            }
        }
        for (kind, counts) in [("embed", &embed_counts), ("train", &train_counts)] {
            if let Some((index, &count)) = counts.iter().enumerate().find(|(_, &c)| c != 1) {
                return Err(QsimError::SlotBinding { kind, index, count });
            }
        }
        Ok(Self {
            n_qubits,
            gates,
            n_embed: embed_counts.len(),
            n_train: train_counts.len(),
            entangling,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn n_embed(&self) -> usize {
        self.n_embed
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn is_entangling(&self) -> bool {
        self.entangling
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, GateOp::Cnot { .. }))
            .count()
    }

    pub(crate) fn check_lengths(&self, embed: &[f64], theta: &[f64]) -> Result<()> {
        if embed.len() != self.n_embed {
            return Err(QsimError::AngleCount {
                kind: "embed",
                expected: self.n_embed,
                got: embed.len(),
            });
        }
        if theta.len() != self.n_train {
            return Err(QsimError::AngleCount {
                kind: "train",
                expected: self.n_train,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Prepares `|0…0⟩` and applies every gate with its slot resolved.
    pub fn prepare(&self, embed: &[f64], theta: &[f64]) -> Result<StateVector> {
        self.check_lengths(embed, theta)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        for gate in &self.gates {
            let angle = gate.slot().map(|slot| match slot {
                ParamSlot::Embed(i) => embed[i],
                ParamSlot::Train(i) => theta[i],
            });
            state.apply_in_place(gate, angle)?;
        }
        Ok(state)
    }
}

/// Writes one gate per line after a `qubits N` header, e.g. `RY 2 train 7`
/// or `CNOT 0 1`.
impl fmt::Display for CircuitLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for gate in &self.gates {
            match gate {
                GateOp::Rotation { axis, qubit, slot } => {
                    writeln!(f, "{} {} {}", axis.name(), qubit, slot)?
                }
                GateOp::Cnot { control, target } => writeln!(f, "CNOT {control} {target}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for CircuitLayout {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| QsimError::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<usize> {
                fields
                    .get(i)
                    .ok_or_else(|| err("missing field"))?
                    .parse()
                    .map_err(|_| err("expected an integer"))
            };
            match fields[0] {
                "qubits" => n_qubits = Some(num(1)?),
                "CNOT" => gates.push(GateOp::cnot(num(1)?, num(2)?)),
                name @ ("RX" | "RY" | "RZ") => {
                    let axis = match name {
                        "RX" => Axis::X,
                        "RY" => Axis::Y,
                        _ => Axis::Z,
                    };
                    let slot = match fields.get(2).copied() {
                        Some("embed") => ParamSlot::Embed(num(3)?),
                        Some("train") => ParamSlot::Train(num(3)?),
                        _ => return Err(err("expected `embed` or `train` slot")),
                    };
                    gates.push(GateOp::Rotation {
                        axis,
                        qubit: num(1)?,
                        slot,
                    });
                }
                other => return Err(err(&format!("unknown gate `{other}`"))),
            }
        }
        let n_qubits = n_qubits.ok_or(QsimError::Parse {
            line: 0,
            msg: "missing `qubits` header".into(),
        })?;
        CircuitLayout::new(n_qubits, gates)
    }
}

/// Single-layer hardware-efficient ansatz: RX angle embedding on every wire,
/// then RY·RZ·RY trainable rotations per wire, then (if `entangling`) a
/// linear CNOT chain `i → i+1`.
pub fn build_hea(n_qubits: usize, entangling: bool) -> Result<CircuitLayout> {
    build_hea_layers(n_qubits, entangling, 1)
}

/// [`build_hea`] with `layers` repetitions of the trainable block.
pub fn build_hea_layers(n_qubits: usize, entangling: bool, layers: usize) -> Result<CircuitLayout> {
    if n_qubits == 0 {
        return Err(QsimError::NoQubits);
    }
    let mut gates: Vec<GateOp> = (0..n_qubits)
        .map(|q| GateOp::rx(q, ParamSlot::Embed(q)))
        .collect();
    for layer in 0..layers {
        let base = 3 * n_qubits * layer;
        for q in 0..n_qubits {
            let slot = |k: usize| ParamSlot::Train(base + 3 * q + k);
            gates.push(GateOp::ry(q, slot(0)));
            gates.push(GateOp::rz(q, slot(1)));
            gates.push(GateOp::ry(q, slot(2)));
        }
        if entangling {
            gates.extend((0..n_qubits.saturating_sub(1)).map(|q| GateOp::cnot(q, q + 1)));
        }
    }
    CircuitLayout::new(n_qubits, gates)
}

/// Exact `⟨σ_z⟩` on every wire, in wire order.
pub fn run_circuit(layout: &CircuitLayout, embed: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let state = layout.prepare(embed, theta)?;
    let probs = born_probabilities(&state);
    Ok((0..layout.n_qubits)
        .map(|q| z_expectation_from_probabilities(&probs, layout.n_qubits, q))
        .collect())
}
