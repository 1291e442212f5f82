use num_complex::Complex64;

use super::circuit::ParamSlot;
use super::{QsimError, Result};

const NORM_TOLERANCE: f64 = 1e-10;
const MAX_QUBITS: usize = 24;

/// Amplitudes of an `n`-qubit pure state over the `2^n` computational basis
/// states, with qubit 0 as the most significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QsimError::BadLength {
                expected: dim,
                got: index + 1,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps an explicit amplitude vector; rejects wrong lengths and
    /// vectors whose squared norm is off by more than 1e-10.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(QsimError::BadLength {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QsimError::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies a 2×2 unitary `[[m00, m01], [m10, m11]]` to one wire.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.mask(qubit);
        for k in 0..self.amplitudes.len() {
            if k & mask != 0 {
                continue;
            }
            let a0 = self.amplitudes[k];
            let a1 = self.amplitudes[k | mask];
            self.amplitudes[k] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[k | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for k in 0..self.amplitudes.len() {
            if k & cmask != 0 && k & tmask == 0 {
                self.amplitudes.swap(k, k | tmask);
            }
        }
    }

    /// In-place variant of [`apply_gate`].
    pub fn apply_in_place(&mut self, gate: &GateOp, angle: Option<f64>) -> Result<()> {
        match *gate {
            GateOp::Rotation { axis, qubit, .. } => {
                self.check_qubit(qubit)?;
                let theta = angle.ok_or(QsimError::MissingAngle)?;
                self.apply_single(qubit, axis.matrix(theta));
            }
            GateOp::Cnot { control, target } => {
                if angle.is_some() {
                    return Err(QsimError::UnexpectedAngle);
                }
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(QsimError::ControlIsTarget(control));
                }
                self.apply_cnot(control, target);
            }
        }
        Ok(())
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(QsimError::NoQubits);
    }
    if n_qubits > MAX_QUBITS {
        return Err(QsimError::TooManyQubits(n_qubits));
    }
    Ok(())
}

/// Rotation axis of a single-qubit Pauli rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// `exp(−i θ/2 σ_axis)` as a row-major 2×2 matrix.
    pub fn matrix(self, theta: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = (theta / 2.0).sin_cos();
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Axis::X => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            Axis::Y => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            Axis::Z => [
                [Complex64::new(c, -s), zero],
                [zero, Complex64::new(c, s)],
            ],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "RX",
            Axis::Y => "RY",
            Axis::Z => "RZ",
        }
    }
}

/// One gate of the rotation + CNOT dictionary. Rotations always carry the
/// slot their angle is read from; CNOTs never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateOp {
    Rotation {
        axis: Axis,
        qubit: usize,
        slot: ParamSlot,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl GateOp {
    pub fn rx(qubit: usize, slot: ParamSlot) -> Self {
        GateOp::Rotation {
            axis: Axis::X,
            qubit,
            slot,
        }
    }

    pub fn ry(qubit: usize, slot: ParamSlot) -> Self {
        GateOp::Rotation {
            axis: Axis::Y,
            qubit,
            slot,
        }
    }

    pub fn rz(qubit: usize, slot: ParamSlot) -> Self {
        GateOp::Rotation {
            axis: Axis::Z,
            qubit,
            slot,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    pub fn slot(&self) -> Option<ParamSlot> {
        match *self {
            GateOp::Rotation { slot, .. } => Some(slot),
            GateOp::Cnot { .. } => None,
        }
    }
}

/// Pauli-Z measured on a single wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservableZ {
    pub qubit: usize,
}

/// Returns `gate` applied to a copy of `state`; the input is left untouched.
pub fn apply_gate(state: &StateVector, gate: &GateOp, angle: Option<f64>) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_in_place(gate, angle)?;
    Ok(out)
}

/// Born-rule outcome distribution `p_k = |c_k|²`.
pub fn born_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// `Σ_k p_k · (±1)` with `+1` when `qubit`'s bit of `k` is 0.
pub fn z_expectation_from_probabilities(probs: &[f64], n_qubits: usize, qubit: usize) -> f64 {
    let mask = 1usize << (n_qubits - 1 - qubit);
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| if k & mask == 0 { p } else { -p })
        .sum()
}

/// `⟨ψ|σ_z^(q)|ψ⟩`, computed from [`born_probabilities`].
pub fn expval_z(state: &StateVector, obs: ObservableZ) -> Result<f64> {
    state.check_qubit(obs.qubit)?;
    let probs = born_probabilities(state);
    Ok(z_expectation_from_probabilities(
        &probs,
        state.n_qubits,
        obs.qubit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    const SLOT: ParamSlot = ParamSlot::Train(0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(state: &StateVector, expected: &[Complex64], tol: f64) {
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - e).norm() < tol, "{a} vs {e}");
        }
    }

    #[test]
    fn rz_zero_is_identity() {
        let psi = apply_gate(&StateVector::zero(2).unwrap(), &GateOp::ry(1, SLOT), Some(0.7))
            .unwrap();
        let out = apply_gate(&psi, &GateOp::rz(0, SLOT), Some(0.0)).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn rx_pi_on_zero() {
        let out = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::rx(0, SLOT), Some(PI))
            .unwrap();
        assert_amps(&out, &[c(0.0, 0.0), c(0.0, -1.0)], 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ has index 2 with qubit 0 as the high bit.
        let input = StateVector::basis(2, 0b10).unwrap();
        let out = apply_gate(&input, &GateOp::cnot(0, 1), None).unwrap();
        assert_eq!(out, StateVector::basis(2, 0b11).unwrap());
        let untouched = StateVector::basis(2, 0b01).unwrap();
        assert_eq!(
            apply_gate(&untouched, &GateOp::cnot(0, 1), None).unwrap(),
            untouched
        );
        // input unchanged
        assert_eq!(input, StateVector::basis(2, 0b10).unwrap());
    }

    #[test]
    fn gate_errors() {
        let s = StateVector::zero(2).unwrap();
        assert_eq!(
            apply_gate(&s, &GateOp::rx(2, SLOT), Some(1.0)),
            Err(QsimError::QubitOutOfRange {
                index: 2,
                n_qubits: 2
            })
        );
        assert_eq!(
            apply_gate(&s, &GateOp::rx(0, SLOT), None),
            Err(QsimError::MissingAngle)
        );
        assert_eq!(
            apply_gate(&s, &GateOp::cnot(0, 1), Some(1.0)),
            Err(QsimError::UnexpectedAngle)
        );
        assert_eq!(
            apply_gate(&s, &GateOp::cnot(1, 1), None),
            Err(QsimError::ControlIsTarget(1))
        );
    }

    #[test]
    fn born_examples() {
        assert_eq!(
            born_probabilities(&StateVector::zero(2).unwrap()),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let s = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::ry(0, SLOT), Some(FRAC_PI_2))
            .unwrap();
        let p = born_probabilities(&s);
        // cos²(π/4), sin²(π/4)
        let expected = [(PI / 4.0).cos().powi(2), (PI / 4.0).sin().powi(2)];
        assert!((p[0] - expected[0]).abs() < 1e-15 && (p[1] - expected[1]).abs() < 1e-15);
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn z_eigenstates_and_rx_cosine() {
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        assert_eq!(expval_z(&zero, ObservableZ { qubit: 0 }).unwrap(), 1.0);
        assert_eq!(expval_z(&one, ObservableZ { qubit: 0 }).unwrap(), -1.0);
        for theta in [0.0, FRAC_PI_3, FRAC_PI_2, PI] {
            let s = apply_gate(&zero, &GateOp::rx(0, SLOT), Some(theta)).unwrap();
            // Born sum over both outcomes: cos²(θ/2) − sin²(θ/2)
            let brute = (theta / 2.0).cos().powi(2) - (theta / 2.0).sin().powi(2);
            let e = expval_z(&s, ObservableZ { qubit: 0 }).unwrap();
            assert!((e - brute).abs() < 1e-15);
            assert!((e - theta.cos()).abs() < 1e-12);
        }
        assert!(expval_z(&zero, ObservableZ { qubit: 1 }).is_err());
    }

    #[test]
    fn from_amplitudes_validates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(StateVector::from_amplitudes(1, vec![c(h, 0.0), c(0.0, h)]).is_ok());
        assert!(matches!(
            StateVector::from_amplitudes(1, vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(QsimError::NotNormalized(_))
        ));
        assert!(matches!(
            StateVector::from_amplitudes(2, vec![c(1.0, 0.0)]),
            Err(QsimError::BadLength { .. })
        ));
        assert_eq!(StateVector::zero(0), Err(QsimError::NoQubits));
    }
}
