//! Parameter-shift Jacobians of the per-wire `⟨σ_z⟩` outputs.
//!
//! Every slot feeds a Pauli rotation `exp(−i θ/2 σ)`, whose generator has
//! eigenvalues ±1/2, so
//!
//! ```text
//! ∂f/∂θ = (f(θ + π/2) − f(θ − π/2)) / 2
//! ```
//!
//! holds exactly for embedding and trainable slots alike.

use std::f64::consts::FRAC_PI_2;

use super::circuit::{run_circuit, CircuitLayout, ParamSlot};
use super::Result;

/// How shifted evaluations are taken. The default is the exact ±π/2 rule
/// over all slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRecipe {
    pub shift: f64,
    /// Skip the trainable-slot block (used when those parameters are frozen).
    pub include_theta: bool,
    /// Diagnostic hook: use a different shift for one slot. Only gradient
    /// checkers should set this.
    pub corrupt: Option<(ParamSlot, f64)>,
}

impl Default for ShiftRecipe {
    fn default() -> Self {
        Self {
            shift: FRAC_PI_2,
            include_theta: true,
            corrupt: None,
        }
    }
}

/// Row-major Jacobians: `embed[q * n_embed + i] = ∂⟨σ_z^(q)⟩ / ∂embed_i`,
/// likewise for `theta` (absent when the recipe skipped it).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftJacobian {
    pub n_qubits: usize,
    pub n_embed: usize,
    pub n_train: usize,
    pub embed: Vec<f64>,
    pub theta: Option<Vec<f64>>,
}

impl ShiftJacobian {
    pub fn d_embed(&self, qubit: usize, slot: usize) -> f64 {
        self.embed[qubit * self.n_embed + slot]
    }

    pub fn d_theta(&self, qubit: usize, slot: usize) -> Option<f64> {
        self.theta
            .as_ref()
            .map(|t| t[qubit * self.n_train + slot])
    }
}

/// Exact parameter-shift Jacobians with respect to both slot kinds.
pub fn param_shift_grad(
    layout: &CircuitLayout,
    embed: &[f64],
    theta: &[f64],
) -> Result<ShiftJacobian> {
    param_shift_grad_with(layout, embed, theta, &ShiftRecipe::default())
}

pub fn param_shift_grad_with(
    layout: &CircuitLayout,
    embed: &[f64],
    theta: &[f64],
    recipe: &ShiftRecipe,
) -> Result<ShiftJacobian> {
    layout.check_lengths(embed, theta)?;
    let n_qubits = layout.n_qubits();
    let shift_for = |slot: ParamSlot| match recipe.corrupt {
        Some((bad, s)) if bad == slot => s,
        _ => recipe.shift,
    };

    let mut embed_jac = vec![0.0; n_qubits * embed.len()];
    let mut shifted = embed.to_vec();
    for i in 0..embed.len() {
        let s = shift_for(ParamSlot::Embed(i));
        shifted[i] = embed[i] + s;
        let plus = run_circuit(layout, &shifted, theta)?;
        shifted[i] = embed[i] - s;
        let minus = run_circuit(layout, &shifted, theta)?;
        shifted[i] = embed[i];
        for q in 0..n_qubits {
            embed_jac[q * embed.len() + i] = (plus[q] - minus[q]) / 2.0;
        }
    }

    let theta_jac = if recipe.include_theta {
        let mut jac = vec![0.0; n_qubits * theta.len()];
        let mut shifted = theta.to_vec();
        for j in 0..theta.len() {
            let s = shift_for(ParamSlot::Train(j));
            shifted[j] = theta[j] + s;
            let plus = run_circuit(layout, embed, &shifted)?;
            shifted[j] = theta[j] - s;
            let minus = run_circuit(layout, embed, &shifted)?;
            shifted[j] = theta[j];
            for q in 0..n_qubits {
                jac[q * theta.len() + j] = (plus[q] - minus[q]) / 2.0;
            }
        }
        Some(jac)
    } else {
        None
    };

    Ok(ShiftJacobian {
        n_qubits,
        n_embed: embed.len(),
        n_train: theta.len(),
        embed: embed_jac,
        theta: theta_jac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::GateOp;

    fn single_rx() -> CircuitLayout {
        CircuitLayout::new(1, vec![GateOp::rx(0, ParamSlot::Train(0))]).unwrap()
    }

    #[test]
    fn rx_derivative() {
        let l = single_rx();
        let g = param_shift_grad(&l, &[], &[FRAC_PI_2]).unwrap();
        // analytic −sin θ
        assert!((g.d_theta(0, 0).unwrap() + 1.0).abs() < 1e-12);
        // central differences cross-check
        let h = 1e-5;
        let f = |t: f64| run_circuit(&l, &[], &[t]).unwrap()[0];
        let fd = (f(FRAC_PI_2 + h) - f(FRAC_PI_2 - h)) / (2.0 * h);
        assert!((g.d_theta(0, 0).unwrap() - fd).abs() < 1e-9);

        let g0 = param_shift_grad(&l, &[], &[0.0]).unwrap();
        assert_eq!(g0.d_theta(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn frozen_recipe_skips_theta() {
        let l = crate::qsim::build_hea(2, true).unwrap();
        let recipe = ShiftRecipe {
            include_theta: false,
            ..ShiftRecipe::default()
        };
        let g = param_shift_grad_with(&l, &[0.3, 0.1], &[0.2; 6], &recipe).unwrap();
        assert!(g.theta.is_none());
        let full = param_shift_grad(&l, &[0.3, 0.1], &[0.2; 6]).unwrap();
        assert_eq!(g.embed, full.embed);
    }

    #[test]
    fn corrupted_slot_changes_only_that_column() {
        let l = crate::qsim::build_hea(2, true).unwrap();
        let embed = [0.4, -0.9];
        let theta = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let good = param_shift_grad(&l, &embed, &theta).unwrap();
        let recipe = ShiftRecipe {
            corrupt: Some((ParamSlot::Train(4), 1.0)),
            ..ShiftRecipe::default()
        };
        let bad = param_shift_grad_with(&l, &embed, &theta, &recipe).unwrap();
        assert_eq!(good.embed, bad.embed);
        for q in 0..2 {
            for j in 0..6 {
                let (a, b) = (good.d_theta(q, j).unwrap(), bad.d_theta(q, j).unwrap());
                if j == 4 {
                    continue;
                }
                assert_eq!(a, b);
            }
        }
        assert!((0..2).any(|q| good.d_theta(q, 4) != bad.d_theta(q, 4)));
    }
}
