use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Qd,
    QdFrozen,
    QdSep,
    Baseline,
}

impl ModelKind {
    /// Report row order.
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Qd,
        ModelKind::QdFrozen,
        ModelKind::QdSep,
        ModelKind::Baseline,
    ];

    /// Display name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Qd => "QD",
            ModelKind::QdFrozen => "QD-Frozen",
            ModelKind::QdSep => "QD-Sep",
            ModelKind::Baseline => "baseline",
        }
    }

    /// Lower-case name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Qd => "qd",
            ModelKind::QdFrozen => "qd-frozen",
            ModelKind::QdSep => "qd-sep",
            ModelKind::Baseline => "baseline",
        }
    }

    pub fn is_quantum(self) -> bool {
        self != ModelKind::Baseline
    }

    pub fn entangling(self) -> bool {
        self != ModelKind::QdSep
    }

    pub fn theta_trainable(self) -> bool {
        self != ModelKind::QdFrozen
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.slug() == norm)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden_size: usize,
    pub n_qubits: usize,
    pub n_classes: usize,
    /// Squash embedding pre-activations to `π·tanh(z)`.
    pub angle_squash: bool,
    pub hea_layers: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Qd,
            hidden_size: 128,
            n_qubits: 5,
            n_classes: 3,
            angle_squash: true,
            hea_layers: 1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.hidden_size == 0 || !self.hidden_size.is_multiple_of(2) {
            return bad("hidden_size must be a positive even number");
        }
        if self.n_qubits == 0 {
            return bad("n_qubits must be at least 1");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        if self.hea_layers == 0 {
            return bad("hea_layers must be at least 1");
        }
        Ok(())
    }
}
