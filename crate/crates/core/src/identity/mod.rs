//! Pass/fail ledgers for the closure relations and the integral identities satisfied by
//! solved profiles.

mod algebraic;
mod bump;
mod integral;

use serde::{Deserialize, Serialize};

pub use algebraic::{run_algebraic, run_algebraic_with, Corruption, ALGEBRAIC_REGISTRY};
pub use bump::Bump;
pub use integral::{
    evaluate_identity, reduced_ib_discrete, run_integral, IdentityKind, IdentityValue,
    INTEGRAL_REGISTRY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub identity_id: String,
    /// What the identity states.
    pub location: String,
    /// None when the identity does not apply to the input (see `note`).
    pub max_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
    pub note: Option<String>,
}

impl LedgerEntry {
    fn measured(id: &str, location: &str, max_error: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            identity_id: id.into(),
            location: location.into(),
            max_error: Some(max_error),
            tolerance,
            pass: max_error.is_finite() && max_error <= tolerance,
            samples,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityLedger {
    pub seed: u64,
    pub entries: Vec<LedgerEntry>,
}

impl IdentityLedger {
    fn sorted(seed: u64, mut entries: Vec<LedgerEntry>) -> Self {
        entries.sort_by(|a, b| a.identity_id.cmp(&b.identity_id));
        Self { seed, entries }
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, id: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.identity_id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.identity_id.as_str()).collect()
    }
}
