//! Error type shared across the crate.

use alloc::string::String;

/// Errors raised by the simulator, policies, environment and trainer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value (negative noise, bad qubit count, ...).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Qubit index outside the register.
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndex { index: usize, n_qubits: usize },
    /// Two-qubit gate addressed to a single wire.
    #[error("invalid gate: control and target are both qubit {0}")]
    InvalidGate(usize),
    /// Vector or tensor of the wrong length.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A NaN or infinity showed up where finite math was required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    /// The environment was stepped after it reported terminal.
    #[error("step on a finished episode (terminated or truncated)")]
    EpisodeOver,
}

pub type Result<T> = core::result::Result<T, Error>;
