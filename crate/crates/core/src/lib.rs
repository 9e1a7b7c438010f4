//! Hybrid quantum-classical policy gradients for CartPole control.
//!
//! This crate holds the pure algorithmic layer: a from-scratch statevector
//! simulator with parameter-shift differentiation, the two policies (a
//! tanh MLP with manual backpropagation and a variational-quantum-circuit
//! Bernoulli policy), deterministic CartPole dynamics, the REINFORCE
//! training loop, and the post-training evaluation math.
//!
//! It is `no_std` (with `alloc`); all IO, the CLI and the on-disk run
//! formats live in the companion `qpg-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod env;
pub mod error;
pub mod eval;
pub mod mlp;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod statevector;
pub mod trainer;
pub mod vqc;

pub use error::{Error, Result};
