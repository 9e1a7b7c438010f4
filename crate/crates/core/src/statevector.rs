//! Statevector simulation of a small qubit register.
//!
//! Conventions (fixed so the dense-matrix oracle agrees):
//! * qubit 0 is the most significant bit of the basis index, so for a
//!   register of `d` qubits basis index `b` encodes `|q0 q1 .. q(d-1)>`;
//! * rotations are `exp(-i * angle * P / 2)` for Pauli `P`.

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pauli rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Highest qubit count the simulator accepts (2^12 amplitudes).
pub const MAX_QUBITS: usize = 12;

/// Full complex amplitude vector over the 2^d computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Prepare `|0...0>` on `n_qubits` wires.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(alloc::format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Sum of |amplitude|^2; 1 for any valid state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit mask selecting `qubit` under the MSB-first convention.
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Apply the single-qubit rotation `exp(-i * angle * P / 2)` about `axis`.
    pub fn apply_rotation(&mut self, qubit: usize, axis: Axis, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        if !angle.is_finite() {
            return Err(Error::NonFinite("rotation angle"));
        }
        let half = angle / 2.0;
        let (c, s) = (half.cos(), half.sin());
        // 2x2 matrix in row-major order [m00, m01, m10, m11].
        let m = match axis {
            Axis::X => [
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(c, 0.0),
            ],
            Axis::Y => [
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ],
            Axis::Z => [
                Complex64::new(c, -s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(c, s),
            ],
        };
        let mask = self.mask(qubit);
        for idx in 0..self.amps.len() {
            if idx & mask == 0 {
                let partner = idx | mask;
                let a0 = self.amps[idx];
                let a1 = self.amps[partner];
                self.amps[idx] = m[0] * a0 + m[1] * a1;
                self.amps[partner] = m[2] * a0 + m[3] * a1;
            }
        }
        Ok(())
    }

    /// Apply CNOT: flip `target` on basis states where `control` is 1.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidGate(control));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for idx in 0..self.amps.len() {
            if idx & cmask != 0 && idx & tmask == 0 {
                self.amps.swap(idx, idx | tmask);
            }
        }
        Ok(())
    }

    /// Pauli-Z expectation on `qubit`: P(bit 0) - P(bit 1), in [-1, 1].
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let mut z = 0.0;
        for (idx, amp) in self.amps.iter().enumerate() {
            let sign = if idx & mask == 0 { 1.0 } else { -1.0 };
            z += sign * amp.norm_sqr();
        }
        Ok(z)
    }
}
