//! Dense-matrix reference evaluator for the variational circuit.
//!
//! Builds the full 2^d x 2^d unitary gate-by-gate with explicit Kronecker
//! products and conjugates the Z observable through it. Exponential in
//! the qubit count and meant only for cross-checking the statevector path
//! in tests; it shares no code with [`crate::statevector`].

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::statevector::Axis;
use crate::vqc::VqcParams;

/// Row-major square complex matrix.
#[derive(Clone)]
struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.n + col] = v;
    }

    fn matmul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.at(j, i).conj());
            }
        }
        out
    }

    fn kron(&self, other: &CMat) -> CMat {
        let n = self.n * other.n;
        let mut out = CMat::zeros(n);
        for ar in 0..self.n {
            for ac in 0..self.n {
                let a = self.at(ar, ac);
                for br in 0..other.n {
                    for bc in 0..other.n {
                        out.set(ar * other.n + br, ac * other.n + bc, a * other.at(br, bc));
                    }
                }
            }
        }
        out
    }
}

fn rotation_2x2(axis: Axis, angle: f64) -> CMat {
    let half = angle / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let mut m = CMat::zeros(2);
    match axis {
        Axis::X => {
            m.set(0, 0, Complex64::new(c, 0.0));
            m.set(0, 1, Complex64::new(0.0, -s));
            m.set(1, 0, Complex64::new(0.0, -s));
            m.set(1, 1, Complex64::new(c, 0.0));
        }
        Axis::Y => {
            m.set(0, 0, Complex64::new(c, 0.0));
            m.set(0, 1, Complex64::new(-s, 0.0));
            m.set(1, 0, Complex64::new(s, 0.0));
            m.set(1, 1, Complex64::new(c, 0.0));
        }
        Axis::Z => {
            m.set(0, 0, Complex64::new(c, -s));
            m.set(1, 1, Complex64::new(c, s));
        }
    }
    m
}

/// Lift a 2x2 into the d-qubit space on `qubit` (qubit 0 = leftmost factor).
fn single_qubit_op(n_qubits: usize, qubit: usize, gate: &CMat) -> CMat {
    let mut op = CMat::identity(1);
    for q in 0..n_qubits {
        let factor = if q == qubit {
            gate.clone()
        } else {
            CMat::identity(2)
        };
        op = op.kron(&factor);
    }
    op
}

/// CNOT as an explicit basis-state permutation matrix.
fn cnot_op(n_qubits: usize, control: usize, target: usize) -> CMat {
    let dim = 1 << n_qubits;
    let cmask = 1usize << (n_qubits - 1 - control);
    let tmask = 1usize << (n_qubits - 1 - target);
    let mut m = CMat::zeros(dim);
    for col in 0..dim {
        let row = if col & cmask != 0 { col ^ tmask } else { col };
        m.set(row, col, Complex64::new(1.0, 0.0));
    }
    m
}

/// Full circuit unitary: embedding first, then every ansatz layer.
fn circuit_unitary(obs_scaled: &[f64], params: &VqcParams) -> CMat {
    let d = params.n_qubits();
    let mut u = CMat::identity(1 << d);
    let embed_axis: Axis = params.embed_axis.into();
    for (qubit, &angle) in obs_scaled.iter().enumerate() {
        u = single_qubit_op(d, qubit, &rotation_2x2(embed_axis, angle)).matmul(&u);
    }
    let angles = params.angles();
    for layer in 0..params.depth() {
        for qubit in 0..d {
            let base = (layer * d + qubit) * 3;
            for (axis_idx, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
                let gate = rotation_2x2(axis, angles[base + axis_idx]);
                u = single_qubit_op(d, qubit, &gate).matmul(&u);
            }
        }
        for qubit in 0..d.saturating_sub(1) {
            u = cnot_op(d, qubit, qubit + 1).matmul(&u);
        }
    }
    u
}

/// `<0| U^dag (Z (x) I..) U |0>` by dense conjugation.
pub fn expectation_z_dense(obs_scaled: &[f64], params: &VqcParams) -> f64 {
    let d = params.n_qubits();
    let dim = 1 << d;
    let mut z0 = CMat::zeros(2);
    z0.set(0, 0, Complex64::new(1.0, 0.0));
    z0.set(1, 1, Complex64::new(-1.0, 0.0));
    let observable = z0.kron(&CMat::identity(dim / 2));

    let u = circuit_unitary(obs_scaled, params);
    let conjugated = u.dagger().matmul(&observable).matmul(&u);
    conjugated.at(0, 0).re
}
