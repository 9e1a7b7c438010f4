//! The variational circuit: angle embedding, layered ansatz, Pauli-Z
//! readout, optional Gaussian measurement noise and parameter-shift
//! gradients.
//!
//! One layer applies RX, RY, RZ on every qubit (in that order) and then a
//! CNOT chain `0->1, 1->2, ..`; the observable is Z on qubit 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::statevector::{Axis, Statevector};

/// Which rotation carries the embedded observation angles.
///
/// The default is X; Y is kept selectable since either convention is in
/// common use for angle embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbedAxis {
    #[default]
    X,
    Y,
}

impl From<EmbedAxis> for Axis {
    fn from(axis: EmbedAxis) -> Axis {
        match axis {
            EmbedAxis::X => Axis::X,
            EmbedAxis::Y => Axis::Y,
        }
    }
}

/// Trainable circuit parameters: a depth x qubits x 3 tensor of rotation
/// angles plus the embedding scale.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcParams {
    n_qubits: usize,
    depth: usize,
    /// Flattened `[layer][qubit][axis]`, length `3 * depth * n_qubits`.
    angles: Vec<f64>,
    pub embed_scale: f64,
    pub embed_axis: EmbedAxis,
}

impl VqcParams {
    pub fn new(n_qubits: usize, depth: usize, angles: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || depth == 0 {
            return Err(Error::Config(alloc::format!(
                "circuit needs at least one qubit and one layer, got d={n_qubits}, L={depth}"
            )));
        }
        let expected = 3 * n_qubits * depth;
        if angles.len() != expected {
            return Err(Error::Shape {
                context: "vqc angles",
                expected,
                got: angles.len(),
            });
        }
        if !angles.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite("vqc angles"));
        }
        Ok(VqcParams {
            n_qubits,
            depth,
            angles,
            embed_scale: 1.0,
            embed_axis: EmbedAxis::X,
        })
    }

    /// Small-angle random initialisation, uniform in (-0.1, 0.1). The
    /// first layer's X rotations are centered at pi/2 so the readout
    /// starts near zero and the initial policy is close to uniform.
    pub fn init(n_qubits: usize, depth: usize, rng: &mut StreamRng) -> Result<Self> {
        let mut angles: Vec<f64> = (0..3 * n_qubits * depth)
            .map(|_| rng.uniform_in(-0.1, 0.1))
            .collect();
        for qubit in 0..n_qubits {
            angles[qubit * 3] += core::f64::consts::FRAC_PI_2;
        }
        Self::new(n_qubits, depth, angles)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of trainable angles, `3 * n_qubits * depth`.
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    fn flat_index(&self, layer: usize, qubit: usize, axis: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + axis
    }
}

/// Additive Gaussian noise on the measured expectation value, standing in
/// for finite-shot sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoiseModel {
    sigma_z: f64,
}

impl MeasurementNoiseModel {
    pub fn new(sigma_z: f64) -> Result<Self> {
        if !sigma_z.is_finite() || sigma_z < 0.0 {
            return Err(Error::Config(alloc::format!(
                "measurement noise sigma must be finite and >= 0, got {sigma_z}"
            )));
        }
        Ok(MeasurementNoiseModel { sigma_z })
    }

    /// Noiseless readout.
    pub fn none() -> Self {
        MeasurementNoiseModel { sigma_z: 0.0 }
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }
}

impl Default for MeasurementNoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// Expectation plus its gradient from a full parameter-shift pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    /// Expectation at the unshifted parameters.
    pub value: f64,
    /// d(value)/d(angle), in the flattening order of [`VqcParams::angles`].
    pub grads: Vec<f64>,
    /// Shifted circuit evaluations performed: 2 per angle.
    pub shift_evals: u64,
}

fn check_obs(obs_scaled: &[f64], n_qubits: usize) -> Result<()> {
    if obs_scaled.len() != n_qubits {
        return Err(Error::Shape {
            context: "embedded observation",
            expected: n_qubits,
            got: obs_scaled.len(),
        });
    }
    if !obs_scaled.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("embedded observation"));
    }
    Ok(())
}

/// Rotate qubit `i` by `scaled_obs[i]` about the embedding axis.
pub fn angle_embedding(state: &mut Statevector, scaled_obs: &[f64], axis: EmbedAxis) -> Result<()> {
    check_obs(scaled_obs, state.n_qubits())?;
    for (qubit, &angle) in scaled_obs.iter().enumerate() {
        state.apply_rotation(qubit, axis.into(), angle)?;
    }
    Ok(())
}

/// Run the full circuit and return the Z expectation on qubit 0.
pub fn run_vqc(obs_scaled: &[f64], params: &VqcParams) -> Result<f64> {
    check_obs(obs_scaled, params.n_qubits)?;
    let mut state = Statevector::new(params.n_qubits)?;
    angle_embedding(&mut state, obs_scaled, params.embed_axis)?;
    for layer in 0..params.depth {
        for qubit in 0..params.n_qubits {
            state.apply_rotation(
                qubit,
                Axis::X,
                params.angles[params.flat_index(layer, qubit, 0)],
            )?;
            state.apply_rotation(
                qubit,
                Axis::Y,
                params.angles[params.flat_index(layer, qubit, 1)],
            )?;
            state.apply_rotation(
                qubit,
                Axis::Z,
                params.angles[params.flat_index(layer, qubit, 2)],
            )?;
        }
        for qubit in 0..params.n_qubits.saturating_sub(1) {
            state.apply_cnot(qubit, qubit + 1)?;
        }
    }
    state.expectation_z(0)
}

/// Corrupt an expectation value with `N(0, sigma_z^2)`; the output is not
/// clamped to [-1, 1].
pub fn apply_measurement_noise(z: f64, model: &MeasurementNoiseModel, rng: &mut StreamRng) -> f64 {
    if model.sigma_z == 0.0 {
        return z;
    }
    z + model.sigma_z * rng.normal()
}

/// Exact gradient of the expectation w.r.t. every ansatz angle via the
/// parameter-shift rule: `0.5 * (z(a + pi/2) - z(a - pi/2))` per angle.
/// Embedding angles are not differentiated.
pub fn parameter_shift_gradient(obs_scaled: &[f64], params: &VqcParams) -> Result<GradientReport> {
    let value = run_vqc(obs_scaled, params)?;
    let mut shifted = params.clone();
    let mut grads = vec![0.0; params.len()];
    for (k, grad) in grads.iter_mut().enumerate() {
        let original = params.angles[k];
        shifted.angles[k] = original + core::f64::consts::FRAC_PI_2;
        let plus = run_vqc(obs_scaled, &shifted)?;
        shifted.angles[k] = original - core::f64::consts::FRAC_PI_2;
        let minus = run_vqc(obs_scaled, &shifted)?;
        shifted.angles[k] = original;
        *grad = 0.5 * (plus - minus);
    }
    Ok(GradientReport {
        value,
        grads,
        shift_evals: 2 * params.len() as u64,
    })
}
