//! Versioned weight files: a JSON envelope with shape metadata and the
//! flat parameter vector as decimal strings that round-trip f64 values
//! bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qpg_core::mlp::MlpParams;
use qpg_core::policy::{ClassicalPolicy, NormalizationSpec, Policy, QuantumPolicy};
use qpg_core::vqc::{MeasurementNoiseModel, VqcParams};

use crate::args::{Agent, Axis};
use crate::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Shape {
    Quantum {
        n_qubits: usize,
        depth: usize,
        embed_scale: f64,
        embed_axis: Axis,
    },
    Classical {
        hidden: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    schema_version: u32,
    agent_kind: Agent,
    shape: Shape,
    flat_params: Vec<String>,
}

/// Shortest decimal form that parses back to the identical f64.
fn encode(value: f64) -> String {
    format!("{value}")
}

fn decode(raw: &str, index: usize) -> Result<f64> {
    let value: f64 = raw.parse().map_err(|_| {
        CliError::Runtime(format!("weight file: flat_params[{index}] is not a number"))
    })?;
    if !value.is_finite() {
        return Err(CliError::Runtime(format!(
            "weight file: flat_params[{index}] is not finite"
        )));
    }
    Ok(value)
}

fn envelope(policy: &Policy) -> WeightFile {
    let flat_params = policy.flat_params().iter().map(|v| encode(*v)).collect();
    match policy {
        Policy::Classical(c) => WeightFile {
            schema_version: SCHEMA_VERSION,
            agent_kind: Agent::Classical,
            shape: Shape::Classical {
                hidden: c.params.hidden(),
            },
            flat_params,
        },
        Policy::Quantum(q) => WeightFile {
            schema_version: SCHEMA_VERSION,
            agent_kind: Agent::Quantum,
            shape: Shape::Quantum {
                n_qubits: q.circuit.n_qubits(),
                depth: q.circuit.depth(),
                embed_scale: q.circuit.embed_scale,
                embed_axis: q.circuit.embed_axis.into(),
            },
            flat_params,
        },
    }
}

/// Serialize a policy; written atomically by the store.
pub fn to_json(policy: &Policy) -> Result<String> {
    serde_json::to_string_pretty(&envelope(policy))
        .map_err(|e| CliError::runtime("serializing weights", e))
}

/// Rebuild a policy from a weight file. `norm` and `noise` come from the
/// run's config since they are not trainable state.
pub fn from_json(
    json: &str,
    norm: NormalizationSpec,
    noise: MeasurementNoiseModel,
) -> Result<Policy> {
    let file: WeightFile = serde_json::from_str(json).map_err(|e| {
        CliError::Runtime(format!(
            "weight file is not valid (expected schema_version {SCHEMA_VERSION}): {e}"
        ))
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Runtime(format!(
            "weight file has schema_version {}, expected {SCHEMA_VERSION}",
            file.schema_version
        )));
    }
    let mut flat = Vec::with_capacity(file.flat_params.len());
    for (index, raw) in file.flat_params.iter().enumerate() {
        flat.push(decode(raw, index)?);
    }
    match (file.agent_kind, file.shape) {
        (Agent::Classical, Shape::Classical { hidden }) => {
            let params = MlpParams::from_flat(hidden, &flat)?;
            Ok(Policy::Classical(ClassicalPolicy { params, norm }))
        }
        (
            Agent::Quantum,
            Shape::Quantum {
                n_qubits,
                depth,
                embed_scale,
                embed_axis,
            },
        ) => {
            let mut circuit = VqcParams::new(n_qubits, depth, flat)?;
            circuit.embed_scale = embed_scale;
            circuit.embed_axis = embed_axis.into();
            Ok(Policy::Quantum(QuantumPolicy {
                circuit,
                norm,
                noise,
            }))
        }
        _ => Err(CliError::Runtime(
            "weight file: agent_kind does not match shape metadata".into(),
        )),
    }
}

pub fn load(path: &Path, norm: NormalizationSpec, noise: MeasurementNoiseModel) -> Result<Policy> {
    let json = std::fs::read_to_string(path).map_err(|e| {
        CliError::Runtime(format!(
            "cannot read weight file {} (expected schema_version {SCHEMA_VERSION}): {e}",
            path.display()
        ))
    })?;
    from_json(&json, norm, noise)
}
