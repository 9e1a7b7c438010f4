//! Action-selection policies behind one interface: the classical softmax
//! MLP and the quantum Bernoulli policy, plus the state normalization the
//! quantum embedding requires.

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mlp::MlpParams;
use crate::rng::StreamRng;
use crate::vqc::{
    apply_measurement_noise, parameter_shift_gradient, run_vqc, EmbedAxis, GradientReport,
    MeasurementNoiseModel, VqcParams,
};

/// Two-action categorical distribution with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub probs: [f64; 2],
    pub logits: [f64; 2],
    pub log_probs: [f64; 2],
    /// Categorical entropy in nats, in [0, ln 2].
    pub entropy: f64,
}

fn binary_entropy(probs: [f64; 2], log_probs: [f64; 2]) -> f64 {
    // p * log p underflows to an exact 0 * finite here because the
    // log-probs come from log-sum-exp and stay finite.
    let raw = -(probs[0] * log_probs[0] + probs[1] * log_probs[1]);
    // The binary maximum is ln 2; trim last-ulp rounding.
    raw.min(core::f64::consts::LN_2)
}

impl PolicyDistribution {
    /// Max-subtracted softmax over per-action logits (index = action).
    pub fn from_logits(logits: [f64; 2]) -> Self {
        let m = logits[0].max(logits[1]);
        let shifted = [logits[0] - m, logits[1] - m];
        let exps = [shifted[0].exp(), shifted[1].exp()];
        let total = exps[0] + exps[1];
        let ln_total = total.ln();
        let probs = [exps[0] / total, exps[1] / total];
        let log_probs = [shifted[0] - ln_total, shifted[1] - ln_total];
        let entropy = binary_entropy(probs, log_probs);
        PolicyDistribution {
            probs,
            logits,
            log_probs,
            entropy,
        }
    }

    /// Bernoulli policy from a circuit readout: action 1 with probability
    /// `sigma(2z)`. The logits field records the readout pair `[z, -z]`.
    pub fn from_bernoulli_readout(z: f64) -> Self {
        // log sigma(2z) = -softplus(-2z), computed without overflow.
        let softplus = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
        let log_p1 = -softplus(-2.0 * z);
        let log_p0 = -softplus(2.0 * z);
        let p1 = log_p1.exp();
        let probs = [1.0 - p1, p1];
        let log_probs = [log_p0, log_p1];
        let entropy = binary_entropy(probs, log_probs);
        PolicyDistribution {
            probs,
            logits: [z, -z],
            log_probs,
            entropy,
        }
    }
}

/// Draw an action; consumes exactly one uniform draw.
pub fn sample_action(dist: &PolicyDistribution, rng: &mut StreamRng) -> usize {
    usize::from(rng.uniform() < dist.probs[1])
}

/// Greedy action (ties go to action 0).
pub fn argmax_action(dist: &PolicyDistribution) -> usize {
    usize::from(dist.probs[1] > dist.probs[0])
}

/// Clip-then-scale normalization mapping the reachable state box onto
/// `[-kappa*pi, kappa*pi]` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationSpec {
    s_max: [f64; 4],
    kappa: f64,
}

/// Per-dimension clip bounds; velocities get soft bounds since the
/// environment does not cap them.
pub const DEFAULT_S_MAX: [f64; 4] = [2.4, 3.0, 0.21, 3.0];

impl NormalizationSpec {
    pub fn new(s_max: [f64; 4], kappa: f64) -> Result<Self> {
        if !s_max.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::Config(alloc::format!(
                "clip bounds must be positive and finite, got {s_max:?}"
            )));
        }
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Config(alloc::format!(
                "embedding scale must be positive and finite, got {kappa}"
            )));
        }
        Ok(NormalizationSpec { s_max, kappa })
    }

    pub fn s_max(&self) -> [f64; 4] {
        self.s_max
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        NormalizationSpec {
            s_max: DEFAULT_S_MAX,
            kappa: 1.0,
        }
    }
}

/// `clip(s, -s_max, s_max) * kappa * pi / s_max`, elementwise.
pub fn normalize_state(obs: &[f64; 4], spec: &NormalizationSpec) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let clipped = obs[i].clamp(-spec.s_max[i], spec.s_max[i]);
        *o = clipped * spec.kappa * core::f64::consts::PI / spec.s_max[i];
    }
    out
}

/// The quantum agent: circuit parameters plus its observation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPolicy {
    pub circuit: VqcParams,
    pub norm: NormalizationSpec,
    pub noise: MeasurementNoiseModel,
}

/// The classical agent. Observations run through the same clip-and-scale
/// normalization as the quantum embedding, so both agents see identically
/// preprocessed states.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPolicy {
    pub params: MlpParams,
    pub norm: NormalizationSpec,
}

/// Normalize, run the circuit, optionally corrupt the readout, and build
/// the Bernoulli distribution.
pub fn vqc_policy(
    obs: &[f64; 4],
    params: &VqcParams,
    spec: &NormalizationSpec,
    noise: &MeasurementNoiseModel,
    rng: &mut StreamRng,
) -> Result<PolicyDistribution> {
    let scaled = normalize_state(obs, spec);
    let z = run_vqc(&scaled[..params.n_qubits()], params)?;
    let z_noisy = apply_measurement_noise(z, noise, rng);
    Ok(PolicyDistribution::from_bernoulli_readout(z_noisy))
}

/// Gradient of `-weight * log pi(action | obs)` over the circuit angles,
/// chaining `d log pi / dz = 2 (a - sigma(2z))` through the parameter-shift
/// gradient of z. Evaluated at the noiseless readout.
pub fn vqc_logprob_gradient(
    obs: &[f64; 4],
    action: usize,
    weight: f64,
    params: &VqcParams,
    spec: &NormalizationSpec,
) -> Result<GradientReport> {
    let scaled = normalize_state(obs, spec);
    let mut report = parameter_shift_gradient(&scaled[..params.n_qubits()], params)?;
    let p1 = PolicyDistribution::from_bernoulli_readout(report.value).probs[1];
    let dlogpi_dz = 2.0 * (action as f64 - p1);
    for g in report.grads.iter_mut() {
        *g *= -weight * dlogpi_dz;
    }
    Ok(report)
}

/// Which of the two agents a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Classical,
    Quantum,
}

/// Shape configuration, enough to build or count a fresh policy.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    Classical {
        hidden: usize,
        s_max: [f64; 4],
        kappa: f64,
    },
    Quantum {
        n_qubits: usize,
        depth: usize,
        embed_scale: f64,
        embed_axis: EmbedAxis,
        s_max: [f64; 4],
        sigma_z: f64,
    },
}

impl AgentSpec {
    pub fn classical(hidden: usize) -> Self {
        AgentSpec::Classical {
            hidden,
            s_max: DEFAULT_S_MAX,
            kappa: 1.0,
        }
    }

    /// The default circuit: 4 qubits, 3 layers, unit embedding scale.
    pub fn quantum(n_qubits: usize, depth: usize) -> Self {
        AgentSpec::Quantum {
            n_qubits,
            depth,
            embed_scale: 1.0,
            embed_axis: EmbedAxis::X,
            s_max: DEFAULT_S_MAX,
            sigma_z: 0.0,
        }
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            AgentSpec::Classical { .. } => AgentKind::Classical,
            AgentSpec::Quantum { .. } => AgentKind::Quantum,
        }
    }

    /// Exact trainable-parameter count for this shape.
    pub fn param_count(&self) -> usize {
        match self {
            AgentSpec::Classical { hidden, .. } => MlpParams::param_count_for(*hidden),
            AgentSpec::Quantum {
                n_qubits, depth, ..
            } => 3 * n_qubits * depth,
        }
    }

    /// Draw a fresh policy from the seeded stream.
    pub fn build(&self, rng: &mut StreamRng) -> Result<Policy> {
        match self {
            AgentSpec::Classical {
                hidden,
                s_max,
                kappa,
            } => Ok(Policy::Classical(ClassicalPolicy {
                params: MlpParams::init(*hidden, rng)?,
                norm: NormalizationSpec::new(*s_max, *kappa)?,
            })),
            AgentSpec::Quantum {
                n_qubits,
                depth,
                embed_scale,
                embed_axis,
                s_max,
                sigma_z,
            } => {
                let mut circuit = VqcParams::init(*n_qubits, *depth, rng)?;
                circuit.embed_scale = *embed_scale;
                circuit.embed_axis = *embed_axis;
                Ok(Policy::Quantum(QuantumPolicy {
                    norm: NormalizationSpec::new(*s_max, *embed_scale)?,
                    noise: MeasurementNoiseModel::new(*sigma_z)?,
                    circuit,
                }))
            }
        }
    }
}

/// A trained (or training) policy of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Classical(ClassicalPolicy),
    Quantum(QuantumPolicy),
}

impl Policy {
    pub fn kind(&self) -> AgentKind {
        match self {
            Policy::Classical(_) => AgentKind::Classical,
            Policy::Quantum(_) => AgentKind::Quantum,
        }
    }

    /// Action distribution for a raw observation. The stream is consumed
    /// only by quantum measurement noise.
    pub fn distribution(&self, obs: &[f64; 4], rng: &mut StreamRng) -> Result<PolicyDistribution> {
        match self {
            Policy::Classical(c) => c.params.forward(&normalize_state(obs, &c.norm)),
            Policy::Quantum(q) => vqc_policy(obs, &q.circuit, &q.norm, &q.noise, rng),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Policy::Classical(c) => c.params.param_count(),
            Policy::Quantum(q) => q.circuit.len(),
        }
    }

    /// Trainable parameters in a fixed flattening order.
    pub fn flat_params(&self) -> Vec<f64> {
        match self {
            Policy::Classical(c) => c.params.flatten(),
            Policy::Quantum(q) => q.circuit.angles().to_vec(),
        }
    }

    /// In-place `theta -= step`, congruent to [`Policy::flat_params`].
    pub fn apply_step(&mut self, step: &[f64]) -> Result<()> {
        match self {
            Policy::Classical(c) => c.params.apply_step(step),
            Policy::Quantum(q) => {
                let angles = q.circuit.angles_mut();
                if step.len() != angles.len() {
                    return Err(Error::Shape {
                        context: "vqc update step",
                        expected: angles.len(),
                        got: step.len(),
                    });
                }
                for (a, s) in angles.iter_mut().zip(step) {
                    *a -= s;
                }
                Ok(())
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Policy::Classical(c) => c.params.all_finite(),
            Policy::Quantum(q) => q.circuit.angles().iter().all(|a| a.is_finite()),
        }
    }
}
