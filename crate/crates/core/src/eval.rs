//! Post-training evaluation: rollout statistics, the observation-noise
//! sweep, success rates and efficiency accounting.

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec::Vec;

use crate::env::{CartPole, ObservationNoiseSpec, RewardMode};
use crate::error::{Error, Result};
use crate::policy::{AgentSpec, Policy};
use crate::rng::StreamRng;
use crate::trainer::{collect_trajectory, UpdateReport};
use crate::vqc::MeasurementNoiseModel;

/// How a policy is scored.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Rollouts per (noise level, seed) cell.
    pub rollouts_per_point: usize,
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Greedy actions instead of sampling.
    pub deterministic_actions: bool,
}

/// The noise sweep reported in the robustness table.
pub const DEFAULT_NOISE_LEVELS: [f64; 4] = [0.0, 0.02, 0.05, 0.10];

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rollouts_per_point: 20,
            noise_levels: DEFAULT_NOISE_LEVELS.to_vec(),
            seeds: alloc::vec![0, 1, 2, 3, 4],
            deterministic_actions: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rollouts_per_point == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "need at least one rollout per point",
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config(alloc::string::String::from(
                "need at least one evaluation seed",
            )));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::Config(alloc::string::String::from(
                "need at least one noise level",
            )));
        }
        for sigma in &self.noise_levels {
            ObservationNoiseSpec::new(*sigma)?;
        }
        Ok(())
    }
}

/// Aggregate for one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub sigma: f64,
    pub mean_return: f64,
    pub std_return: f64,
    /// Fraction of rollouts that reached the step horizon.
    pub success_rate: f64,
}

/// Evaluation rows plus the raw per-rollout returns behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    /// Sorted by sigma ascending.
    pub rows: Vec<NoiseRow>,
    /// Per-rollout returns, parallel to `rows`.
    pub per_rollout_returns: Vec<Vec<f64>>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Score a policy over the configured noise sweep. Observation noise is
/// injected only into what the policy sees; quantum measurement noise is
/// disabled during evaluation.
pub fn evaluate(policy: &Policy, cfg: &EvalConfig, horizon: u32) -> Result<EvalOutcome> {
    cfg.validate()?;
    let mut scored = policy.clone();
    if let Policy::Quantum(q) = &mut scored {
        q.noise = MeasurementNoiseModel::none();
    }
    let mut sigmas = cfg.noise_levels.clone();
    sigmas.sort_by(|a, b| a.partial_cmp(b).expect("noise levels are finite"));

    let mut rows = Vec::with_capacity(sigmas.len());
    let mut per_rollout_returns = Vec::with_capacity(sigmas.len());
    for (sigma_idx, &sigma) in sigmas.iter().enumerate() {
        let noise = ObservationNoiseSpec::new(sigma)?;
        let mut returns = Vec::with_capacity(cfg.seeds.len() * cfg.rollouts_per_point);
        let mut successes = 0usize;
        for &seed in &cfg.seeds {
            let mut rng = StreamRng::substream(seed, sigma_idx as u64);
            let mut env = CartPole::new(RewardMode::UnitPerStep, horizon)?;
            for _ in 0..cfg.rollouts_per_point {
                let traj = collect_trajectory(
                    &scored,
                    &mut env,
                    &noise,
                    &mut rng,
                    cfg.deterministic_actions,
                )?;
                if traj.episode_length as u32 == horizon {
                    successes += 1;
                }
                returns.push(traj.rewards.iter().sum());
            }
        }
        let (mean_return, std_return) = mean_std(&returns);
        rows.push(NoiseRow {
            sigma,
            mean_return,
            std_return,
            success_rate: successes as f64 / returns.len() as f64,
        });
        per_rollout_returns.push(returns);
    }
    Ok(EvalOutcome {
        rows,
        per_rollout_returns,
    })
}

/// Exact trainable-parameter count for an agent shape.
pub fn count_parameters(spec: &AgentSpec) -> usize {
    spec.param_count()
}

/// Training-cost accounting derived from the per-episode log.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyProfile {
    pub wall_clock_seconds: f64,
    pub total_timesteps: u64,
    /// Total circuit evaluations over all gradient passes; absent for the
    /// classical agent.
    pub circuit_evaluations: Option<u64>,
    pub evals_per_timestep: Option<f64>,
}

pub fn efficiency_profile(log: &[UpdateReport], wall_clock_seconds: f64) -> EfficiencyProfile {
    let total_timesteps: u64 = log.iter().map(|r| r.episode_length as u64).sum();
    let circuit_evaluations = log
        .iter()
        .try_fold(0u64, |acc, r| r.circuit_evaluations.map(|e| acc + e));
    let evals_per_timestep = match (circuit_evaluations, total_timesteps) {
        (Some(evals), steps) if steps > 0 => Some(evals as f64 / steps as f64),
        _ => None,
    };
    EfficiencyProfile {
        wall_clock_seconds,
        total_timesteps,
        circuit_evaluations,
        evals_per_timestep,
    }
}

/// Mean and std of episodic returns straight off the training log, the
/// alternate reading of a "mean over N episodes" summary.
pub fn summarize_training_log(log: &[UpdateReport]) -> (f64, f64) {
    let returns: Vec<f64> = log.iter().map(|r| r.episode_return).collect();
    mean_std(&returns)
}

/// Where reported returns came from; recorded in the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnsSource {
    EvaluationRollouts {
        rollouts_per_point: usize,
        seeds: usize,
    },
    TrainingLog {
        episodes: usize,
    },
}

/// Everything the evaluation artifact carries.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<NoiseRow>,
    pub parameter_count: usize,
    pub train_wall_clock_seconds: Option<f64>,
    pub vqc_circuit_evaluations: Option<u64>,
    pub returns_source: ReturnsSource,
}
