//! The hybrid training loop: rollout collection, discounted returns, a
//! scalar EMA baseline, the entropy- and L2-regularized loss, global
//! gradient clipping and an exponentially decayed learning rate.
//!
//! One update per episode by default; `batch_episodes > 1` averages the
//! per-episode gradients before updating.

#[allow(unused_imports)] // no_std float math; builds with std shadow it
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{observe, CartPole, ObservationNoiseSpec};
use crate::error::{Error, Result};
use crate::policy::{argmax_action, sample_action, AgentSpec, Policy, PolicyDistribution};
use crate::rng::StreamRng;
use crate::vqc::parameter_shift_gradient;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub entropy_weight: f64,
    pub l2_weight: f64,
    pub clip_threshold: f64,
    pub lr0: f64,
    pub lr_decay: f64,
    pub episodes: u32,
    pub baseline_decay: f64,
    pub batch_episodes: usize,
    pub standardize_advantages: bool,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.99,
            entropy_weight: 5e-3,
            l2_weight: 1e-4,
            clip_threshold: 1.0,
            lr0: 0.005,
            // Strong enough to freeze a converged policy before the
            // saturated-return tail drift can unlearn it.
            lr_decay: 0.99,
            episodes: 400,
            baseline_decay: 0.95,
            batch_episodes: 5,
            standardize_advantages: true,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::Config(msg));
        if self.gamma.is_nan() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return bad(alloc::format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            ));
        }
        if self.clip_threshold.is_nan() || self.clip_threshold <= 0.0 {
            return bad(alloc::format!(
                "clip threshold must be positive, got {}",
                self.clip_threshold
            ));
        }
        if self.lr_decay.is_nan() || self.lr_decay <= 0.0 || self.lr_decay > 1.0 {
            return bad(alloc::format!(
                "lr decay must be in (0, 1], got {}",
                self.lr_decay
            ));
        }
        if self.lr0.is_nan() || self.lr0 <= 0.0 {
            return bad(alloc::format!("lr0 must be positive, got {}", self.lr0));
        }
        if self.entropy_weight < 0.0 || self.l2_weight < 0.0 {
            return bad(alloc::format!(
                "regularization weights must be >= 0, got beta={}, lambda={}",
                self.entropy_weight,
                self.l2_weight
            ));
        }
        if !(0.0..=1.0).contains(&self.baseline_decay) {
            return bad(alloc::format!(
                "baseline decay must be in [0, 1], got {}",
                self.baseline_decay
            ));
        }
        if self.batch_episodes == 0 {
            return bad(alloc::string::String::from("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// Parameter update rule: Adam by default, plain SGD behind the same
/// switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

struct OptimizerState {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    fn new(kind: OptimizerKind, n_params: usize) -> Self {
        let len = if kind == OptimizerKind::Adam {
            n_params
        } else {
            0
        };
        OptimizerState {
            kind,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// The step to subtract from the parameters.
    fn step(&mut self, grad: &[f64], lr: f64) -> Vec<f64> {
        match self.kind {
            OptimizerKind::Sgd => grad.iter().map(|g| lr * g).collect(),
            OptimizerKind::Adam => {
                const BETA1: f64 = 0.9;
                const BETA2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.t += 1;
                let bc1 = 1.0 - BETA1.powi(self.t as i32);
                let bc2 = 1.0 - BETA2.powi(self.t as i32);
                grad.iter()
                    .enumerate()
                    .map(|(i, g)| {
                        self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                        self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
                        lr * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + EPS)
                    })
                    .collect()
            }
        }
    }
}

/// Scalar running estimate of the episode value, updated as an
/// exponential moving average of observed initial returns.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    value: f64,
    decay: f64,
    initialized: bool,
}

impl BaselineState {
    pub fn new(decay: f64) -> Self {
        BaselineState {
            value: 0.0,
            decay,
            initialized: false,
        }
    }

    /// Current baseline; 0 before any episode has been observed.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Fold in an episode's initial return. The first observation seeds
    /// the estimate directly so the baseline stays a convex combination
    /// of observed returns.
    pub fn observe(&mut self, g0: f64) {
        if self.initialized {
            self.value = self.decay * self.value + (1.0 - self.decay) * g0;
        } else {
            self.value = g0;
            self.initialized = true;
        }
    }
}

/// One episode of experience. `observations` hold what the policy saw
/// (noise included), which together with `actions` is sufficient to
/// recompute every log-probability and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<[f64; 4]>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
    pub episode_length: usize,
}

/// Per-episode observability record.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    pub episode: u32,
    pub episode_return: f64,
    pub episode_length: usize,
    pub loss: f64,
    pub grad_norm_pre_clip: f64,
    pub grad_norm_post_clip: f64,
    pub lr_used: f64,
    /// Circuit evaluations spent on this episode's gradient pass; absent
    /// for the classical agent.
    pub circuit_evaluations: Option<u64>,
}

/// Discounted returns by backward recursion: `G_t = r_t + gamma * G_{t+1}`.
pub fn compute_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut returns = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        returns[t] = acc;
    }
    returns
}

/// `A_t = G_t - b` with the current scalar baseline, which is then
/// updated toward this episode's `G_0`.
pub fn compute_advantages(
    returns: &[f64],
    baseline: &mut BaselineState,
    standardize: bool,
) -> Vec<f64> {
    let b = baseline.value();
    let mut advantages: Vec<f64> = returns.iter().map(|g| g - b).collect();
    if let Some(&g0) = returns.first() {
        baseline.observe(g0);
    }
    if standardize && advantages.len() > 1 {
        let n = advantages.len() as f64;
        let mean = advantages.iter().sum::<f64>() / n;
        let var = advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        for a in advantages.iter_mut() {
            *a = (*a - mean) / (std + 1e-8);
        }
    }
    advantages
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rescale to global L2 norm `tau` when exceeded; returns (pre, post)
/// norms. Direction is never changed.
pub fn clip_gradient(grad: &mut [f64], tau: f64) -> (f64, f64) {
    let pre = l2_norm(grad);
    if pre > tau {
        let scale = tau / pre;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
    (pre, l2_norm(grad))
}

/// `lr = lr0 * lr_decay ^ episode_index`.
pub fn lr_schedule(episode_index: u32, cfg: &TrainConfig) -> f64 {
    cfg.lr0 * cfg.lr_decay.powi(episode_index as i32)
}

/// Loss value and flat gradient for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Circuit evaluations this pass performed (forwards + shifts); 0 for
    /// the classical agent.
    pub circuit_evals: u64,
}

/// `loss = -sum_t A_t log pi(a_t|s_t) - beta sum_t H_t + lambda |theta|^2`
/// with its gradient over the policy parameters.
pub fn episode_loss(traj: &Trajectory, policy: &Policy, cfg: &TrainConfig) -> Result<EpisodeLoss> {
    if traj.advantages.len() != traj.actions.len() || traj.observations.len() != traj.actions.len()
    {
        return Err(Error::Shape {
            context: "trajectory fields",
            expected: traj.actions.len(),
            got: traj.advantages.len(),
        });
    }
    let beta = cfg.entropy_weight;
    let mut loss = 0.0;
    let mut grad = vec![0.0; policy.param_count()];
    let mut circuit_evals = 0u64;

    match policy {
        Policy::Classical(c) => {
            for t in 0..traj.actions.len() {
                let obs = crate::policy::normalize_state(&traj.observations[t], &c.norm);
                let action = traj.actions[t];
                let adv = traj.advantages[t];
                let (dist, trace) = c.params.forward_traced(&obs)?;
                loss += -adv * dist.log_probs[action] - beta * dist.entropy;
                let mut d_logits = [0.0; 2];
                for (j, d) in d_logits.iter_mut().enumerate() {
                    let onehot = if j == action { 1.0 } else { 0.0 };
                    *d = adv * (dist.probs[j] - onehot)
                        + beta * dist.probs[j] * (dist.log_probs[j] + dist.entropy);
                }
                let step_grad = c.params.backward(&obs, &trace, d_logits);
                for (g, s) in grad.iter_mut().zip(&step_grad) {
                    *g += s;
                }
            }
        }
        Policy::Quantum(q) => {
            for t in 0..traj.actions.len() {
                let scaled = crate::policy::normalize_state(&traj.observations[t], &q.norm);
                let report = parameter_shift_gradient(&scaled, &q.circuit)?;
                circuit_evals += 1 + report.shift_evals;
                let action = traj.actions[t];
                let adv = traj.advantages[t];
                // Gradients chain through the noiseless readout.
                let dist = PolicyDistribution::from_bernoulli_readout(report.value);
                loss += -adv * dist.log_probs[action] - beta * dist.entropy;
                let p1 = dist.probs[1];
                let dlogpi_dz = 2.0 * (action as f64 - p1);
                let dentropy_dz = (dist.log_probs[0] - dist.log_probs[1]) * 2.0 * p1 * (1.0 - p1);
                let dloss_dz = -adv * dlogpi_dz - beta * dentropy_dz;
                for (g, dz) in grad.iter_mut().zip(&report.grads) {
                    *g += dloss_dz * dz;
                }
            }
        }
    }

    let lambda = cfg.l2_weight;
    if lambda > 0.0 {
        let theta = policy.flat_params();
        loss += lambda * theta.iter().map(|p| p * p).sum::<f64>();
        for (g, p) in grad.iter_mut().zip(&theta) {
            *g += 2.0 * lambda * p;
        }
    }

    if !loss.is_finite() {
        return Err(Error::NonFinite("episode loss"));
    }
    Ok(EpisodeLoss {
        loss,
        grad,
        circuit_evals,
    })
}

/// Roll one episode, sampling actions from the policy (or taking the
/// argmax when `deterministic`). Returns and advantages are left empty.
pub fn collect_trajectory(
    policy: &Policy,
    env: &mut CartPole,
    obs_noise: &ObservationNoiseSpec,
    rng: &mut StreamRng,
    deterministic: bool,
) -> Result<Trajectory> {
    let state = env.reset(rng);
    let mut obs = observe(&state, obs_noise, rng);
    let mut observations = Vec::new();
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    loop {
        let dist = policy.distribution(&obs, rng)?;
        let action = if deterministic {
            argmax_action(&dist)
        } else {
            sample_action(&dist, rng)
        };
        let step = env.step(action)?;
        observations.push(obs);
        actions.push(action);
        rewards.push(step.reward);
        if step.terminated || step.truncated {
            break;
        }
        obs = observe(&step.state, obs_noise, rng);
    }
    let episode_length = actions.len();
    Ok(Trajectory {
        observations,
        actions,
        rewards,
        returns: Vec::new(),
        advantages: Vec::new(),
        episode_length,
    })
}

/// A finished run: the trained policy and its per-episode log.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub policy: Policy,
    pub log: Vec<UpdateReport>,
}

/// Run the full training loop. The whole result is a deterministic
/// function of `(spec, cfg, env template, noise, seed)`.
pub fn train(
    spec: &AgentSpec,
    cfg: &TrainConfig,
    env_template: &CartPole,
    obs_noise: &ObservationNoiseSpec,
    seed: u64,
) -> Result<TrainResult> {
    cfg.validate()?;
    let mut rng = StreamRng::new(seed);
    let mut policy = spec.build(&mut rng)?;
    let mut env = env_template.clone();
    let mut baseline = BaselineState::new(cfg.baseline_decay);
    let mut optimizer = OptimizerState::new(cfg.optimizer, policy.param_count());
    let mut log = Vec::with_capacity(cfg.episodes as usize);

    let mut episode = 0u32;
    while episode < cfg.episodes {
        let batch = cfg
            .batch_episodes
            .min((cfg.episodes - episode) as usize)
            .max(1);
        let mut batch_grad = vec![0.0; policy.param_count()];
        let mut collected = Vec::with_capacity(batch);
        for _ in 0..batch {
            let mut traj = collect_trajectory(&policy, &mut env, obs_noise, &mut rng, false)?;
            traj.returns = compute_returns(&traj.rewards, cfg.gamma);
            traj.advantages =
                compute_advantages(&traj.returns, &mut baseline, cfg.standardize_advantages);
            let ep = episode_loss(&traj, &policy, cfg)?;
            for (b, g) in batch_grad.iter_mut().zip(&ep.grad) {
                *b += g;
            }
            collected.push((traj, ep));
        }
        for g in batch_grad.iter_mut() {
            *g /= batch as f64;
        }
        let (pre_norm, post_norm) = clip_gradient(&mut batch_grad, cfg.clip_threshold);
        let lr = lr_schedule(episode, cfg);
        let step = optimizer.step(&batch_grad, lr);
        policy.apply_step(&step)?;
        if !policy.all_finite() {
            return Err(Error::NonFinite("policy parameters after update"));
        }
        for (offset, (traj, ep)) in collected.into_iter().enumerate() {
            log.push(UpdateReport {
                episode: episode + offset as u32,
                episode_return: traj.rewards.iter().sum(),
                episode_length: traj.episode_length,
                loss: ep.loss,
                grad_norm_pre_clip: pre_norm,
                grad_norm_post_clip: post_norm,
                lr_used: lr,
                circuit_evaluations: match policy.kind() {
                    crate::policy::AgentKind::Classical => None,
                    crate::policy::AgentKind::Quantum => Some(ep.circuit_evals),
                },
            });
        }
        episode += batch as u32;
    }
    Ok(TrainResult { policy, log })
}
