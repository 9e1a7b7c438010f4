//! Flag parsing and the serializable run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qpg_core::policy::{AgentKind, AgentSpec};
use qpg_core::trainer::{OptimizerKind, TrainConfig};
use qpg_core::vqc::EmbedAxis;

use crate::{CliError, Result};

pub const USAGE: &str = "\
usage:
  qpg train --agent <classical|quantum> --exp <name> [options]
  qpg eval  --exp <name> [options]

train options:
  --episodes <n>          training episodes (default 400)
  --lr <f>                initial learning rate (default 0.005)
  --hidden <n>            MLP hidden width (default 64)
  --noise <f>             training-time observation noise sigma (default 0)
  --seed <n>              master seed (default 42)
  --gamma <f>             discount factor (default 0.99)
  --entropy-weight <f>    entropy bonus weight (default 0.005)
  --l2-weight <f>         L2 penalty weight (default 0.0001)
  --clip <f>              global gradient-norm threshold (default 1)
  --lr-decay <f>          per-episode lr multiplier (default 0.99)
  --baseline-decay <f>    baseline EMA coefficient (default 0.95)
  --batch-episodes <n>    episodes averaged per update (default 5)
  --standardize-advantages <true|false>   (default true)
  --optimizer <adam|sgd>  update rule (default adam)
  --qubits <n>            VQC qubit count (default 4)
  --depth <n>             VQC layer count (default 3)
  --kappa <f>             embedding scale (default 1)
  --embed-axis <x|y>      embedding rotation axis (default x)
  --sigma-z <f>           VQC measurement noise sigma (default 0)
  --horizon <n>           episode step cap (default 500)
  --reward <unit|quadratic>  training reward mode (default unit)
  --overwrite             replace an existing run directory
  --runs-dir <dir>        run store root (default runs)

eval options:
  --sigma <f>             noise level to sweep; repeatable
                          (default 0.00 0.02 0.05 0.10)
  --rollouts <n>          rollouts per (sigma, seed) cell (default 20)
  --eval-seeds <n>        evaluation seeds (default 5)
  --argmax                greedy actions instead of sampling
  --from-training-log     summarize reward_log.csv instead of rolling out
  --runs-dir <dir>        run store root (default runs)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Classical,
    Quantum,
}

impl Agent {
    pub fn kind(self) -> AgentKind {
        match self {
            Agent::Classical => AgentKind::Classical,
            Agent::Quantum => AgentKind::Quantum,
        }
    }

    pub fn weight_file_name(self) -> &'static str {
        match self {
            Agent::Classical => "policy_classical.json",
            Agent::Quantum => "policy_quantum.json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl From<Optimizer> for OptimizerKind {
    fn from(value: Optimizer) -> Self {
        match value {
            Optimizer::Adam => OptimizerKind::Adam,
            Optimizer::Sgd => OptimizerKind::Sgd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reward {
    Unit,
    Quadratic,
}

impl From<Reward> for qpg_core::env::RewardMode {
    fn from(value: Reward) -> Self {
        match value {
            Reward::Unit => qpg_core::env::RewardMode::UnitPerStep,
            Reward::Quadratic => qpg_core::env::RewardMode::quadratic_default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl From<Axis> for EmbedAxis {
    fn from(value: Axis) -> Self {
        match value {
            Axis::X => EmbedAxis::X,
            Axis::Y => EmbedAxis::Y,
        }
    }
}

impl From<EmbedAxis> for Axis {
    fn from(value: EmbedAxis) -> Self {
        match value {
            EmbedAxis::X => Axis::X,
            EmbedAxis::Y => Axis::Y,
        }
    }
}

/// Everything a run needs, persisted verbatim as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub agent: Agent,
    pub exp: String,
    pub episodes: u32,
    pub lr: f64,
    pub hidden: usize,
    pub noise: f64,
    pub seed: u64,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub l2_weight: f64,
    pub clip_threshold: f64,
    pub lr_decay: f64,
    pub baseline_decay: f64,
    pub batch_episodes: usize,
    pub standardize_advantages: bool,
    pub optimizer: Optimizer,
    pub qubits: usize,
    pub depth: usize,
    pub kappa: f64,
    pub embed_axis: Axis,
    pub sigma_z: f64,
    pub s_max: [f64; 4],
    pub horizon: u32,
    pub reward: Reward,
    pub eval_rollouts: usize,
    pub eval_seeds: usize,
    pub eval_noise_levels: Vec<f64>,
    pub eval_deterministic: bool,
}

impl RunConfig {
    pub fn defaults(agent: Agent, exp: String) -> Self {
        let train = TrainConfig::default();
        RunConfig {
            agent,
            exp,
            episodes: train.episodes,
            lr: train.lr0,
            hidden: 64,
            noise: 0.0,
            seed: 42,
            gamma: train.gamma,
            entropy_weight: train.entropy_weight,
            l2_weight: train.l2_weight,
            clip_threshold: train.clip_threshold,
            lr_decay: train.lr_decay,
            baseline_decay: train.baseline_decay,
            batch_episodes: train.batch_episodes,
            standardize_advantages: train.standardize_advantages,
            optimizer: Optimizer::Adam,
            qubits: 4,
            depth: 3,
            kappa: 1.0,
            embed_axis: Axis::X,
            sigma_z: 0.0,
            s_max: qpg_core::policy::DEFAULT_S_MAX,
            horizon: 500,
            reward: Reward::Unit,
            eval_rollouts: 20,
            eval_seeds: 5,
            eval_noise_levels: qpg_core::eval::DEFAULT_NOISE_LEVELS.to_vec(),
            eval_deterministic: false,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            gamma: self.gamma,
            entropy_weight: self.entropy_weight,
            l2_weight: self.l2_weight,
            clip_threshold: self.clip_threshold,
            lr0: self.lr,
            lr_decay: self.lr_decay,
            episodes: self.episodes,
            baseline_decay: self.baseline_decay,
            batch_episodes: self.batch_episodes,
            standardize_advantages: self.standardize_advantages,
            optimizer: self.optimizer.into(),
        }
    }

    pub fn agent_spec(&self) -> AgentSpec {
        match self.agent {
            Agent::Classical => AgentSpec::Classical {
                hidden: self.hidden,
                s_max: self.s_max,
                kappa: self.kappa,
            },
            Agent::Quantum => AgentSpec::Quantum {
                n_qubits: self.qubits,
                depth: self.depth,
                embed_scale: self.kappa,
                embed_axis: self.embed_axis.into(),
                s_max: self.s_max,
                sigma_z: self.sigma_z,
            },
        }
    }

    /// Per-cell evaluation seeds, derived from the training seed.
    pub fn derived_eval_seeds(&self, count: usize) -> Vec<u64> {
        (0..count as u64)
            .map(|i| self.seed.wrapping_add(10_000 + i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainArgs {
    pub config: RunConfig,
    pub overwrite: bool,
    pub runs_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalArgs {
    pub exp: String,
    pub runs_dir: PathBuf,
    /// Noise levels to sweep; `None` uses the run's configured sweep.
    pub sigmas: Option<Vec<f64>>,
    pub rollouts: Option<usize>,
    pub eval_seeds: Option<usize>,
    pub argmax: bool,
    pub from_training_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Train(TrainArgs),
    Eval(EvalArgs),
    Help,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(format!("{}\n\n{USAGE}", message.into()))
}

struct FlagReader<'a> {
    argv: &'a [String],
    index: usize,
}

impl<'a> FlagReader<'a> {
    fn next_flag(&mut self) -> Option<&'a str> {
        let flag = self.argv.get(self.index)?;
        self.index += 1;
        Some(flag.as_str())
    }

    fn value(&mut self, flag: &str) -> Result<&'a str> {
        match self.argv.get(self.index) {
            Some(value) if !value.starts_with("--") => {
                self.index += 1;
                Ok(value.as_str())
            }
            _ => Err(usage(format!("flag {flag} requires a value"))),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, flag: &str) -> Result<T> {
        let raw = self.value(flag)?;
        raw.parse()
            .map_err(|_| usage(format!("invalid value '{raw}' for {flag}")))
    }
}

fn require_positive_f64(value: f64, flag: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(usage(format!(
            "{flag} must be positive and finite, got {value}"
        )))
    }
}

fn require_nonnegative_f64(value: f64, flag: &str) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(usage(format!(
            "{flag} must be >= 0 and finite, got {value}"
        )))
    }
}

fn filesystem_safe(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        && !name.starts_with('.')
}

pub fn parse_args(argv: &[String]) -> Result<Command> {
    let Some(subcommand) = argv.first() else {
        return Err(usage("missing subcommand"));
    };
    match subcommand.as_str() {
        "train" => parse_train(&argv[1..]),
        "eval" => parse_eval(&argv[1..]),
        "help" | "--help" | "-h" => Ok(Command::Help),
        other => Err(usage(format!("unknown subcommand '{other}'"))),
    }
}

fn parse_train(argv: &[String]) -> Result<Command> {
    let mut reader = FlagReader { argv, index: 0 };
    let mut agent: Option<Agent> = None;
    let mut exp: Option<String> = None;
    let mut overwrite = false;
    let mut runs_dir = PathBuf::from("runs");
    // Deferred so defaults are filled first.
    let mut overrides: Vec<(String, String)> = Vec::new();

    while let Some(flag) = reader.next_flag() {
        match flag {
            "--agent" => {
                agent = Some(match reader.value(flag)? {
                    "classical" => Agent::Classical,
                    "quantum" => Agent::Quantum,
                    other => return Err(usage(format!("invalid agent name '{other}'"))),
                })
            }
            "--exp" => {
                let name = reader.value(flag)?;
                if !filesystem_safe(name) {
                    return Err(usage(format!(
                        "experiment name '{name}' is not filesystem-safe"
                    )));
                }
                exp = Some(name.to_string());
            }
            "--overwrite" => overwrite = true,
            "--runs-dir" => runs_dir = PathBuf::from(reader.value(flag)?),
            "--episodes"
            | "--lr"
            | "--hidden"
            | "--noise"
            | "--seed"
            | "--gamma"
            | "--entropy-weight"
            | "--l2-weight"
            | "--clip"
            | "--lr-decay"
            | "--baseline-decay"
            | "--batch-episodes"
            | "--standardize-advantages"
            | "--optimizer"
            | "--qubits"
            | "--depth"
            | "--kappa"
            | "--embed-axis"
            | "--sigma-z"
            | "--horizon"
            | "--reward" => {
                overrides.push((flag.to_string(), reader.value(flag)?.to_string()));
            }
            other => return Err(usage(format!("unknown flag '{other}'"))),
        }
    }

    let agent = agent.ok_or_else(|| usage("--agent is required"))?;
    let exp = exp.ok_or_else(|| usage("--exp is required"))?;
    let mut config = RunConfig::defaults(agent, exp);

    for (flag, raw) in overrides {
        let bad_value = || usage(format!("invalid value '{raw}' for {flag}"));
        match flag.as_str() {
            "--episodes" => {
                config.episodes = raw.parse().map_err(|_| bad_value())?;
                if config.episodes == 0 {
                    return Err(usage("--episodes must be positive"));
                }
            }
            "--lr" => {
                config.lr = require_positive_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--hidden" => {
                config.hidden = raw.parse().map_err(|_| bad_value())?;
                if config.hidden == 0 {
                    return Err(usage("--hidden must be positive"));
                }
            }
            "--noise" => {
                config.noise =
                    require_nonnegative_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--seed" => config.seed = raw.parse().map_err(|_| bad_value())?,
            "--gamma" => {
                let gamma: f64 = raw.parse().map_err(|_| bad_value())?;
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(usage(format!("--gamma must be in (0, 1], got {gamma}")));
                }
                config.gamma = gamma;
            }
            "--entropy-weight" => {
                config.entropy_weight =
                    require_nonnegative_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--l2-weight" => {
                config.l2_weight =
                    require_nonnegative_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--clip" => {
                config.clip_threshold =
                    require_positive_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--lr-decay" => {
                let decay: f64 = raw.parse().map_err(|_| bad_value())?;
                if !(decay > 0.0 && decay <= 1.0) {
                    return Err(usage(format!("--lr-decay must be in (0, 1], got {decay}")));
                }
                config.lr_decay = decay;
            }
            "--baseline-decay" => {
                let decay: f64 = raw.parse().map_err(|_| bad_value())?;
                if !(0.0..=1.0).contains(&decay) {
                    return Err(usage(format!(
                        "--baseline-decay must be in [0, 1], got {decay}"
                    )));
                }
                config.baseline_decay = decay;
            }
            "--batch-episodes" => {
                config.batch_episodes = raw.parse().map_err(|_| bad_value())?;
                if config.batch_episodes == 0 {
                    return Err(usage("--batch-episodes must be positive"));
                }
            }
            "--standardize-advantages" => {
                config.standardize_advantages = raw.parse().map_err(|_| bad_value())?
            }
            "--optimizer" => {
                config.optimizer = match raw.as_str() {
                    "adam" => Optimizer::Adam,
                    "sgd" => Optimizer::Sgd,
                    _ => return Err(usage(format!("invalid optimizer '{raw}'"))),
                }
            }
            "--qubits" => {
                config.qubits = raw.parse().map_err(|_| bad_value())?;
                if config.qubits == 0 || config.qubits > qpg_core::statevector::MAX_QUBITS {
                    return Err(usage(format!(
                        "--qubits must be in 1..={}",
                        qpg_core::statevector::MAX_QUBITS
                    )));
                }
            }
            "--depth" => {
                config.depth = raw.parse().map_err(|_| bad_value())?;
                if config.depth == 0 {
                    return Err(usage("--depth must be positive"));
                }
            }
            "--kappa" => {
                config.kappa = require_positive_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--embed-axis" => {
                config.embed_axis = match raw.as_str() {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    _ => return Err(usage(format!("invalid embedding axis '{raw}'"))),
                }
            }
            "--sigma-z" => {
                config.sigma_z =
                    require_nonnegative_f64(raw.parse().map_err(|_| bad_value())?, &flag)?
            }
            "--horizon" => {
                config.horizon = raw.parse().map_err(|_| bad_value())?;
                if config.horizon == 0 {
                    return Err(usage("--horizon must be positive"));
                }
            }
            "--reward" => {
                config.reward = match raw.as_str() {
                    "unit" => Reward::Unit,
                    "quadratic" => Reward::Quadratic,
                    _ => return Err(usage(format!("invalid reward mode '{raw}'"))),
                }
            }
            _ => unreachable!("override flags are pre-screened"),
        }
    }

    Ok(Command::Train(TrainArgs {
        config,
        overwrite,
        runs_dir,
    }))
}

fn parse_eval(argv: &[String]) -> Result<Command> {
    let mut reader = FlagReader { argv, index: 0 };
    let mut exp: Option<String> = None;
    let mut runs_dir = PathBuf::from("runs");
    let mut sigmas: Vec<f64> = Vec::new();
    let mut rollouts = None;
    let mut eval_seeds = None;
    let mut argmax = false;
    let mut from_training_log = false;

    while let Some(flag) = reader.next_flag() {
        match flag {
            "--exp" => {
                let name = reader.value(flag)?;
                if !filesystem_safe(name) {
                    return Err(usage(format!(
                        "experiment name '{name}' is not filesystem-safe"
                    )));
                }
                exp = Some(name.to_string());
            }
            "--runs-dir" => runs_dir = PathBuf::from(reader.value(flag)?),
            "--sigma" => {
                let sigma: f64 = reader.parse(flag)?;
                sigmas.push(require_nonnegative_f64(sigma, flag)?);
            }
            "--rollouts" => {
                let count: usize = reader.parse(flag)?;
                if count == 0 {
                    return Err(usage("--rollouts must be positive"));
                }
                rollouts = Some(count);
            }
            "--eval-seeds" => {
                let count: usize = reader.parse(flag)?;
                if count == 0 {
                    return Err(usage("--eval-seeds must be positive"));
                }
                eval_seeds = Some(count);
            }
            "--argmax" => argmax = true,
            "--from-training-log" => from_training_log = true,
            other => return Err(usage(format!("unknown flag '{other}'"))),
        }
    }

    Ok(Command::Eval(EvalArgs {
        exp: exp.ok_or_else(|| usage("--exp is required"))?,
        runs_dir,
        sigmas: if sigmas.is_empty() {
            None
        } else {
            Some(sigmas)
        },
        rollouts,
        eval_seeds,
        argmax,
        from_training_log,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_the_classical_reference_command() {
        let cmd = parse_args(&argv(&[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "400",
            "--lr",
            "0.005",
            "--hidden",
            "64",
            "--exp",
            "mlp_stable",
            "--noise",
            "0.0",
        ]))
        .unwrap();
        let Command::Train(train) = cmd else {
            panic!("expected train command");
        };
        assert_eq!(train.config.agent, Agent::Classical);
        assert_eq!(train.config.episodes, 400);
        assert_eq!(train.config.lr, 0.005);
        assert_eq!(train.config.hidden, 64);
        assert_eq!(train.config.exp, "mlp_stable");
        assert_eq!(train.config.noise, 0.0);
        assert_eq!(train.config.seed, 42);
        assert!(!train.overwrite);
    }

    #[test]
    fn quantum_command_fills_defaults() {
        let cmd = parse_args(&argv(&[
            "train",
            "--agent",
            "quantum",
            "--exp",
            "qrl_stable",
        ]))
        .unwrap();
        let Command::Train(train) = cmd else {
            panic!("expected train command");
        };
        assert_eq!(train.config.agent, Agent::Quantum);
        assert_eq!(train.config.episodes, 400);
        assert_eq!(train.config.lr, 0.005);
        assert_eq!(train.config.qubits, 4);
        assert_eq!(train.config.depth, 3);
        assert_eq!(train.config.horizon, 500);
    }

    #[test]
    fn rejects_bad_invocations() {
        for bad in [
            vec!["train", "--agent", "banana", "--exp", "x"],
            vec![
                "train",
                "--agent",
                "classical",
                "--exp",
                "x",
                "--episodes",
                "0",
            ],
            vec!["train", "--agent", "classical", "--exp", "x", "--lr", "abc"],
            vec![
                "train",
                "--agent",
                "classical",
                "--exp",
                "x",
                "--frobnicate",
                "1",
            ],
            vec!["train", "--agent", "classical"],
            vec!["train", "--exp", "x"],
            vec!["train", "--agent", "classical", "--exp", "../evil"],
            vec!["frobnicate"],
            vec![],
            vec!["eval"],
            vec!["eval", "--exp", "x", "--sigma", "-0.1"],
        ] {
            let parsed = parse_args(&argv(&bad));
            assert!(
                matches!(parsed, Err(CliError::Usage(_))),
                "expected usage error for {bad:?}, got {parsed:?}"
            );
        }
    }

    #[test]
    fn eval_flags_round_trip() {
        let cmd = parse_args(&argv(&[
            "eval",
            "--exp",
            "mlp_stable",
            "--sigma",
            "0.0",
            "--sigma",
            "0.05",
            "--rollouts",
            "7",
            "--argmax",
        ]))
        .unwrap();
        let Command::Eval(eval) = cmd else {
            panic!("expected eval command");
        };
        assert_eq!(eval.exp, "mlp_stable");
        assert_eq!(eval.sigmas, Some(vec![0.0, 0.05]));
        assert_eq!(eval.rollouts, Some(7));
        assert!(eval.argmax);
        assert!(!eval.from_training_log);
    }

    #[test]
    fn config_json_round_trips_losslessly() {
        let mut config = RunConfig::defaults(Agent::Quantum, "roundtrip".into());
        config.lr = 0.004999999999999999;
        config.kappa = 1.0 + 1e-15;
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
        assert_eq!(config.lr.to_bits(), back.lr.to_bits());
        assert_eq!(config.kappa.to_bits(), back.kappa.to_bits());
    }
}
