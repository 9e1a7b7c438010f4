//! The `train` and `eval` subcommands.

use std::time::Instant;

use qpg_core::env::{CartPole, ObservationNoiseSpec};
use qpg_core::eval::{self, EvalConfig};
use qpg_core::policy::{NormalizationSpec, Policy};
use qpg_core::trainer::{self, TrainResult};
use qpg_core::vqc::MeasurementNoiseModel;

use crate::args::{parse_args, Agent, Command, EvalArgs, TrainArgs};
use crate::store::{
    EvalReportJson, NoiseRowJson, ReturnsSourceJson, RunDir, TrainMeta, REWARD_LOG_FILE,
};
use crate::{CliError, Result};

pub fn run(argv: &[String]) -> Result<()> {
    match parse_args(argv)? {
        Command::Train(args) => run_training(&args),
        Command::Eval(args) => run_evaluation(&args),
        Command::Help => {
            println!("{}", crate::args::USAGE);
            Ok(())
        }
    }
}

pub fn run_training(args: &TrainArgs) -> Result<()> {
    let config = &args.config;
    let train_config = config.train_config();
    train_config.validate()?;
    let spec = config.agent_spec();
    let env = CartPole::new(config.reward.into(), config.horizon)?;
    let obs_noise = ObservationNoiseSpec::new(config.noise)?;

    let run_dir = RunDir::create(&args.runs_dir, &config.exp, args.overwrite)?;
    // Written before the first episode so a crashed run is identifiable.
    run_dir.write_config(config)?;

    let started = Instant::now();
    let TrainResult { policy, log } =
        trainer::train(&spec, &train_config, &env, &obs_noise, config.seed)?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    run_dir.write_reward_log(&log)?;
    run_dir.write_weights(&policy, config.agent.weight_file_name())?;
    let profile = eval::efficiency_profile(&log, wall_clock_seconds);
    run_dir.write_train_meta(&TrainMeta {
        schema_version: 1,
        episodes: config.episodes,
        total_timesteps: profile.total_timesteps,
        wall_clock_seconds,
        circuit_evaluations: profile.circuit_evaluations,
    })?;

    let (mean, std) = eval::summarize_training_log(&log);
    let tail: Vec<f64> = log
        .iter()
        .rev()
        .take(50)
        .map(|r| r.episode_return)
        .collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    println!(
        "trained {} agent '{}' for {} episodes in {:.1}s",
        match config.agent {
            Agent::Classical => "classical",
            Agent::Quantum => "quantum",
        },
        config.exp,
        log.len(),
        wall_clock_seconds
    );
    println!("episodic return: mean {mean:.1} +/- {std:.1}, final-50 mean {tail_mean:.1}");
    println!("artifacts in {}", run_dir.path().display());
    Ok(())
}

/// Rebuild the run's policy from its config and saved weights.
fn load_policy(run_dir: &RunDir) -> Result<(Policy, crate::args::RunConfig)> {
    let config = run_dir.load_config()?;
    let norm = NormalizationSpec::new(config.s_max, config.kappa)?;
    let noise = MeasurementNoiseModel::new(config.sigma_z)?;
    let path = run_dir.path().join(config.agent.weight_file_name());
    let policy = crate::weights::load(&path, norm, noise)?;
    let expected = config.agent_spec().param_count();
    if policy.param_count() != expected {
        return Err(CliError::Runtime(format!(
            "weight file {} holds {} parameters but the run config implies {expected}",
            path.display(),
            policy.param_count()
        )));
    }
    Ok((policy, config))
}

pub fn run_evaluation(args: &EvalArgs) -> Result<()> {
    let run_dir = RunDir::open(&args.runs_dir, &args.exp)?;
    let (policy, config) = load_policy(&run_dir)?;
    let meta = run_dir.load_train_meta();
    let parameter_count = policy.param_count();

    let report = if args.from_training_log {
        let returns = run_dir.read_reward_log_returns()?;
        let (mean, std) = eval::mean_std(&returns);
        println!(
            "training-log summary for '{}': mean return {mean:.1} +/- {std:.1} over {} episodes",
            args.exp,
            returns.len()
        );
        EvalReportJson {
            schema_version: 1,
            rows: Vec::new(),
            parameter_count,
            train_wall_clock_seconds: meta.as_ref().map(|m| m.wall_clock_seconds),
            vqc_circuit_evaluations: meta.as_ref().and_then(|m| m.circuit_evaluations),
            returns_source: ReturnsSourceJson::TrainingLog {
                episodes: returns.len(),
                mean_return: mean,
                std_return: std,
            },
        }
    } else {
        let eval_config = EvalConfig {
            rollouts_per_point: args.rollouts.unwrap_or(config.eval_rollouts),
            noise_levels: args
                .sigmas
                .clone()
                .unwrap_or_else(|| config.eval_noise_levels.clone()),
            seeds: config.derived_eval_seeds(args.eval_seeds.unwrap_or(config.eval_seeds)),
            deterministic_actions: args.argmax || config.eval_deterministic,
        };
        let outcome = eval::evaluate(&policy, &eval_config, config.horizon)?;
        for row in &outcome.rows {
            println!(
                "sigma {:>5.2}: mean return {:7.1} +/- {:5.1}, success rate {:.2}",
                row.sigma, row.mean_return, row.std_return, row.success_rate
            );
        }
        EvalReportJson {
            schema_version: 1,
            rows: outcome
                .rows
                .iter()
                .map(|r| NoiseRowJson {
                    sigma: r.sigma,
                    mean_return: r.mean_return,
                    std_return: r.std_return,
                    success_rate: r.success_rate,
                })
                .collect(),
            parameter_count,
            train_wall_clock_seconds: meta.as_ref().map(|m| m.wall_clock_seconds),
            vqc_circuit_evaluations: meta.as_ref().and_then(|m| m.circuit_evaluations),
            returns_source: ReturnsSourceJson::EvaluationRollouts {
                rollouts_per_point: eval_config.rollouts_per_point,
                seeds: eval_config.seeds.len(),
            },
        }
    };

    run_dir.write_eval_report(&report)?;
    if !report.rows.is_empty() {
        run_dir.write_noise_sweep(&report.rows)?;
    }
    println!(
        "evaluation artifacts in {} ({} source: {})",
        run_dir.path().display(),
        crate::store::EVAL_REPORT_FILE,
        match report.returns_source {
            ReturnsSourceJson::EvaluationRollouts { .. } => "fresh rollouts",
            ReturnsSourceJson::TrainingLog { .. } => REWARD_LOG_FILE,
        }
    );
    Ok(())
}
