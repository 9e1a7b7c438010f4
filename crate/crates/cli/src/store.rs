//! The on-disk run store: `runs/<exp>/` with config, per-episode log,
//! weights, completion metadata and evaluation artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qpg_core::eval::{EvalReport, ReturnsSource};
use qpg_core::policy::Policy;
use qpg_core::trainer::UpdateReport;

use crate::args::RunConfig;
use crate::{weights, CliError, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const REWARD_LOG_FILE: &str = "reward_log.csv";
pub const TRAIN_META_FILE: &str = "train_meta.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const NOISE_SWEEP_FILE: &str = "noise_sweep.csv";

pub const REWARD_LOG_HEADER: &str = "episode,return,loss,grad_norm,lr";
pub const NOISE_SWEEP_HEADER: &str = "sigma,mean_return,std_return,success_rate";

/// Completion metadata written after a successful training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub schema_version: u32,
    pub episodes: u32,
    pub total_timesteps: u64,
    pub wall_clock_seconds: f64,
    /// Total circuit evaluations across all gradient passes; absent for
    /// the classical agent.
    pub circuit_evaluations: Option<u64>,
}

fn io_err(context: &str, path: &Path, err: std::io::Error) -> CliError {
    CliError::Runtime(format!("{context} {}: {err}", path.display()))
}

/// Write via a temp file in the same directory, then rename into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| CliError::Runtime(format!("{} has no parent", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("artifact")
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| io_err("creating", &tmp, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| io_err("writing", &tmp, e))?;
    file.sync_all().map_err(|e| io_err("syncing", &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err("renaming into", path, e))?;
    Ok(())
}

pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Create `runs_dir/<exp>/`, refusing to touch an existing run unless
    /// `overwrite` is set.
    pub fn create(runs_dir: &Path, exp: &str, overwrite: bool) -> Result<Self> {
        let path = runs_dir.join(exp);
        if path.exists() {
            if !overwrite {
                return Err(CliError::Runtime(format!(
                    "run directory {} already exists (pass --overwrite to replace it)",
                    path.display()
                )));
            }
            fs::remove_dir_all(&path).map_err(|e| io_err("removing", &path, e))?;
        }
        fs::create_dir_all(&path).map_err(|e| io_err("creating", &path, e))?;
        Ok(RunDir { path })
    }

    /// Open an existing run for evaluation.
    pub fn open(runs_dir: &Path, exp: &str) -> Result<Self> {
        let path = runs_dir.join(exp);
        if !path.is_dir() {
            return Err(CliError::Runtime(format!(
                "no run directory at {}",
                path.display()
            )));
        }
        Ok(RunDir { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_config(&self, config: &RunConfig) -> Result<()> {
        let json = serde_json::to_string_pretty(config)
            .map_err(|e| CliError::runtime("serializing config", e))?;
        write_atomic(&self.path.join(CONFIG_FILE), &json)
    }

    pub fn load_config(&self) -> Result<RunConfig> {
        let path = self.path.join(CONFIG_FILE);
        let json = fs::read_to_string(&path).map_err(|e| io_err("reading", &path, e))?;
        serde_json::from_str(&json)
            .map_err(|e| CliError::Runtime(format!("corrupt {}: {e}", path.display())))
    }

    pub fn write_reward_log(&self, log: &[UpdateReport]) -> Result<()> {
        let mut csv = String::from(REWARD_LOG_HEADER);
        csv.push('\n');
        for report in log {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                report.episode,
                report.episode_return,
                report.loss,
                report.grad_norm_pre_clip,
                report.lr_used
            ));
        }
        write_atomic(&self.path.join(REWARD_LOG_FILE), &csv)
    }

    /// Episode returns parsed back from the log.
    pub fn read_reward_log_returns(&self) -> Result<Vec<f64>> {
        let path = self.path.join(REWARD_LOG_FILE);
        let text = fs::read_to_string(&path).map_err(|e| io_err("reading", &path, e))?;
        let records = parse_strict_csv(&text, 5)
            .map_err(|e| CliError::Runtime(format!("corrupt {}: {e}", path.display())))?;
        if records.first().map(|r| r.join(",")) != Some(REWARD_LOG_HEADER.to_string()) {
            return Err(CliError::Runtime(format!(
                "{} does not start with the expected header",
                path.display()
            )));
        }
        records[1..]
            .iter()
            .enumerate()
            .map(|(i, record)| {
                record[1].parse().map_err(|_| {
                    CliError::Runtime(format!(
                        "{}: row {} has a malformed return",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect()
    }

    pub fn write_weights(&self, policy: &Policy, file_name: &str) -> Result<()> {
        let json = weights::to_json(policy)?;
        write_atomic(&self.path.join(file_name), &json)
    }

    pub fn write_train_meta(&self, meta: &TrainMeta) -> Result<()> {
        let json = serde_json::to_string_pretty(meta)
            .map_err(|e| CliError::runtime("serializing train metadata", e))?;
        write_atomic(&self.path.join(TRAIN_META_FILE), &json)
    }

    pub fn load_train_meta(&self) -> Option<TrainMeta> {
        let json = fs::read_to_string(self.path.join(TRAIN_META_FILE)).ok()?;
        serde_json::from_str(&json).ok()
    }

    pub fn write_eval_report(&self, report: &EvalReportJson) -> Result<()> {
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| CliError::runtime("serializing evaluation report", e))?;
        write_atomic(&self.path.join(EVAL_REPORT_FILE), &json)
    }

    pub fn write_noise_sweep(&self, rows: &[NoiseRowJson]) -> Result<()> {
        let mut csv = String::from(NOISE_SWEEP_HEADER);
        csv.push('\n');
        for row in rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                row.sigma, row.mean_return, row.std_return, row.success_rate
            ));
        }
        write_atomic(&self.path.join(NOISE_SWEEP_FILE), &csv)
    }
}

/// Serialized form of the evaluation report.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReportJson {
    pub schema_version: u32,
    pub rows: Vec<NoiseRowJson>,
    pub parameter_count: usize,
    pub train_wall_clock_seconds: Option<f64>,
    pub vqc_circuit_evaluations: Option<u64>,
    pub returns_source: ReturnsSourceJson,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NoiseRowJson {
    pub sigma: f64,
    pub mean_return: f64,
    pub std_return: f64,
    pub success_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnsSourceJson {
    EvaluationRollouts {
        rollouts_per_point: usize,
        seeds: usize,
    },
    TrainingLog {
        episodes: usize,
        mean_return: f64,
        std_return: f64,
    },
}

impl From<&EvalReport> for EvalReportJson {
    fn from(report: &EvalReport) -> Self {
        EvalReportJson {
            schema_version: 1,
            rows: report
                .rows
                .iter()
                .map(|r| NoiseRowJson {
                    sigma: r.sigma,
                    mean_return: r.mean_return,
                    std_return: r.std_return,
                    success_rate: r.success_rate,
                })
                .collect(),
            parameter_count: report.parameter_count,
            train_wall_clock_seconds: report.train_wall_clock_seconds,
            vqc_circuit_evaluations: report.vqc_circuit_evaluations,
            returns_source: match &report.returns_source {
                ReturnsSource::EvaluationRollouts {
                    rollouts_per_point,
                    seeds,
                } => ReturnsSourceJson::EvaluationRollouts {
                    rollouts_per_point: *rollouts_per_point,
                    seeds: *seeds,
                },
                ReturnsSource::TrainingLog { episodes } => ReturnsSourceJson::TrainingLog {
                    episodes: *episodes,
                    mean_return: report.rows.first().map(|r| r.mean_return).unwrap_or(0.0),
                    std_return: report.rows.first().map(|r| r.std_return).unwrap_or(0.0),
                },
            },
        }
    }
}

/// Minimal strict CSV reader: LF or CRLF records, a fixed field count,
/// no quoting (none of our fields need it), no blank records.
pub fn parse_strict_csv(
    text: &str,
    fields: usize,
) -> std::result::Result<Vec<Vec<String>>, String> {
    let mut records = Vec::new();
    for (line_no, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        if line.contains('"') {
            return Err(format!(
                "line {}: quoting is not accepted here",
                line_no + 1
            ));
        }
        let record: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
        if record.len() != fields {
            return Err(format!(
                "line {}: expected {fields} fields, found {}",
                line_no + 1,
                record.len()
            ));
        }
        if record.iter().any(|f| f.is_empty()) {
            return Err(format!("line {}: empty field", line_no + 1));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err("no records".into());
    }
    Ok(records)
}
