use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use tomnet_core::{InfoWeights, LesionMode, ModelConfig};

use crate::errors::{CliError, CliResult};

/// Model parameters, resolved from an optional JSON config file with
/// individual flags taking precedence.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// JSON model config, e.g. {"w_sn":0.1,"w_mn":1.0,"w_my":1.45,"w_sy":2.0,
    /// "alpha_d":0.95,"lesion":"full"}
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Strong-no information weight (overrides the config file)
    #[arg(long)]
    pub w_sn: Option<f64>,
    /// Maybe-no information weight
    #[arg(long)]
    pub w_mn: Option<f64>,
    /// Maybe-yes information weight
    #[arg(long)]
    pub w_my: Option<f64>,
    /// Strong-yes information weight
    #[arg(long)]
    pub w_sy: Option<f64>,
    /// Theory-of-mind decision weight in [0, 1]
    #[arg(long)]
    pub alpha_d: Option<f64>,
    /// Lesion: random | prior-only | self-only | partner-only | full
    #[arg(long)]
    pub lesion: Option<String>,
}

impl ModelArgs {
    pub fn resolve(&self) -> CliResult<ModelConfig> {
        let base: Option<ModelConfig> = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Input(format!("cannot read config {}: {e}", path.display()))
                })?;
                Some(serde_json::from_str(&text).map_err(|e| {
                    CliError::Input(format!("bad config {}: {e}", path.display()))
                })?)
            }
            None => None,
        };
        let lesion = match &self.lesion {
            Some(s) => Some(
                LesionMode::parse(s)
                    .ok_or_else(|| CliError::Input(format!("unknown lesion `{s}`")))?,
            ),
            None => None,
        };
        let missing = || {
            CliError::Input(
                "no model given: pass --config FILE or all of --w-sn --w-mn --w-my --w-sy --alpha-d"
                    .into(),
            )
        };
        let cfg = match base {
            Some(mut cfg) => {
                if let Some(v) = self.w_sn {
                    cfg.weights.sn = v;
                }
                if let Some(v) = self.w_mn {
                    cfg.weights.mn = v;
                }
                if let Some(v) = self.w_my {
                    cfg.weights.my = v;
                }
                if let Some(v) = self.w_sy {
                    cfg.weights.sy = v;
                }
                if let Some(v) = self.alpha_d {
                    cfg.alpha_d = v;
                }
                if let Some(l) = lesion {
                    cfg.lesion = l;
                }
                cfg
            }
            None => ModelConfig {
                weights: InfoWeights {
                    sn: self.w_sn.ok_or_else(missing)?,
                    mn: self.w_mn.ok_or_else(missing)?,
                    my: self.w_my.ok_or_else(missing)?,
                    sy: self.w_sy.ok_or_else(missing)?,
                },
                alpha_d: self.alpha_d.ok_or_else(missing)?,
                lesion: lesion.unwrap_or(LesionMode::Full),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Write a pretty-printed JSON artifact.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Echo the resolved run parameters (everything that affects the artifacts;
/// scheduling knobs like --jobs are excluded) so a run is reproducible from
/// `run.json` alone.
pub fn write_run_json(out: &Path, command: &str, params: serde_json::Value) -> CliResult<()> {
    let run = serde_json::json!({
        "command": command,
        "params": params,
    });
    write_json(&out.join("run.json"), &run)
}

pub fn load_dataset(dir: &Path) -> CliResult<Vec<tomnet_core::TeamRecord>> {
    Ok(tomnet_core::io::load_dataset(dir)?)
}

/// Format a float for CSV output: shortest exact representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Format an optional float; empty cell when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
