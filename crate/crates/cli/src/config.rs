use std::path::Path;

use resa::experiment::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::{config_error, CliResult, GlobalArgs};

pub const CONFIG_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "RESA_THREADS";

/// The configuration file, also recorded (after flag overrides) with every
/// run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub area_weighted: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            experiment: ExperimentConfig::standard(),
            area_weighted: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))?;
        if cfg.version != CONFIG_VERSION {
            return Err(config_error(format!("config version {} unsupported (expected {CONFIG_VERSION})", cfg.version)));
        }
        Ok(cfg)
    }

    /// File values with command-line flags on top.
    pub fn resolve(args: &GlobalArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let exp = &mut cfg.experiment;
        if let Some(e) = args.epochs {
            exp.train.epochs = e;
        }
        if let Some(w) = args.lon_wrap {
            exp.model.lon_wrap = w;
            exp.acausal.lon_wrap = w;
        }
        if let Some(w) = args.window {
            exp.benchmark.window = w;
            exp.transfer.window = w;
        }
        if args.area_weighted {
            cfg.area_weighted = true;
        }
        Ok(cfg)
    }
}

/// `--threads`, else RESA_THREADS, else 1; must be positive.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| config_error(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(config_error("thread cap must be at least 1"));
    }
    Ok(n)
}
