//! Batch front end for attribute-based demand experiments: configuration handling,
//! grid and simulation orchestration, CSV and SVG output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, Parameters};
pub use error::{CliError, Result};
pub use experiments::{run, RunReport};
pub use output::GridResult;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "ATTRIBMKT_THREADS";

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn requested_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::config(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub svg: bool,
}

/// Reads the config for `experiment` (defaults when `path` is `None`) and applies
/// command-line overrides.
pub fn load_config(experiment: Experiment, path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            ExperimentConfig::parse(&text, Some(experiment))?
        }
        None => ExperimentConfig::default_for(experiment),
    };
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    cfg.emit_svg |= overrides.svg;
    Ok(cfg)
}

/// Runs `cfg` on a pool sized from [`THREADS_ENV`].
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    let pool = thread_pool(requested_threads()?)?;
    pool.install(|| run(cfg))
}
