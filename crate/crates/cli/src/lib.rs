//! Configuration-driven scenario runner for the `bouncer` simulator.
//!
//! A run parses a TOML [`config::ExperimentConfig`] (optionally on top of a
//! built-in [`presets::Preset`]), integrates the trajectory ensembles,
//! renders CSV/JSON artifacts and writes them together with a
//! [`manifest::RunManifest`] holding their SHA-256 checksums.

pub mod config;
mod error;
pub mod manifest;
pub mod presets;
pub mod scenario;

pub use config::{parse_config, parse_with_base, ConfigError, ExperimentConfig, Violation};
pub use error::CliError;
pub use manifest::RunManifest;
pub use presets::{list_presets, Preset};
pub use scenario::{run_scenario, simulate, RunOptions, ScenarioOutput};

/// Environment variable naming the output directory when neither the
/// command line nor the config sets one.
pub const OUT_DIR_ENV: &str = "BOUNCER_OUT_DIR";
/// Output directory used when nothing else names one.
pub const DEFAULT_OUT_DIR: &str = "bouncer-out";

/// `--out-dir`, then `outputs.directory`, then the environment, then the default.
pub fn resolve_out_dir(
    flag: Option<&std::path::Path>,
    config: &ExperimentConfig,
    env: Option<std::ffi::OsString>,
) -> std::path::PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(d) = &config.outputs.directory {
        return d.into();
    }
    env.filter(|v| !v.is_empty())
        .map(Into::into)
        .unwrap_or_else(|| DEFAULT_OUT_DIR.into())
}
