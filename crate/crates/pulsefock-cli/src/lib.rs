//! Library surface of the command-line driver: configuration parsing and
//! the scenario runners, kept separate from argument handling so tests can
//! exercise complete runs in-process.

pub mod config;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ConfigError, Geometry, Scenario, ScenarioConfig};
pub use runner::{run, RunError};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "PULSEFOCK_OUT";

/// Load a config file, check it names the expected scenario, resolve the
/// output directory (flag beats environment beats config), and run.
pub fn execute(
    expected: Scenario,
    config_path: &Path,
    output_override: Option<&Path>,
) -> Result<(), RunError> {
    let text = std::fs::read_to_string(config_path).map_err(|source| {
        RunError::Config(ConfigError(format!(
            "cannot read {}: {source}",
            config_path.display()
        )))
    })?;
    let config = parse_config(&text)?;
    if config.scenario != expected {
        return Err(RunError::Config(ConfigError(format!(
            "scenario = {} does not match the `{}` subcommand",
            config.scenario.name(),
            expected.name()
        ))));
    }
    let output_dir: PathBuf = match output_override {
        Some(dir) => dir.to_path_buf(),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => config.output_dir.clone(),
        },
    };
    run(&config, &output_dir)
}
