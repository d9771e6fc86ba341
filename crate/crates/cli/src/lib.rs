//! Library side of the `prandtl` command: configuration, the run pipeline,
//! output writers, the blow-up bound report and the validation suite.

pub mod bound;
pub mod config;
pub mod output;
pub mod run;
pub mod validate;

use std::path::Path;

use config::{ConfigError, RawConfig, RunConfig};

/// Reads an optional config file, then applies `--scenario` and the
/// `--override key=value` pairs in order.
pub fn load_config(
    path: Option<&Path>,
    scenario: Option<&str>,
    overrides: &[String],
) -> Result<RunConfig, ConfigError> {
    let mut raw = match path {
        Some(p) => RawConfig::read(p)?,
        None => RawConfig::default(),
    };
    if let Some(s) = scenario {
        raw.set("scenario", s)?;
    }
    for pair in overrides {
        raw.apply_override(pair)?;
    }
    raw.resolve()
}
