//! The run manifest: everything needed to reproduce a run byte for byte.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use randcast_core::{SkippedDay, DAY_SEED_STRIDE};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct ArtifactInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub artifact: ArtifactInfo,
    pub command: String,
    /// SHA-256 of the effective config serialization below.
    pub config_sha256: String,
    /// The effective config, with all flag overrides applied.
    pub config: serde_json::Value,
    pub base_seed: u64,
    /// Per-day seeds step by this stride; member `k` adds `k` on top.
    pub day_seed_stride: u64,
    pub forecast_days: usize,
    pub skipped_days: Vec<SkippedDay>,
}

pub fn config_hash(config: &RunConfig) -> Result<String, CliError> {
    let canonical = serde_json::to_string(config)
        .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn build(
    command: &str,
    config: &RunConfig,
    forecast_days: usize,
    skipped_days: Vec<SkippedDay>,
) -> Result<Manifest, CliError> {
    // The hash identifies what was computed; where the artifacts land is
    // not part of it.
    let mut canonical = config.clone();
    canonical.output_dir = None;
    Ok(Manifest {
        manifest_version: 1,
        artifact: ArtifactInfo {
            name: "randcast",
            version: env!("CARGO_PKG_VERSION"),
        },
        command: command.to_string(),
        config_sha256: config_hash(&canonical)?,
        config: serde_json::to_value(&canonical)
            .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?,
        base_seed: config.seed,
        day_seed_stride: DAY_SEED_STRIDE,
        forecast_days,
        skipped_days,
    })
}

pub fn write(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text)
        .map_err(|e| CliError::Data(format!("cannot write manifest: {e}")))
}
