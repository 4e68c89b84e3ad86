//! Run manifest: config echo, checksums and the conventions in effect.

use std::path::Path;

use bouncer::dynamics::Trajectory;
use bouncer::wavefield::{RebirthPolicy, SwitchAction};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::scenario::{RunOptions, ScenarioOutput};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Conventions that change what the numbers mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignFlags {
    pub rebirth_policies: Vec<String>,
    pub phase_convention: String,
    pub osmotic_velocity: String,
    pub osmotic_channels: String,
    pub quantum_potential: String,
    pub integrator: String,
    pub node_threshold: f64,
    pub sampling: String,
    pub oracle_guard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub simulate_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub timing: Timing,
    pub design: DesignFlags,
    pub assumptions: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn design_flags(output: &ScenarioOutput, oracle_guard: bool) -> DesignFlags {
    let mut rebirth: Vec<String> = output.states[0]
        .0
        .events()
        .iter()
        .filter(|e| matches!(e.action, SwitchAction::Open(_)))
        .map(|e| e.rebirth.as_str().to_string())
        .collect();
    if rebirth.is_empty() {
        rebirth.push(RebirthPolicy::default().as_str().to_string());
    }
    rebirth.sort();
    rebirth.dedup();
    DesignFlags {
        rebirth_policies: rebirth,
        phase_convention: "two-slit closed form uses phi = (S2 - S1) / hbar".into(),
        osmotic_velocity: "u = -(hbar/m) R'/R".into(),
        osmotic_channels: "amplitude R/2 at theta +- pi/2 carrying +-u".into(),
        quantum_potential: "U = -(hbar^2/2m) R''/R = (hbar/2) u' - m u^2/2".into(),
        integrator: Trajectory::SCHEME.into(),
        node_threshold: bouncer::NODE_THRESHOLD,
        sampling: "inverse CDF of a 65536-point trapezoid table; draw i uses ChaCha8 stream i".into(),
        oracle_guard,
    }
}

/// Writes every artifact of `output` and then the manifest.
pub fn write_bundle(
    dir: &Path,
    output: &ScenarioOutput,
    options: &RunOptions,
) -> Result<RunManifest, CliError> {
    let mut entries = Vec::with_capacity(output.artifacts.len());
    for a in &output.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
        entries.push(ArtifactEntry {
            name: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
    }
    let config = &output.config;
    let manifest = RunManifest {
        tool: "bouncer".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.ensemble.seed,
        config: config.clone(),
        artifacts: entries,
        timing: Timing {
            simulate_seconds: output.elapsed_seconds,
            threads: rayon::current_num_threads(),
        },
        design: design_flags(output, options.check_oracle),
        assumptions: config.assumptions.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}
