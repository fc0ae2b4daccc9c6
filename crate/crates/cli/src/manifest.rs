//! Run manifests: every command records its config, a config hash, its seed,
//! and the files it wrote, so outputs are reproducible from the manifest.

use fold::error::Result;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub elapsed_secs: f64,
}

/// FNV-1a over the canonical config encoding; stable across runs.
pub fn config_hash(command: &str, seed: u64, config: &serde_json::Value) -> String {
    let text = format!("{command}|{seed}|{config}");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: u64,
    config: serde_json::Value,
    outputs: &[&str],
    elapsed_secs: f64,
) -> Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        seed,
        config_hash: config_hash(command, seed, &config),
        config,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        elapsed_secs,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
