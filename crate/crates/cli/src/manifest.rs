// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run manifests: enough to re-execute a command and check its inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{io_error, CliError, CliResult};

pub const TOOL_VERSION: &str = concat!("fcp ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    /// Arguments as given, with defaults and the seed filled in.
    pub args: Value,
    /// Values chosen at run time (bandwidth, penalty, threshold, ...).
    pub resolved: Value,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads a file and records its digest.
pub fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    inputs.push(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    String::from_utf8(bytes)
        .map_err(|_| CliError::input(format!("{}: not valid UTF-8", path.display())))
}

/// Sidecar path for tabular outputs: `results.csv` → `results.manifest.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Loads a manifest from a sidecar file or from the `manifest` field of a JSON
/// output.
pub fn load(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let inner = match value.get("manifest") {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(inner)
        .map_err(|e| CliError::input(format!("{}: not a run manifest: {e}", path.display())))
}

/// Fails when any recorded input has changed since the run.
pub fn verify_inputs(m: &RunManifest) -> CliResult<()> {
    for input in &m.inputs {
        let path = Path::new(&input.path);
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let digest = sha256_hex(&bytes);
        if digest != input.sha256 {
            return Err(CliError::input(format!(
                "{}: digest {digest} does not match the manifest ({})",
                input.path, input.sha256
            )));
        }
    }
    Ok(())
}
