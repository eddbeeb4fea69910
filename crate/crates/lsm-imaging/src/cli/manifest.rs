//! Run manifest: ties every artifact to the configuration that made it.
//!
//! Commands that consume artifacts check both the config hash and the
//! artifact digests before computing; a mismatch means the file tree is
//! stale relative to the configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Hex-encoded 64-bit config digest.
    pub config_hash: String,
    /// File name → hex SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    /// Forward simulations spent producing the datasets.
    pub simulations: usize,
    /// Absolute per-sample noise σ added to the fields (0 = clean).
    pub noise_sigma: f64,
    /// Relative noise level requested in the config.
    pub noise_level: f64,
}

impl Manifest {
    pub fn new(config_hash: u64) -> Manifest {
        Manifest {
            config_hash: format!("{config_hash:016x}"),
            artifacts: BTreeMap::new(),
            simulations: 0,
            noise_sigma: 0.0,
            noise_level: 0.0,
        }
    }

    pub fn path(out_dir: &Path) -> PathBuf {
        out_dir.join(MANIFEST_NAME)
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Numerical(format!("manifest serialization: {e}")))?;
        std::fs::write(Self::path(out_dir), text)
            .map_err(|e| CliError::Numerical(format!("writing manifest: {e}")))?;
        Ok(())
    }

    pub fn load(out_dir: &Path) -> Result<Manifest, CliError> {
        let path = Self::path(out_dir);
        let text = std::fs::read_to_string(&path).map_err(|_| {
            CliError::Stale(format!(
                "missing manifest {}; run `simulate` first",
                path.display()
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Stale(format!("unreadable manifest: {e}")))
    }

    /// Fail unless the manifest belongs to this configuration.
    pub fn check_config(&self, config_hash: u64) -> Result<(), CliError> {
        let want = format!("{config_hash:016x}");
        if self.config_hash != want {
            return Err(CliError::Stale(format!(
                "artifacts were produced by config {}, current config is {want}",
                self.config_hash
            )));
        }
        Ok(())
    }

    /// Record an artifact's digest after writing it.
    pub fn record(&mut self, out_dir: &Path, name: &str) -> Result<(), CliError> {
        let digest = file_digest(&out_dir.join(name))?;
        self.artifacts.insert(name.to_string(), digest);
        Ok(())
    }

    /// Fail unless the artifact exists and matches its recorded digest.
    pub fn verify(&self, out_dir: &Path, name: &str) -> Result<(), CliError> {
        let want = self.artifacts.get(name).ok_or_else(|| {
            CliError::Stale(format!("artifact {name} is not in the manifest"))
        })?;
        let got = file_digest(&out_dir.join(name))?;
        if &got != want {
            return Err(CliError::Stale(format!(
                "artifact {name} has digest {got}, manifest records {want}"
            )));
        }
        Ok(())
    }
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|_| CliError::Stale(format!("missing artifact {}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(hex_string(&digest))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
