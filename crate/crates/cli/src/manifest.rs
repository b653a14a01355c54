use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
}

/// Record of one `train` invocation, written last.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the effective `config.toml`.
    pub config_sha256: String,
    pub seed: u64,
    /// `flag`, `config` or `random`.
    pub seed_source: &'static str,
    pub artifacts: Vec<Artifact>,
    pub duration_seconds: f64,
    /// Seconds since the Unix epoch at the end of the run.
    pub timestamp: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to `dir/name` and returns its artifact entry.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<Artifact> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(Artifact { name: name.to_string(), sha256: sha256_hex(contents.as_bytes()) })
}

impl RunManifest {
    /// Writes the manifest through a temporary file and a rename, so readers
    /// never observe a partial document.
    pub fn write_atomic(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        let tmp = dir.join(format!(".{FILE_NAME}.tmp"));
        {
            let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, dir.join(FILE_NAME)).context("moving manifest into place")?;
        Ok(())
    }
}
