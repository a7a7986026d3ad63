//! Run manifests and all-or-nothing output writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    /// File name for inputs, path relative to the output directory for outputs.
    #[serde(alias = "name")]
    pub path: String,
    pub sha256: String,
}

/// Record of one run. Holds no timestamps or absolute paths so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

/// Inputs read by a run, remembered with their hashes.
#[derive(Debug, Default)]
pub struct Inputs {
    hashes: Vec<FileHash>,
}

impl Inputs {
    fn read_bytes(&mut self, path: &Path) -> std::io::Result<Vec<u8>> {
        let bytes = std::fs::read(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.hashes.push(FileHash {
            path: name,
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    /// Reads a data file; failures are data errors (exit 3).
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_bytes(path).map_err(|e| CliError::data(path, e))?;
        String::from_utf8(bytes).map_err(|e| CliError::data(path, e))
    }

    /// Reads a config file; failures are usage errors (exit 2).
    pub fn read_config(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_bytes(path).map_err(|source| CliError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        String::from_utf8(bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn into_hashes(self) -> Vec<FileHash> {
        self.hashes
    }
}

/// Outputs collected in memory and written together once the run succeeded.
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Adds `<stem>.manifest.json` and writes everything into `dir`.
    /// Each file goes through a temporary file and a rename; if any write
    /// fails, files already placed by this call are removed again.
    pub fn commit(
        mut self,
        dir: &Path,
        subcommand: &str,
        stem: &str,
        seed: u64,
        config: serde_json::Value,
        inputs: Inputs,
    ) -> Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            config,
            inputs: inputs.into_hashes(),
            outputs: self
                .files
                .iter()
                .map(|(name, bytes)| FileHash {
                    path: name.clone(),
                    sha256: sha256_hex(bytes),
                })
                .collect(),
        };
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        self.add(format!("{stem}.manifest.json"), json);

        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written: Vec<PathBuf> = Vec::new();
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            if let Err(source) = write_atomic(dir, &target, bytes) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(CliError::Write { path: target, source });
            }
            written.push(target);
        }
        Ok(written)
    }
}

fn write_atomic(dir: &Path, target: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut builder = tempfile::Builder::new();
    // Temporary files default to owner-only access; outputs are ordinary files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| e.error)?;
    Ok(())
}
