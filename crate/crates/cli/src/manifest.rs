use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// What produced a set of outputs. Reports embed this without the
/// timestamp, so identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// SHA-256 of the effective config in canonical form.
    pub config_sha256: String,
    pub master_seed: u64,
    pub subcommand: String,
    /// Command options that are not part of the config.
    pub options: Vec<(String, String)>,
    /// Output files, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(canonical_config: &str, master_seed: u64, subcommand: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex::encode(Sha256::digest(canonical_config.as_bytes())),
            master_seed,
            subcommand: subcommand.to_string(),
            options: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn header_line(&self) -> String {
        format!("# manifest {}\n", serde_json::to_string(self).expect("manifest serializes"))
    }
}

/// `manifest.json`: the embedded manifest plus wall-clock time and the full
/// canonical config, enough to rerun.
#[derive(Serialize)]
pub struct ManifestFile<'a> {
    #[serde(flatten)]
    pub manifest: &'a RunManifest,
    pub timestamp_unix: u64,
    pub config: &'a str,
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes via a temporary sibling and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(io)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}
