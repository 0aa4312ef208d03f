//! Input capture, atomic output commit and run manifests.

use crate::error::{CliError, CliResult};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads inputs and remembers their digests for the manifest.
#[derive(Debug, Default)]
pub struct Inputs {
    seen: Vec<FileDigest>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        self.seen.push(FileDigest {
            name: file_name(path),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> CliResult<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes)
            .map_err(|e| CliError::usage(format!("{}: not UTF-8: {e}", path.display())))
    }
}

/// Outputs staged in memory; nothing touches disk until [`Outputs::commit`].
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes every staged file and then the manifest, each via a temp file
    /// in the destination directory renamed into place.
    pub fn commit(
        self,
        manifest_path: &Path,
        stage: &str,
        params: &Value,
        inputs: Inputs,
    ) -> CliResult<Manifest> {
        let mut seen = std::collections::BTreeSet::new();
        for (p, _) in &self.files {
            if !seen.insert(p.clone()) {
                return Err(CliError::usage(format!(
                    "output {} would be written twice",
                    p.display()
                )));
            }
        }
        let outputs = self
            .files
            .iter()
            .map(|(p, b)| FileDigest {
                name: file_name(p),
                sha256: sha256_hex(b),
            })
            .collect();
        let manifest = Manifest::new(stage, params.clone(), inputs.seen, outputs);
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        write_atomic(manifest_path, &text)?;
        Ok(manifest)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// `sha256` of the canonical `{"params": .., "stage": ..}` JSON. Object keys
/// are sorted, so field order never affects the hash.
pub fn config_hash(stage: &str, params: &Value) -> String {
    let doc = serde_json::json!({ "stage": stage, "params": params });
    sha256_hex(&serde_json::to_vec(&doc).expect("JSON value serializes"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub params: Value,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    fn new(stage: &str, params: Value, inputs: Vec<FileDigest>, outputs: Vec<FileDigest>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            stage: stage.into(),
            config_hash: config_hash(stage, &params),
            params,
            inputs,
            outputs,
        }
    }
}

/// Appends `.manifest.json` to a file path.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
