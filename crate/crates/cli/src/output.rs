//! Run directories that appear all at once.
//!
//! Files are written into a hidden sibling temp directory; the manifest goes
//! in last and the directory is then renamed into place. A crash leaves the
//! temp directory behind but never a manifest at the final path.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;

pub const OUTPUT_ROOT_ENV: &str = "DICKENET_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";
pub const MANIFEST: &str = "manifest.toml";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// `<root>/<output_dir or name>/<leaf>`.
pub fn run_dir(root: &Path, config: &ScenarioConfig, leaf: &str) -> PathBuf {
    let base = config.output_dir.clone().unwrap_or_else(|| config.name.clone());
    root.join(base).join(leaf)
}

/// First 16 hex digits of SHA-256 over the command, extra arguments and the
/// canonical config text.
pub fn parameter_hash(command: &str, config: &ScenarioConfig, extra: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(extra.as_bytes());
    h.update(b"\n");
    h.update(config.to_toml().as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEcho {
    pub param: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub param_hash: String,
    pub duration_seconds: f64,
    pub files: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub summary: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanEcho>,
    pub config: ScenarioConfig,
}

pub struct RunWriter {
    final_dir: PathBuf,
    tmp: tempfile::TempDir,
    header: String,
    files: Vec<String>,
}

impl RunWriter {
    /// `header` becomes the comment line opening every CSV file.
    pub fn create(final_dir: PathBuf, header: String) -> io::Result<Self> {
        let parent = final_dir.parent().unwrap_or(Path::new(".")).to_path_buf();
        fs::create_dir_all(&parent)?;
        let leaf = final_dir.file_name().and_then(|s| s.to_str()).unwrap_or("run");
        let tmp = tempfile::Builder::new().prefix(&format!(".{leaf}.tmp-")).tempdir_in(&parent)?;
        Ok(Self { final_dir, tmp, header, files: Vec::new() })
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> io::Result<()> {
        fs::write(self.tmp.path().join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, columns: &[&str], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut out = format!("# {}\n{}\n", self.header, columns.join(","));
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_text(name, &out)
    }

    /// Writes the manifest and moves the directory into place, replacing a
    /// previous run at the same path.
    pub fn commit(mut self, manifest: &mut RunManifest) -> io::Result<PathBuf> {
        manifest.files = std::mem::take(&mut self.files);
        let text = toml::to_string(&*manifest).map_err(io::Error::other)?;
        fs::write(self.tmp.path().join(MANIFEST), text)?;
        let staged = self.tmp.keep();
        if self.final_dir.exists() {
            let parent = self.final_dir.parent().unwrap_or(Path::new("."));
            let old = tempfile::Builder::new().prefix(".old-").tempdir_in(parent)?.keep();
            fs::rename(&self.final_dir, old.join("run"))?;
            fs::rename(&staged, &self.final_dir)?;
            fs::remove_dir_all(old)?;
        } else {
            fs::rename(&staged, &self.final_dir)?;
        }
        Ok(self.final_dir)
    }
}
