//! Run manifests: what was run, with which settings, on which bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::settings::Settings;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    /// Hex SHA-256 of the file contents; absent for files that carry timings.
    pub sha256: Option<String>,
    pub volatile: bool,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub checkpoint_format: &'static str,
    pub seed: u64,
    pub settings: Settings,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Collects the files a command reads and writes, then emits the manifest.
pub struct Recorder {
    out_dir: PathBuf,
    command: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<(String, bool)>,
}

impl Recorder {
    pub fn new(command: &str, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))
            .map_err(crate::OutputError::wrap)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            command: command.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(crate::OutputError::wrap)?;
        self.outputs.push((name.to_string(), false));
        Ok(path)
    }

    /// Like [`Recorder::write`] but the file is listed without a digest.
    pub fn write_volatile(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.write(name, contents)?;
        self.outputs.last_mut().expect("just pushed").1 = true;
        Ok(path)
    }

    /// Records a file some other routine already wrote into the directory.
    pub fn written(&mut self, name: &str) {
        self.outputs.push((name.to_string(), false));
    }

    pub fn finish(self, settings: &Settings) -> Result<RunManifest> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: Some(digest_file(p)?),
                    volatile: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut outputs = self
            .outputs
            .iter()
            .map(|(name, volatile)| {
                Ok(FileDigest {
                    path: name.clone(),
                    sha256: if *volatile {
                        None
                    } else {
                        Some(digest_file(&self.out_dir.join(name))?)
                    },
                    volatile: *volatile,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            checkpoint_format: dvgsn::training::CHECKPOINT_VERSION,
            seed: settings.seed,
            settings: settings.clone(),
            inputs,
            outputs,
        };
        let path = self.out_dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(crate::OutputError::wrap)?;
        Ok(manifest)
    }
}
