//! Artifact plumbing: stamped JSON manifests and CSV report tables.
//!
//! Every file a command writes carries the run's config hash and seed —
//! JSON artifacts as top-level fields, CSV tables as a leading
//! `# config_hash=… seed=…` comment line. Commands read their
//! prerequisites through [`Ctx::read_json`], which refuses artifacts
//! stamped by a different configuration, so a half-updated output
//! directory can never silently mix runs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lfurisk_core::{Error, Result};

use crate::config::RunConfig;

/// A stamped JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub config_hash: String,
    pub seed: u64,
    pub payload: T,
}

/// Execution context shared by every command: the resolved configuration,
/// its hash, and the output directory.
pub struct Ctx {
    pub config: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Ctx {
    /// Validate the configuration, create the output directory, and write
    /// the resolved semantic config as `run.config.json`.
    pub fn new(config: RunConfig) -> Result<Ctx> {
        config.validate()?;
        let out = PathBuf::from(config.out.as_deref().unwrap_or("lfurisk-out"));
        std::fs::create_dir_all(&out)?;
        let ctx = Ctx { hash: config.config_hash(), config, out };
        let semantic = ctx.config.semantic();
        ctx.write_json("run.config.json", &semantic)?;
        Ok(ctx)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// The stamp comment carried by CSV outputs.
    pub fn stamp_comment(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.config.seed)
    }

    /// Write a stamped, pretty-printed JSON artifact.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> Result<PathBuf> {
        let artifact = Artifact {
            config_hash: self.hash.clone(),
            seed: self.config.seed,
            payload,
        };
        let mut json = serde_json::to_string_pretty(&artifact)?;
        json.push('\n');
        let path = self.path(name);
        std::fs::write(&path, json)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Read a stamped JSON artifact, refusing stamps from another
    /// configuration and translating a missing file into a
    /// missing-prerequisite error.
    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let path = self.path(name);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::config(format!(
                    "missing prerequisite `{}`: run `lfurisk {}` first",
                    path.display(),
                    name.split('.').next().unwrap_or(name)
                )))
            }
            Err(e) => return Err(e.into()),
        };
        let artifact: Artifact<T> = serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("artifact `{}`: {e}", path.display())))?;
        if artifact.config_hash != self.hash {
            return Err(Error::config(format!(
                "artifact `{}` was produced by config {} but the current config is {}; \
                 re-run the earlier command under this configuration",
                path.display(),
                &artifact.config_hash[..12],
                &self.hash[..12]
            )));
        }
        Ok(artifact.payload)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    /// Open a stamped CSV report table.
    pub fn table(&self, name: &str, header: &[&str]) -> Result<Table> {
        Table::create(&self.path(name), &self.stamp_comment(), header)
    }
}

/// Writer for one CSV report table: stamp comment, header row, data rows.
pub struct Table {
    writer: csv::Writer<File>,
    path: PathBuf,
    width: usize,
}

impl Table {
    fn create(path: &Path, stamp: &str, header: &[&str]) -> Result<Table> {
        let mut file = File::create(path)?;
        writeln!(file, "# {stamp}")?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Table { writer, path: path.to_path_buf(), width: header.len() })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        if cells.len() != self.width {
            return Err(Error::internal(format!(
                "table `{}`: row has {} cells, header has {}",
                self.path.display(),
                cells.len(),
                self.width
            )));
        }
        self.writer.write_record(cells)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        log::info!("wrote {}", self.path.display());
        Ok(())
    }
}

/// Render an optional statistic; absent values become empty CSV cells.
pub fn cell_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Lowercase-alphanumeric file-name slug for a column name.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else {
            out.push('_');
        }
    }
    out
}
