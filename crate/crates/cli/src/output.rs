//! Output plumbing. Every artifact carries the effective configuration:
//! JSON files embed it under `meta`; CSV and JSON-lines files get a
//! `<file>.meta.json` companion so they stay plain tabular data.
//! No timestamps are written, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub inputs: BTreeMap<&'static str, String>,
}

impl Meta {
    pub fn new(command: &'static str, config: &impl Serialize) -> Result<Self> {
        Ok(Meta {
            tool: "pplab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
        })
    }

    pub fn input(mut self, name: &'static str, path: &Path) -> Self {
        self.inputs.insert(name, path.display().to_string());
        self
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// `{"meta": ..., <payload fields>}` pretty-printed.
pub fn write_json(path: &Path, meta: &Meta, payload: &impl Serialize) -> Result<()> {
    let mut value = serde_json::to_value(payload)?;
    let obj = value.as_object_mut().context("payload must serialise to an object")?;
    obj.insert("meta".into(), serde_json::to_value(meta)?);
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes a tabular file through `body`, then its companion meta file.
pub fn write_with_meta(path: &Path, meta: &Meta, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush()?;
    write_json(&meta_path(path), meta, &serde_json::json!({}))
}
