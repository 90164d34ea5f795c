//! Artifact writing. Every file carries the resolved configuration that
//! produced it: JSON files under a `header` key, CSV files as a leading
//! `# {json}` comment line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliResult, Context};

/// Provenance block shared by all artifacts of one command.
#[derive(Debug, Clone)]
pub struct Header(pub Value);

impl Header {
    pub fn new(command: &str, config: &impl Serialize) -> CliResult<Self> {
        Ok(Self(json!({
            "tool": "stagewise",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": serde_json::to_value(config)?,
        })))
    }

    /// Adds `key` to the header.
    pub fn with(mut self, key: &str, value: impl Serialize) -> CliResult<Self> {
        self.0[key] = serde_json::to_value(value)?;
        Ok(self)
    }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;
        Ok(Self(dir.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    /// Writes `{"header": …, key: body}` as pretty JSON.
    pub fn json(&self, name: &str, header: &Header, key: &str, body: &impl Serialize) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut doc = serde_json::Map::new();
        doc.insert("header".into(), header.0.clone());
        doc.insert(key.into(), serde_json::to_value(body)?);
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &Value::Object(doc))?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    /// Opens a CSV file and writes the header comment line.
    pub fn csv(&self, name: &str, header: &Header) -> CliResult<(PathBuf, BufWriter<File>)> {
        let path = self.path(name);
        let w = csv_writer(&path, header)?;
        Ok((path, w))
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).context(format!("creating {}", path.display()))?))
}

/// New file at `path` starting with the `# {json}` header line.
pub fn csv_writer(path: &Path, header: &Header) -> CliResult<BufWriter<File>> {
    let mut w = create(path)?;
    writeln!(w, "# {}", serde_json::to_string(&header.0)?)?;
    Ok(w)
}

/// Reads the `key` entry of an artifact written by [`OutDir::json`].
pub fn read_json<T: DeserializeOwned>(path: &Path, key: &str) -> CliResult<(Value, T)> {
    let text = fs::read_to_string(path).context(format!("reading {}", path.display()))?;
    let mut doc: Value = serde_json::from_str(&text).context(path.display())?;
    let body = doc
        .get_mut(key)
        .map(Value::take)
        .ok_or_else(|| crate::error::CliError::input(format!("{}: no `{key}` entry", path.display())))?;
    let header = doc.get("header").cloned().unwrap_or(Value::Null);
    Ok((header, serde_json::from_value(body).context(path.display())?))
}

/// Parses a JSON config file, or the type's default when no file is given.
pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).context(format!("reading {}", p.display()))?;
            serde_json::from_str(&text).context(format!("config {}", p.display()))
        }
    }
}
