//! Report envelopes, hashing and sinks.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use prodstate::hamiltonian::HamiltonianInstance;
use prodstate::{Result, VERSION};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn instance_hash(h: &HamiltonianInstance) -> String {
    sha256_hex(h.to_json().as_bytes())
}

/// The resolved configuration plus provenance, written with every run.
pub fn manifest(config: &RunConfig, instance_sha256: Option<&str>) -> Value {
    json!({
        "kind": "manifest",
        "command": config.subcommand.name(),
        "version": VERSION,
        "seed": config.seed,
        "policy": config.policy,
        "config": config,
        "instance_sha256": instance_sha256,
    })
}

/// Single-document report: the body with provenance fields attached.
pub fn envelope(config: &RunConfig, instance_sha256: Option<&str>, report: impl Serialize) -> Result<Value> {
    Ok(json!({
        "command": config.subcommand.name(),
        "version": VERSION,
        "seed": config.seed,
        "policy": config.policy,
        "instance_sha256": instance_sha256,
        "manifest": manifest(config, instance_sha256),
        "report": serde_json::to_value(report)?,
    }))
}

/// Output destination; buffers everything and writes on `finish`.
pub struct Sink {
    out: Option<PathBuf>,
    buffer: Vec<u8>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out, buffer: Vec::new() }
    }

    pub fn line(&mut self, value: &Value) {
        self.buffer.extend_from_slice(value.to_string().as_bytes());
        self.buffer.push(b'\n');
    }

    pub fn raw(&mut self, text: &str) {
        self.buffer.extend_from_slice(text.as_bytes());
        if !text.ends_with('\n') {
            self.buffer.push(b'\n');
        }
    }

    /// Writes the buffered output, plus `<out>.manifest.json` for file outputs.
    pub fn finish(self, manifest: &Value) -> Result<()> {
        match self.out {
            Some(path) => {
                std::fs::write(&path, &self.buffer)?;
                let mut side = path.into_os_string();
                side.push(".manifest.json");
                std::fs::write(side, format!("{}\n", serde_json::to_string_pretty(manifest)?))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&self.buffer)?;
                stdout.flush()?;
            }
        }
        Ok(())
    }
}

/// Writes rows of JSON objects as CSV. Columns are the union of keys in
/// first-seen order; nested values are written as JSON text.
pub fn write_csv(path: &Path, rows: &[Value]) -> Result<()> {
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        if let Value::Object(map) = row {
            for key in map.keys() {
                if !columns.contains(key) {
                    columns.push(key.clone());
                }
            }
        }
    }
    let mut writer = csv::Writer::from_writer(File::create(path)?);
    writer.write_record(&columns).map_err(csv_error)?;
    let empty = Map::new();
    for row in rows {
        let map = row.as_object().unwrap_or(&empty);
        let record: Vec<String> = columns
            .iter()
            .map(|c| match map.get(c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            })
            .collect();
        writer.write_record(&record).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> prodstate::Error {
    prodstate::Error::Io(std::io::Error::other(e))
}

/// Top-level scalar fields of a report, as a single CSV row.
pub fn scalar_row(report: &Value) -> Value {
    match report {
        Value::Object(map) => Value::Object(map.iter().filter(|(_, v)| !v.is_object() && !v.is_array()).map(|(k, v)| (k.clone(), v.clone())).collect()),
        other => other.clone(),
    }
}
