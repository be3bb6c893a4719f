use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

/// Audit record written next to every command's outputs.
pub struct Manifest {
    command: &'static str,
    base: PathBuf,
    inputs: Map<String, Value>,
    parameters: Map<String, Value>,
    outputs: Vec<String>,
    skipped: Vec<Value>,
    extra: Map<String, Value>,
}

impl Manifest {
    /// Output paths are recorded relative to `base` when they lie under it.
    pub fn new(command: &'static str, base: &Path) -> Manifest {
        Manifest {
            command,
            base: base.to_path_buf(),
            inputs: Map::new(),
            parameters: Map::new(),
            outputs: Vec::new(),
            skipped: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), Value::String(path.display().to_string()));
    }

    pub fn param(&mut self, name: &str, v: impl Into<Value>) {
        self.parameters.insert(name.into(), v.into());
    }

    pub fn output(&mut self, path: &Path) {
        let shown = path.strip_prefix(&self.base).unwrap_or(path);
        self.outputs.push(shown.display().to_string());
    }

    pub fn skip(&mut self, id: &str, reason: impl std::fmt::Display) {
        log::warn!("skipped {id}: {reason}");
        self.skipped.push(json!({ "id": id, "reason": reason.to_string() }));
    }

    pub fn extra(&mut self, key: &str, v: Value) {
        self.extra.insert(key.into(), v);
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert(
            "versions".into(),
            json!({ "lod1-cli": env!("CARGO_PKG_VERSION"), "lod1-core": lod1::VERSION }),
        );
        m.insert("inputs".into(), Value::Object(self.inputs.clone()));
        m.insert("parameters".into(), Value::Object(self.parameters.clone()));
        m.insert("outputs".into(), json!(self.outputs));
        m.insert("skipped".into(), json!(self.skipped));
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.to_json())?;
        s.push('\n');
        std::fs::write(path, s).with_context(|| format!("writing manifest {}", path.display()))
    }
}

/// `dsm.asc` gets `dsm.asc.manifest.json` in the same directory.
pub fn beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
