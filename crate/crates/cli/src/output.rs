use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use msd::dynamics::TimeSeries;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// Environment variable naming the directory for outputs without `-o`.
pub const OUTPUT_DIR_VAR: &str = "MSD_OUTPUT_DIR";

/// `-o` if given, else `default_name` inside `$MSD_OUTPUT_DIR` (or the working directory).
pub fn resolve(output: Option<&Path>, default_name: &str) -> PathBuf {
    match output {
        Some(p) => p.to_path_buf(),
        None => {
            std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")).join(default_name)
        }
    }
}

/// `path` with its extension replaced by `suffix` (e.g. `.report.txt`).
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn provenance(config: &RunConfig) -> Value {
    json!({ "tool": "msd", "version": msd::VERSION, "config": config })
}

/// Writes `{"provenance": ..., key: payload}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, config: &RunConfig, key: &str, payload: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut doc = serde_json::Map::new();
    doc.insert("provenance".into(), provenance(config));
    doc.insert(key.into(), serde_json::to_value(payload)?);
    fs::write(path, serde_json::to_string_pretty(&Value::Object(doc))? + "\n")?;
    Ok(())
}

/// Writes a series as CSV plus a `<file>.meta.json` sidecar naming the columns.
pub fn write_series(path: &Path, config: &RunConfig, series: &TimeSeries, columns: &[String]) -> Result<(), CliError> {
    ensure_parent(path)?;
    series.write_csv(BufWriter::new(fs::File::create(path)?))?;
    write_sidecar(path, config, columns)
}

pub fn write_sidecar(path: &Path, config: &RunConfig, columns: &[String]) -> Result<(), CliError> {
    let meta = json!({ "provenance": provenance(config), "columns": columns });
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    fs::write(PathBuf::from(name), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}
