use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(Error::InvalidArgument(format!("unknown report format '{other}'"))),
        }
    }
}

/// Versioned envelope around a result object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub kind: String,
    pub seed: Option<u64>,
    pub result: T,
}

impl<T> Report<T> {
    pub fn new(kind: impl Into<String>, seed: Option<u64>, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
            seed,
            result,
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                let _ = writeln!(out, "{prefix} = []");
            }
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::Null => {
            let _ = writeln!(out, "{prefix} = n/a");
        }
        other => {
            let _ = writeln!(out, "{prefix} = {other}");
        }
    }
}

/// One `path = value` line per leaf, keys in sorted order.
pub fn render_text<T: Serialize>(report: &Report<T>) -> Result<String> {
    let value = serde_json::to_value(report)?;
    let mut out = String::new();
    flatten("", &value, &mut out);
    Ok(out)
}

pub fn write_report<T: Serialize>(report: &Report<T>, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Text => render_text(report)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a JSON report, rejecting other schema versions.
pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<Report<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)?;
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(serde_json::from_value(value)?),
        other => Err(Error::InvalidArgument(format!(
            "{}: unsupported schema_version {other:?}",
            path.display()
        ))),
    }
}
