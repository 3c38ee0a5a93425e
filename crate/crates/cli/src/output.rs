use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use wavelab_core::WaveError;

use crate::config::Format;

pub type Record = Map<String, Value>;

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => i.to_string(),
            _ => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten_into(prefix: &str, v: Value, out: &mut Record) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k } else { format!("{prefix}_{k}") };
                flatten_into(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.into_iter().enumerate() {
                flatten_into(&format!("{prefix}_{i}"), v, out);
            }
        }
        leaf => {
            out.insert(prefix.to_string(), leaf);
        }
    }
}

/// Serializes `value` and flattens nested objects and arrays into `parent_child` keys.
pub fn flat<T: Serialize>(value: &T) -> Record {
    let mut out = Record::new();
    flatten_into("", serde_json::to_value(value).expect("plain data serializes"), &mut out);
    out
}

pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> WaveError {
    WaveError::InvalidInput { detail: format!("cannot write {}: {e}", path.display()) }
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: PathBuf, format: Format) -> Result<Self, WaveError> {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir, format })
    }

    fn path(&self, stem: &str) -> PathBuf {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.dir.join(format!("{stem}.{ext}"))
    }

    /// A single flat record: one JSON object, or a header and one row.
    pub fn record(&self, stem: &str, rec: &Record) -> Result<PathBuf, WaveError> {
        let cols: Vec<String> = rec.keys().cloned().collect();
        self.write(stem, &cols, std::slice::from_ref(rec), true)
    }

    /// Rows sharing the columns `cols`; missing keys become empty cells or nulls.
    pub fn table(&self, stem: &str, cols: &[String], rows: &[Record]) -> Result<PathBuf, WaveError> {
        self.write(stem, cols, rows, false)
    }

    fn write(&self, stem: &str, cols: &[String], rows: &[Record], single: bool) -> Result<PathBuf, WaveError> {
        let path = self.path(stem);
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
                w.write_record(cols).map_err(|e| io_err(&path, e))?;
                for r in rows {
                    let line: Vec<String> = cols.iter().map(|c| r.get(c).map(cell).unwrap_or_default()).collect();
                    w.write_record(&line).map_err(|e| io_err(&path, e))?;
                }
                w.flush().map_err(|e| io_err(&path, e))?;
            }
            Format::Json => {
                let body = if single {
                    Value::Object(rows[0].clone())
                } else {
                    Value::Array(
                        rows.iter()
                            .map(|r| {
                                Value::Object(
                                    cols.iter()
                                        .map(|c| (c.clone(), r.get(c).cloned().unwrap_or(Value::Null)))
                                        .collect(),
                                )
                            })
                            .collect(),
                    )
                };
                let text = serde_json::to_string_pretty(&body).expect("json values serialize") + "\n";
                fs::write(&path, text).map_err(|e| io_err(&path, e))?;
            }
        }
        Ok(path)
    }

    /// Run metadata kept apart from the data files so those stay byte-identical.
    pub fn meta(&self, command: &str, files: &[PathBuf]) -> Result<(), WaveError> {
        let stamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or_default();
        let names: Vec<Value> = files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| Value::String(n.to_string_lossy().into_owned()))
            .collect();
        let meta = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": stamp,
            "files": names,
        });
        let path = self.dir.join(format!("{command}.meta.json"));
        fs::write(&path, serde_json::to_string_pretty(&meta).expect("json values serialize") + "\n")
            .map_err(|e| io_err(&path, e))
    }
}
