//! Flat key-value configuration documents.
//!
//! A document is TOML with one `key = number` line per [`NetworkConfig`]
//! field. Omitted keys keep their defaults. Every problem is reported, not
//! just the first.

use toml::{Table, Value};

use crate::config::{NetworkConfig, FIELD_NAMES};
use crate::error::{Error, Result};

/// Parse and range-check a configuration document.
pub fn validate_config(raw: &str) -> Result<NetworkConfig> {
    let table: Table = raw.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
    config_from_table(&table, NetworkConfig::default())
}

/// Apply the entries of `table` on top of `base` and range-check the result.
pub fn config_from_table(table: &Table, base: NetworkConfig) -> Result<NetworkConfig> {
    let mut cfg = base;
    let mut errs = Vec::new();
    for (key, value) in table {
        if !FIELD_NAMES.contains(&key.as_str()) {
            errs.push(format!("unknown key `{key}`"));
            continue;
        }
        match number(value) {
            Some(v) => {
                if let Err(e) = cfg.set_field(key, v) {
                    errs.push(format!("{key}: {}", describe(e)));
                }
            }
            None => errs.push(format!("{key}: expected a number, got {}", value.type_str())),
        }
    }
    errs.extend(cfg.violations());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

/// Render `cfg` as a document that [`validate_config`] reads back exactly.
pub fn render_config(cfg: &NetworkConfig) -> String {
    cfg.echo()
        .into_iter()
        .map(|(k, v)| format!("{k} = {}\n", toml_number(&v)))
        .collect()
}

/// TOML needs a digit around the decimal point and no bare `inf`.
fn toml_number(v: &str) -> String {
    if v.contains(['.', 'e', 'E']) || v.parse::<i64>().is_err() {
        v.to_string()
    } else {
        format!("{v}.0")
    }
}

pub(crate) fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn describe(e: Error) -> String {
    match e {
        Error::InvalidParameter { reason, .. } => reason,
        Error::Config(v) => v.join("; "),
        other => other.to_string(),
    }
}
