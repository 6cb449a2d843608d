//! Run manifests: every command's parameters, model hash and payload, and
//! the replay check.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;
use crate::failure::{Failure, Outcome};

/// Absolute tolerance (relative for magnitudes above one) on real fields.
pub const REAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Command,
    pub model_hash: String,
    pub version: String,
    pub timestamp: String,
    pub payload: Value,
}

impl RunManifest {
    pub fn new(params: Command, model_hash: String, payload: Value) -> Self {
        Self {
            command: params.name().to_string(),
            params,
            model_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn read(path: &Path) -> Outcome<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::validation(anyhow!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::parse(anyhow!("manifest {}: {e}", path.display())))
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Outcome<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::validation(anyhow!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reals are serialized as strings in exponent or decimal notation;
/// everything else (integers, rationals, labels) must match exactly.
fn as_real(s: &str) -> Option<f64> {
    let looks_real = s.contains(['e', 'E', '.']) || s.eq_ignore_ascii_case("nan") || s.contains("inf");
    looks_real.then(|| s.parse::<f64>().ok()).flatten()
}

fn reals_match(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a - b).abs() <= REAL_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// First path at which two payloads differ, if any.
pub fn first_difference(expected: &Value, actual: &Value, path: &str) -> Option<String> {
    match (expected, actual) {
        (Value::Object(a), Value::Object(b)) => {
            if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
                return Some(format!("{path}: keys differ"));
            }
            a.iter()
                .find_map(|(k, v)| first_difference(v, &b[k], &format!("{path}.{k}")))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}: length {} vs {}", a.len(), b.len()));
            }
            a.iter()
                .zip(b)
                .enumerate()
                .find_map(|(i, (x, y))| first_difference(x, y, &format!("{path}[{i}]")))
        }
        (Value::String(a), Value::String(b)) => match (as_real(a), as_real(b)) {
            (Some(x), Some(y)) if reals_match(x, y) => None,
            _ if a == b => None,
            _ => Some(format!("{path}: {a:?} vs {b:?}")),
        },
        (Value::Number(a), Value::Number(b)) => {
            if a.is_f64() || b.is_f64() {
                let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
                (!reals_match(x, y)).then(|| format!("{path}: {x} vs {y}"))
            } else {
                (a != b).then(|| format!("{path}: {a} vs {b}"))
            }
        }
        (a, b) => (a != b).then(|| format!("{path}: {a} vs {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn exact_fields_must_match() {
        let a = json!({"f": ["-1/2"], "n": 3});
        assert!(first_difference(&a, &a.clone(), "").is_none());
        assert!(first_difference(&a, &json!({"f": ["-1/3"], "n": 3}), "").is_some());
        assert!(first_difference(&a, &json!({"f": ["-1/2"], "n": 4}), "").is_some());
    }

    #[test]
    fn real_fields_within_tolerance() {
        let a = json!({"g": ["1.5e0"], "x": 0.25});
        let b = json!({"g": ["1.5000000000001e0"], "x": 0.25});
        assert!(first_difference(&a, &b, "").is_none());
        let c = json!({"g": ["1.50001e0"], "x": 0.25});
        assert_eq!(first_difference(&a, &c, "").unwrap(), ".g[0]: \"1.5e0\" vs \"1.50001e0\"");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
