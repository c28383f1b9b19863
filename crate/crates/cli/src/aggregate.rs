//! `report`: merges JSON reports written by earlier runs.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub json: Value,
    pub total: u64,
    pub failed: u64,
}

fn count(v: &Value, key: &str) -> u64 {
    v.get("summary").and_then(|s| s.get(key)).and_then(Value::as_u64).unwrap_or(0)
}

pub fn aggregate(files: &[PathBuf]) -> CliResult<Aggregate> {
    let mut sources = Vec::new();
    let mut failing = Vec::new();
    let (mut total, mut passed, mut failed) = (0, 0, 0);
    for path in files {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let checks = v
            .get("checks")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::Config(format!("{}: not a verification report", path.display())))?;
        for c in checks {
            if c.get("passed") != Some(&Value::Bool(true)) {
                failing.push(json!({
                    "source": path.display().to_string(),
                    "name": c.get("name"),
                    "rel_err": c.get("rel_err"),
                    "tol": c.get("tol"),
                }));
            }
        }
        total += count(&v, "total");
        passed += count(&v, "passed");
        failed += count(&v, "failed");
        sources.push(json!({
            "source": path.display().to_string(),
            "norm": v.get("norm"),
            "solution": v.get("solution"),
            "summary": v.get("summary"),
        }));
    }
    Ok(Aggregate {
        json: json!({
            "reports": sources,
            "failed_checks": failing,
            "summary": {"total": total, "passed": passed, "failed": failed},
        }),
        total,
        failed,
    })
}
