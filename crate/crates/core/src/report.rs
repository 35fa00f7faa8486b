//! Deterministic report output: RFC-4180 CSV tables and JSON run manifests.
//!
//! Floats are written with the shortest round-trip representation, so the
//! same rows always give the same bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Serializes `rows` as CSV with a header line and CRLF record terminators.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never sees a half-written report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Which side of the tolerance a value must fall on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl CheckOutcome {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome { name: name.into(), passed: value <= tolerance, value, tolerance, bound: Bound::AtMost }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome { name: name.into(), passed: value >= tolerance, value, tolerance, bound: Bound::AtLeast }
    }
}

/// Run summary written next to the CSV report. Field order here is the key
/// order in the output; the config echo is a `serde_json::Value`, whose maps
/// are sorted.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, checks: Vec<CheckOutcome>, wall_clock_seconds: f64) -> Self {
        Manifest {
            tool: "multitime".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            wall_clock_seconds,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        eps: f64,
        label: String,
    }

    #[test]
    fn csv_is_rfc4180() {
        let rows = vec![Row { eps: 0.1, label: "plain".into() }, Row { eps: 1e-7, label: "a \"quoted\", value".into() }];
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert_eq!(text, "eps,label\r\n0.1,plain\r\n1e-7,\"a \"\"quoted\"\", value\"\r\n");
    }

    #[test]
    fn empty_check_list_passes() {
        let m = Manifest::new("born", serde_json::json!({"b": 1, "a": 2}), vec![], 0.0);
        assert!(m.passed);
        let s = String::from_utf8(m.to_json().unwrap()).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"tool\"").unwrap() < s.find("\"checks\"").unwrap());
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = std::env::temp_dir().join(format!("mt-report-{}", std::process::id()));
        let p = dir.join("nested/out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
        fs::remove_dir_all(dir).unwrap();
    }
}
