//! Machine-readable run reports.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

impl InputHash {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        }
    }
}

/// A named check; numeric checks carry their residual and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub tol: f64,
    pub seed: u64,
    pub inputs: Vec<InputHash>,
    pub verdicts: Vec<Verdict>,
    pub result: Value,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: &str, tol: f64, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            tol,
            seed,
            inputs: Vec::new(),
            verdicts: Vec::new(),
            result: Value::Null,
            wall_time_ms: 0.0,
        }
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool) -> bool {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed,
            residual: None,
            tol: None,
        });
        passed
    }

    /// Records `residual <= tol`.
    pub fn residual(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> bool {
        let passed = residual <= tol;
        self.verdicts.push(Verdict {
            name: name.into(),
            passed,
            residual: Some(residual),
            tol: Some(tol),
        });
        passed
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        if !self.result.is_object() {
            self.result = Value::Object(Default::default());
        }
        let v = serde_json::to_value(value).expect("report values serialize");
        self.result.as_object_mut().unwrap().insert(key.to_string(), v);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
