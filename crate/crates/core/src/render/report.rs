//! JSON diagnostic report. Field order is fixed by the struct definitions
//! and floats use the shortest round-trip form, so identical runs produce
//! identical bytes.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::detect::DataDiagnosis;
use crate::error::{Error, Result};
use crate::pit::PitSet;
use crate::uniformity::GofVerdict;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub role: String,
    /// File name only, so reports do not depend on the working directory.
    pub file: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(role: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            role: role.into(),
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitSummary {
    pub n: usize,
    pub randomized: bool,
    pub seed: Option<u64>,
    pub source: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl From<&PitSet> for PitSummary {
    fn from(p: &PitSet) -> Self {
        let v = &p.values;
        Self {
            n: v.len(),
            randomized: p.randomized,
            seed: p.seed,
            source: p.source.clone(),
            mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Only uniformity tests decide the exit status. Flag checks (calibration
/// bands, rootogram intervals, bar checks) are pointwise and reported as
/// counts of flagged points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Gof,
    Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub pass: bool,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pit: Option<PitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<GofVerdict>,
    /// Check-specific output: calibration points and flags, rootogram cells,
    /// overlay summaries.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, kind: CheckKind, pass: bool, config: impl Serialize) -> Self {
        Self {
            name: name.into(),
            kind,
            pass,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            pit: None,
            verdict: None,
            details: Value::Null,
        }
    }

    pub fn with_gof(mut self, pits: &PitSet, verdict: GofVerdict) -> Self {
        self.pit = Some(pits.into());
        self.verdict = Some(verdict);
        self
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).unwrap_or(Value::Null);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<DataDiagnosis>,
    pub checks: Vec<CheckRecord>,
    pub recommendation: Option<String>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl DiagnosticReport {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            inputs: Vec::new(),
            diagnosis: None,
            checks: Vec::new(),
            recommendation: None,
            warnings: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        if check.kind == CheckKind::Gof {
            self.pass &= check.pass;
        }
        self.checks.push(check);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
