use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::stats::ConsumptionStats;
use crate::error::Result;

/// One verdict in a report. `pass` is `None` when the check could not be
/// decided (for example a single replication).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: String,
    pub observed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical: Option<f64>,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_samples: Option<u64>,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(
        name: &str,
        kind: &str,
        observed: f64,
        expected: Option<f64>,
        samples: u64,
        pass: bool,
    ) -> Self {
        Self {
            name: name.to_string(),
            kind: kind.to_string(),
            observed,
            expected,
            stderr: None,
            critical: None,
            samples,
            reference_samples: None,
            pass: Some(pass),
            note: None,
        }
    }

    pub fn undecided(
        name: &str,
        kind: &str,
        observed: f64,
        expected: Option<f64>,
        samples: u64,
        note: &str,
    ) -> Self {
        Self {
            pass: None,
            note: Some(note.to_string()),
            ..Self::new(name, kind, observed, expected, samples, false)
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub command: String,
    pub seed: u64,
    pub settings: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub consumption: BTreeMap<String, ConsumptionStats>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl TestReport {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            settings: BTreeMap::new(),
            checks: Vec::new(),
            consumption: BTreeMap::new(),
            details: serde_json::Value::Null,
            notes: Vec::new(),
            pass: true,
            timestamp_unix: None,
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.refresh();
    }

    pub fn consumption(&mut self, what: &str, counts: &[u64]) {
        if let Some(stats) = ConsumptionStats::from_counts(counts) {
            self.consumption.insert(what.to_string(), stats);
        }
    }

    /// Undecided checks do not fail a report.
    pub fn refresh(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass != Some(false));
    }

    pub fn stamp(&mut self) {
        self.timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.pass == Some(false))
    }
}

/// A report plus its per-run table.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub report: TestReport,
    /// File name and CSV contents.
    pub table: Option<(String, String)>,
}

impl CommandOutput {
    /// Writes `report.json` and the table into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json()?)?;
        if let Some((name, csv)) = &self.table {
            std::fs::write(dir.join(name), csv)?;
        }
        Ok(())
    }
}

pub(crate) fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undecided_checks_do_not_fail() {
        let mut r = TestReport::new("coin", 1);
        r.push(Check::undecided(
            "f",
            "frequency",
            1.0,
            Some(0.5),
            1,
            "insufficient replications",
        ));
        assert!(r.pass);
        r.push(Check::new("g", "frequency", 0.1, Some(0.5), 100, false));
        assert!(!r.pass);
        assert_eq!(r.failed_checks().count(), 1);
    }

    #[test]
    fn timestamp_is_optional() {
        let mut r = TestReport::new("selftest", 3);
        assert!(!r.to_json().unwrap().contains("timestamp"));
        r.stamp();
        assert!(r.to_json().unwrap().contains("timestamp_unix"));
    }

    #[test]
    fn csv_rows() {
        #[derive(Serialize)]
        struct Row {
            a: u32,
            b: f64,
        }
        let s = to_csv([Row { a: 1, b: 0.5 }, Row { a: 2, b: 1.0 }]).unwrap();
        assert_eq!(s, "a,b\n1,0.5\n2,1.0\n");
    }
}
