//! Machine-readable run reports: one JSON document plus CSV tables.

use crate::checks::CheckOutcome;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Serializes non-finite floats as `null` and reads `null` back as NaN, so
/// failed checks still produce valid JSON.
pub mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Grid actually used by one ladder rung.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RungInfo {
    pub k: i32,
    pub epsilon: f64,
    pub n: usize,
    pub columns: usize,
}

/// Identifies what produced a report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct Manifest {
    pub name: String,
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub k: Vec<i32>,
    pub base_n: usize,
    pub oracle_n: usize,
    pub rungs: Vec<RungInfo>,
}

/// A numeric table written as CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`Table::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| crate::Error::Config(format!("bad number '{s}': {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        Ok(Self { name, headers, rows })
    }
}

/// Scalar result of a pipeline stage.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub name: String,
    #[serde(with = "nan_as_null")]
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct Report {
    pub manifest: Manifest,
    pub checks: Vec<CheckOutcome>,
    pub summaries: Vec<Summary>,
    /// Tables written next to the report; rows live in the CSV files.
    pub tables: Vec<Table>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&mut self, name: impl Into<String>, value: f64) {
        self.summaries.push(Summary { name: name.into(), value });
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Writes `report.json` and one CSV per table into `dir`, creating it if
/// needed. Returns the paths written, report first.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json()?)?;
    let mut out = vec![path];
    for t in &report.tables {
        let p = dir.join(t.file_name());
        t.write_csv(&p)?;
        out.push(p);
    }
    Ok(out)
}
