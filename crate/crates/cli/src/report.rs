//! Report schema shared by every subcommand.
//!
//! JSON: `{version, config, checks: [{id, value, tolerance, pass, details}],
//! series: [{name, columns, rows}]}`. CSV flattens one series per file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    /// Measured value (`null` when undefined).
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub details: Value,
}

impl Check {
    pub fn new(id: impl Into<String>, value: Option<f64>, tolerance: Option<f64>, pass: bool) -> Self {
        Self {
            id: id.into(),
            value: value.filter(|v| v.is_finite()),
            tolerance,
            pass,
            details: Value::Null,
        }
    }

    /// `value ≤ tolerance`.
    pub fn at_most(id: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(id, Some(value), Some(tolerance), value <= tolerance)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    /// `NaN` marks a missing entry (`null` in JSON, empty in CSV).
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| if v.is_finite() { format!("{v:e}") } else { String::new() })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn checks_csv(&self) -> String {
        let mut out = String::from("id,value,tolerance,pass\n");
        for c in &self.checks {
            let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", c.id, f(c.value), f(c.tolerance), c.pass));
        }
        out
    }

    /// Write JSON to `path` (stdout when `None`).
    pub fn write_json(&self, path: Option<&Path>) -> std::io::Result<()> {
        emit(path, &self.to_json())
    }

    /// Write the first series to `path` (stdout when `None`); with a path,
    /// every further series and the check table go to `<stem>_<name>.csv`
    /// beside it.
    pub fn write_csv(&self, path: Option<&Path>) -> std::io::Result<()> {
        let primary = self.series.first().map(Series::to_csv).unwrap_or_else(|| self.checks_csv());
        emit(path, &primary)?;
        if let Some(path) = path {
            for s in self.series.iter().skip(1) {
                emit(Some(&sibling(path, &s.name)), &s.to_csv())?;
            }
            if !self.series.is_empty() {
                emit(Some(&sibling(path, "checks")), &self.checks_csv())?;
            }
        }
        Ok(())
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}_{name}.csv"))
}

fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let mut s = Series::new("x", &["a", "b"]);
        s.push(vec![1.5, f64::NAN]);
        assert_eq!(s.to_csv(), "a,b\n1.5e0,\n");
    }

    #[test]
    fn json_has_the_four_sections() {
        let r = Report {
            version: "0".into(),
            config: Value::Null,
            checks: vec![Check::at_most("c", 0.5, 1.0)],
            series: vec![],
        };
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["version", "config", "checks", "series"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["checks"][0]["pass"], Value::Bool(true));
        assert!(r.all_pass());
    }

    #[test]
    fn non_finite_values_become_null() {
        let c = Check::new("c", Some(f64::INFINITY), None, false);
        assert!(c.value.is_none());
    }
}
