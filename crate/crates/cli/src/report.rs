//! JSON reports and CSV tables. Every reported number is a [`Check`] that
//! carries its tolerance and verdict; inputs are echoed as strings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value - reference| <= tolerance · |reference|`
    Relative,
    /// `|value - reference| <= tolerance`
    Absolute,
    /// `value <= tolerance`
    AtMost,
    /// `value >= tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn relative(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance * reference.abs();
        Check::with(name, value, Some(reference), tolerance, Comparison::Relative, pass)
    }

    pub fn absolute(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = (value - reference).abs() <= tolerance;
        Check::with(name, value, Some(reference), tolerance, Comparison::Absolute, pass)
    }

    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check::with(name, value, None, tolerance, Comparison::AtMost, value <= tolerance)
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check::with(name, value, None, tolerance, Comparison::AtLeast, value >= tolerance)
    }

    fn with(name: &str, value: f64, reference: Option<f64>, tolerance: f64, comparison: Comparison, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            value,
            reference,
            tolerance,
            comparison,
            pass,
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let rel = match self.comparison {
            Comparison::Relative => format!("ref {:.10e}, rel tol {:e}", self.reference.unwrap_or(f64::NAN), self.tolerance),
            Comparison::Absolute => format!("ref {:.10e}, abs tol {:e}", self.reference.unwrap_or(f64::NAN), self.tolerance),
            Comparison::AtMost => format!("<= {:e}", self.tolerance),
            Comparison::AtLeast => format!(">= {:e}", self.tolerance),
        };
        format!("{verdict} {:<28} {:.10e} ({rel})", self.name, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.insert(key.to_string(), value.to_string());
    }

    pub fn check(&mut self, c: Check) {
        println!("{}", c.line());
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        let s = s.into();
        println!("note: {s}");
        self.notes.push(s);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(path, &(text + "\n"))
    }

    /// Exit status implied by the checks.
    pub fn outcome(&self) -> Result<(), CliError> {
        if self.pass {
            Ok(())
        } else {
            let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            Err(CliError::Numerical(format!("checks failed: {}", failed.join(", "))))
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes a table; all cells go through the shortest round-trip formatting.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| format_number(v))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Shortest round-trip representation, in exponent form outside `[1e-4, 1e15)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(Check::relative("a", 1.0005, 1.0, 1e-3).pass);
        assert!(!Check::relative("a", 1.01, 1.0, 1e-3).pass);
        assert!(Check::absolute("b", 0.5, 0.4, 0.2).pass);
        assert!(Check::at_most("c", 0.05, 0.1).pass);
        assert!(!Check::at_least("d", 5.0, 10.0).pass);
        assert!(!Check::at_most("nan", f64::NAN, 1.0).pass);
    }

    #[test]
    fn report_tracks_failures_and_serializes_tolerances() {
        let mut r = Report::new("t");
        r.check(Check::at_most("x", 1.0, 2.0));
        assert!(r.outcome().is_ok());
        r.check(Check::at_least("y", 1.0, 2.0));
        assert!(matches!(r.outcome(), Err(CliError::Numerical(_))));
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for c in v["checks"].as_array().unwrap() {
            assert!(c["tolerance"].is_number());
            assert!(c["pass"].is_boolean());
        }
    }

    #[test]
    fn csv_uses_comma_and_dot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a".into(), "b".into()], &[vec![0.5, -1.25e-7]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n0.5,-1.25e-7\n");
    }
}
