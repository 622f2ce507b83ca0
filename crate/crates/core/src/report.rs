//! Machine-readable reports shared by the CLI and the bindings.
//!
//! A report is a table (`columns`, `rows`) plus a list of named checks and
//! an overall `pass`. CSV prints floats with 17 significant digits.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::numeric::fmt17;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt17(*x),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// One verified quantity: `value` compared with `target` at `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// |value − target| ≤ tolerance·|target|.
    pub fn relative(
        suite: &str,
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
    ) -> Self {
        let pass = (value - target).abs() <= tolerance * target.abs();
        Self::new(suite, name, value, target, tolerance, pass, String::new())
    }

    /// |value − target| ≤ tolerance.
    pub fn absolute(
        suite: &str,
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
    ) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Self::new(suite, name, value, target, tolerance, pass, String::new())
    }

    /// value ≤ bound, for nonnegative error measures: reported as target 0
    /// with the bound as tolerance.
    pub fn at_most(suite: &str, name: impl Into<String>, value: f64, bound: f64) -> Self {
        let pass = value <= bound;
        Self::new(suite, name, value, 0.0, bound, pass, String::new())
    }

    pub fn new(
        suite: &str,
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
        pass: bool,
        detail: String,
    ) -> Self {
        Check {
            suite: suite.to_string(),
            name: name.into(),
            value,
            target,
            tolerance,
            pass,
            detail,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(suite: &str, name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::new(suite, name, f64::NAN, f64::NAN, 0.0, false, detail.into())
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: impl Into<String>, params: Map<String, Value>, columns: &[&str]) -> Self {
        Report {
            command: command.into(),
            params,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    /// Rows as CSV; checks follow after a blank line as a second table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        if !self.checks.is_empty() {
            writeln!(w)?;
            writeln!(w, "suite,check,value,target,tolerance,pass,detail")?;
            for c in &self.checks {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    c.suite,
                    c.name,
                    fmt17(c.value),
                    fmt17(c.target),
                    fmt17(c.tolerance),
                    if c.pass { "pass" } else { "FAIL" },
                    Cell::Text(c.detail.clone()).csv()
                )?;
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }
}
