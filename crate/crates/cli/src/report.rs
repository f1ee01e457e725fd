use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::format::Num;

pub const SCHEMA_VERSION: u32 = 1;

pub fn build_id() -> String {
    format!("geolab {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One numerical acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Num,
    pub tolerance: Num,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        Self {
            name: name.to_string(),
            value: Num(value),
            tolerance: Num(tolerance),
            relation,
            pass,
        }
    }

    /// Passes when `value <= tolerance`; NaN fails.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, tolerance, Relation::AtMost)
    }

    /// Passes when `value >= tolerance`; NaN fails.
    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, tolerance, Relation::AtLeast)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<D: Serialize> {
    pub schema_version: u32,
    pub command: Vec<String>,
    pub build: String,
    pub data: D,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl<D: Serialize> Report<D> {
    pub fn new(command: &[String], data: D, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_vec(),
            build: build_id(),
            data,
            checks,
            pass,
        }
    }

    pub fn failing(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the report to `out`, or to stdout when no path is given, and
    /// turns failing checks into an error.
    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        match out {
            Some(path) => write_file(path, &self.to_json())?,
            None => print!("{}", self.to_json()),
        }
        let failing = self.failing();
        if failing.is_empty() {
            Ok(())
        } else {
            Err(CliError::ChecksFailed(failing))
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
