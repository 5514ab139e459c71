//! Run reports: named metrics with bounds and pass flags, a JSON summary and
//! schema-tagged CSV tables with deterministic formatting.

use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// The bound the value is checked against; the direction is encoded in
    /// `pass`, the bound is reported for the tables.
    pub bound: f64,
    pub pass: bool,
}

impl Metric {
    /// value <= bound
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// value >= bound
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Metric {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            bound: 1.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub parameters: Vec<(String, String)>,
    pub metrics: Vec<Metric>,
    pub overall_pass: bool,
    pub wall_time_seconds: f64,
    /// Module error text when a computation failed mid-run.
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(experiment: &str, parameters: Vec<(String, String)>, metrics: Vec<Metric>) -> Self {
        let overall_pass = metrics.iter().all(|m| m.pass);
        RunReport {
            experiment: experiment.to_string(),
            parameters,
            metrics,
            overall_pass,
            wall_time_seconds: 0.0,
            error: None,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serialising report: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

/// A CSV table with a `#schema=` comment line; rows are sorted by the caller
/// before writing so output is byte-identical across thread counts.
pub struct CsvTable {
    schema: String,
    header: String,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        CsvTable {
            schema: schema.to_string(),
            header: columns.join(","),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        self.rows.push(cells.join(","));
    }

    pub fn sort(&mut self) {
        self.rows.sort();
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = format!("#schema={}\n{}\n", self.schema, self.header);
        for r in &self.rows {
            text.push_str(r);
            text.push('\n');
        }
        std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

/// Deterministic float formatting for CSV cells.
pub fn fnum(x: f64) -> String {
    format!("{x:.12e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_conjunction() {
        let r = RunReport::new(
            "x",
            vec![],
            vec![Metric::at_most("a", 1.0, 2.0), Metric::at_least("b", 1.0, 2.0)],
        );
        assert!(!r.overall_pass);
        let r2 = RunReport::new("x", vec![], vec![Metric::at_most("a", 1.0, 2.0)]);
        assert!(r2.overall_pass);
    }
}
