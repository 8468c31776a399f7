//! CSV series, JSON reports and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// File name of the JSON report written next to every series file.
pub const REPORT_FILE: &str = "report.json";

/// One CSV column.
#[derive(Clone, Debug)]
pub enum Column {
    Num(Vec<f64>),
    Count(Vec<u64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Num(v) => v.len(),
            Column::Count(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            Column::Num(v) => format!("{:.15e}", v[i]),
            Column::Count(v) => v[i].to_string(),
            Column::Text(v) => v[i].clone(),
        }
    }
}

/// A named CSV file with a fixed header; `time` is always the first column.
#[derive(Clone, Debug)]
pub struct Table {
    pub file: String,
    header: Vec<String>,
    columns: Vec<Column>,
}

impl Table {
    pub fn new(file: &str, time: Vec<f64>) -> Self {
        Self {
            file: file.to_string(),
            header: vec!["time".to_string()],
            columns: vec![Column::Num(time)],
        }
    }

    /// Appends a column; panics if its length differs from the time column.
    pub fn with(mut self, name: &str, column: Column) -> Self {
        assert_eq!(column.len(), self.columns[0].len(), "column {name} has the wrong length");
        self.header.push(name.to_string());
        self.columns.push(column);
        self
    }

    pub fn num(self, name: &str, values: Vec<f64>) -> Self {
        self.with(name, Column::Num(values))
    }

    fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for i in 0..self.columns[0].len() {
            w.write_record(self.columns.iter().map(|c| c.cell(i)))?;
        }
        let mut file = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        writeln!(file, "# manifest: {REPORT_FILE}").map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Fully resolved parameters, frequencies in angular units.
    pub params: Value,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

/// Top-level layout of `report.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub manifest: Manifest,
    /// Arguments as given on the command line.
    pub inputs: Value,
    pub series_files: Vec<String>,
    pub results: Value,
    pub bounds: Value,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Outcome of a subcommand before it is written to disk.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub results: Value,
    pub bounds: Value,
    pub diagnostics: Vec<String>,
}

/// Writes every table and the report into `dir`; returns the written paths.
pub fn write_run(dir: &Path, manifest: Manifest, inputs: Value, run: RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();
    for t in &run.tables {
        let path = dir.join(&t.file);
        t.write(&path)?;
        written.push(path);
    }
    let report = Report {
        manifest,
        inputs,
        series_files: run.tables.iter().map(|t| t.file.clone()).collect(),
        results: run.results,
        bounds: run.bounds,
        diagnostics: run.diagnostics,
    };
    let path = dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::new("s.csv", vec![0.0, 0.5])
            .num("p", vec![1.0, f64::NAN])
            .with("kind", Column::Text(vec!["toa".into(), "tod".into()]));
        t.write(&dir.path().join("s.csv")).unwrap();
        let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(
            text,
            "time,p,kind\n0.000000000000000e0,1.000000000000000e0,toa\n5.000000000000000e-1,NaN,tod\n# manifest: report.json\n"
        );
    }

    #[test]
    #[should_panic(expected = "wrong length")]
    fn ragged_column_rejected() {
        let _ = Table::new("s.csv", vec![0.0, 1.0]).num("p", vec![1.0]);
    }
}
