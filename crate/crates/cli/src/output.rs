//! CSV tables and JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a header row and string cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push_floats(&mut self, row: impl IntoIterator<Item = f64>) {
        self.push(row.into_iter().map(fmt_float).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Creates the output directory and returns the path of `name` inside it.
pub fn prepare(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn table_quotes_awkward_cells() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a,b".into(), "\"q\"".into()]);
        let p = dir.path().join("t.csv");
        t.write(&p).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "name,value\n\"a,b\",\"\"\"q\"\"\"\n");
    }
}
