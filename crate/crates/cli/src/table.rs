//! Result tables. Every table starts with `schema_version`; floats are written
//! with 17 significant digits so they round-trip exactly.

use std::fs;
use std::path::Path;

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
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

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `headers` excludes the leading `schema_version` column, which is added.
    pub fn new(headers: &[&str]) -> Self {
        let mut h = vec!["schema_version".to_string()];
        h.extend(headers.iter().map(|s| s.to_string()));
        Self {
            headers: h,
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; NaN and infinite cells are rejected so that no output
    /// table ever contains them.
    pub fn push(&mut self, cells: Vec<Cell>) -> CliResult<()> {
        if cells.len() + 1 != self.headers.len() {
            panic!(
                "row has {} cells for {} columns",
                cells.len() + 1,
                self.headers.len()
            );
        }
        for (c, h) in cells.iter().zip(&self.headers[1..]) {
            if let Cell::Float(x) = c {
                if !x.is_finite() {
                    return Err(CliError::Numerical(purity_core::Error::InvalidParameter(
                        format!("non-finite value in column '{h}'"),
                    )));
                }
            }
        }
        let mut row = vec![Cell::Int(SCHEMA_VERSION as i64)];
        row.extend(cells);
        self.rows.push(row);
        Ok(())
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.headers, other.headers, "column mismatch");
        self.rows.extend(other.rows);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn to_csv_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner()
            .map_err(|e| CliError::io("csv buffer", e.into_error()))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let bytes = self.to_csv_bytes()?;
        fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn schema_version_leads() {
        let mut t = Table::new(&["label", "value"]);
        t.push(vec!["a,b".into(), 0.5.into()]).unwrap();
        let text = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert_eq!(text, "schema_version,label,value\r\n1,\"a,b\",5.0000000000000000e-1\r\n");
    }

    #[test]
    fn nan_is_rejected() {
        let mut t = Table::new(&["value"]);
        assert!(t.push(vec![f64::NAN.into()]).is_err());
        assert!(t.is_empty());
    }
}
