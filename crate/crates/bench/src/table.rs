//! Rectangular tables of finite floats written as CSV.
//!
//! Floats use Rust's shortest representation that parses back to the same
//! `f64`, so output is byte-stable and lossless.

use std::io::Write;
use std::path::Path;

use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> BenchResult<()> {
        if row.len() != self.header.len() {
            return Err(BenchError::numerical(format!(
                "row of length {} for {} columns",
                row.len(),
                self.header.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(BenchError::numerical(format!("non-finite table entry {v}")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to<W: Write>(&self, out: W) -> BenchResult<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> BenchResult<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| BenchError::Config(format!("cannot create {}: {e}", path.display())))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn format_float(v: f64) -> String {
    // `-0` would otherwise print as "-0".
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let mut t = CsvTable::new(["a", "b"]);
        let vals = [0.1 + 0.2, 1e-300, -2.5e17, 3.0, -0.0, std::f64::consts::PI];
        for pair in vals.chunks(2) {
            t.push(pair.to_vec()).unwrap();
        }
        let text = t.to_csv_string();
        assert!(text.starts_with("a,b\n"));
        let parsed: Vec<f64> = text
            .lines()
            .skip(1)
            .flat_map(|l| l.split(',').map(|s| s.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        assert_eq!(parsed, vals.to_vec());
        assert!(text.is_ascii());
    }

    #[test]
    fn rejects_ragged_or_non_finite_rows() {
        let mut t = CsvTable::new(["a", "b"]);
        assert!(t.push(vec![1.0]).is_err());
        assert!(t.push(vec![1.0, f64::NAN]).is_err());
        assert!(t.is_empty());
    }
}
