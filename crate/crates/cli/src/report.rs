use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::Format;

/// A command's output: a JSON document and a flat table for CSV.
pub struct Report {
    pub json: serde_json::Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// `false` when an analysis assertion failed; the report is still written.
    pub passed: bool,
}

impl Report {
    pub fn new<T: Serialize>(doc: &T, header: Vec<&'static str>) -> serde_json::Result<Self> {
        Ok(Self {
            json: serde_json::to_value(doc)?,
            header,
            rows: Vec::new(),
            passed: true,
        })
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        self.rows.push(cells.into_iter().collect());
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json)?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                Ok(w.into_inner()?)
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
        let bytes = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}

/// Shortest round-trip form, so CSV and JSON agree digit for digit.
pub fn num(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
}
