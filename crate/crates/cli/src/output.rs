use std::collections::BTreeMap;

use clap::ValueEnum;
use fixprice_core::{QuadratureConfig, Seed};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Parsed inputs in canonical form, keyed by flag name.
    pub inputs: BTreeMap<String, Value>,
    pub seed: Seed,
    pub cfg: QuadratureConfig,
    pub output_format: Format,
}

/// A command's result, renderable in every format.
pub struct Output {
    pub manifest: RunManifest,
    pub result: Value,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Summary lines shown under the table.
    pub notes: Vec<String>,
    /// Show the table with one line per field instead of one per row.
    pub transpose: bool,
    pub exit_code: u8,
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Output {
    pub fn render(&self) -> Result<String, CliError> {
        match self.manifest.output_format {
            Format::Json => {
                let doc = serde_json::json!({ "manifest": self.manifest, "result": self.result });
                let mut text = serde_json::to_string_pretty(&doc).expect("output serializes");
                text.push('\n');
                Ok(text)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let csv_err = |e: csv::Error| CliError::input(format!("writing CSV: {e}"));
                w.write_record(&self.headers).map_err(csv_err)?;
                for row in &self.rows {
                    w.write_record(row).map_err(csv_err)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| CliError::input(format!("writing CSV: {e}")))?;
                Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
            }
            Format::Table => Ok(self.table()),
        }
    }

    fn table(&self) -> String {
        let grid: Vec<Vec<String>> = if self.transpose {
            let mut head = vec!["field".to_string()];
            head.extend((1..=self.rows.len()).map(|i| {
                if self.rows.len() == 1 {
                    "value".to_string()
                } else {
                    format!("value {i}")
                }
            }));
            let body = self.headers.iter().enumerate().map(|(j, h)| {
                let mut line = vec![h.to_string()];
                line.extend(self.rows.iter().map(|r| r[j].clone()));
                line
            });
            std::iter::once(head).chain(body).collect()
        } else {
            let head = self.headers.iter().map(|h| h.to_string()).collect();
            std::iter::once(head).chain(self.rows.iter().cloned()).collect()
        };
        let mut widths = vec![0; grid[0].len()];
        for row in &grid {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            if i == 1 {
                out += &format_line(&rule, &widths);
            }
            out += &format_line(row, &widths);
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for note in &self.notes {
                out += note;
                out.push('\n');
            }
        }
        out
    }
}

fn format_line(cells: &[String], widths: &[usize]) -> String {
    let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
    padded.join("  ").trim_end().to_string() + "\n"
}
