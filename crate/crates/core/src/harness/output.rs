//! CSV and JSON writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::OutputFormat;

/// A row with a fixed CSV layout.
pub trait CsvRecord {
    fn header(&self) -> String;
    fn fields(&self) -> Vec<String>;
}

/// Floats at 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_bool(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn to_csv<R: CsvRecord>(rows: &[R], empty_header: &str) -> String {
    let mut out = String::new();
    match rows.first() {
        Some(r) => out.push_str(&r.header()),
        None => out.push_str(empty_header),
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields().join(","));
        out.push('\n');
    }
    out
}

pub fn render<R: CsvRecord + Serialize>(rows: &[R], format: OutputFormat, empty_header: &str) -> Result<String> {
    Ok(match format {
        OutputFormat::Csv => to_csv(rows, empty_header),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            s
        }
    })
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
