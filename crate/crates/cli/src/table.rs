//! CSV in and out. Output values use 6 significant digits, `\n` endings and
//! `#` comment lines above the header.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

pub fn format_value(v: f64) -> String {
    format!("{v:.5e}")
}

pub fn render_csv(comments: &[String], header: &[&str], rows: &[Vec<f64>]) -> CliResult<String> {
    let mut buf = Vec::new();
    for c in comments {
        buf.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        let fail = |e: csv::Error| CliError::Input(format!("csv encoding: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row.iter().map(|&v| format_value(v)))
                .map_err(fail)?;
        }
        w.flush()
            .map_err(|e| CliError::Input(format!("csv encoding: {e}")))?;
    }
    String::from_utf8(buf).map_err(|e| CliError::Input(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads typed rows, reporting the file line of any bad record.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<(u64, T)>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rows(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_rows<T: DeserializeOwned>(text: &str) -> Result<Vec<(u64, T)>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    if headers.is_empty() {
        return Err("empty file".into());
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| format!("line {line}: {e}"))?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    Ok(rows)
}
