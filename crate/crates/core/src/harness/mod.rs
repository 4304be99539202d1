//! Command-line support: data ingestion, synthetic generation, the exhaustive
//! oracle, configuration parsing and result persistence.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod oracle;
pub mod record;
pub mod synthetic;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes `contents` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Twelve significant digits, scientific notation.
pub fn format_sig(value: f64) -> String {
    format!("{value:.11e}")
}

/// Comma-separated table with a header line and LF endings.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
