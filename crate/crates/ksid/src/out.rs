//! Output helpers: CSV files and the per-run JSON summary.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Write a CSV file from a header line and row strings. Floats rendered by
/// the callers use Rust's shortest-roundtrip formatting, so two runs with
/// the same config produce byte-identical bodies.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: &[String],
) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    f.flush()?;
    Ok(path)
}

pub fn write_summary<T: Serialize>(dir: &Path, summary: &T) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Io(format!("summary serialization: {e}")))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Render a float for CSV: `inf`, `-inf`, `NaN`, or shortest-roundtrip.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
