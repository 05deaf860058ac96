//! CSV and JSON writers.
//!
//! CSV files always start with a header row and print numbers with twelve
//! significant digits in scientific notation, independent of locale. JSON
//! numbers use the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, Result};

/// Twelve significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_owned()
    } else if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// Renders a header and rows of numbers as CSV text.
pub fn csv_string<R>(header: &[String], rows: impl IntoIterator<Item = R>) -> String
where
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut first = true;
        for &x in row.as_ref() {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{}", format_number(x));
        }
        out.push('\n');
    }
    out
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Output directory of one run.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_error(&root, e))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    pub fn write_csv<R: AsRef<[f64]>>(
        &self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<PathBuf> {
        self.write_text(name, &csv_string(header, rows))
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write_text(name, &text)
    }
}
