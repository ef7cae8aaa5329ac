//! Output files: pretty JSON reports and plot-ready CSV tables.
//!
//! CSV uses '.' decimals, ',' delimiters, LF line endings, a header row, and
//! 17-significant-digit floats so numbers round-trip bit-exactly. Identical
//! config and seed always produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut path = base.to_path_buf();
    match path.extension() {
        Some(existing) if existing == ext => {}
        _ => {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            path.set_file_name(format!("{name}.{ext}"));
        }
    }
    path
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Writes the JSON report (and optional CSV table) to `out`, or prints the
/// JSON to stdout when no output path was given.
pub fn emit<T: Serialize>(
    report: &T,
    csv: Option<String>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    match out {
        None => {
            print!("{}", to_json_string(report)?);
            Ok(())
        }
        Some(base) => {
            if format.wants_csv() {
                match &csv {
                    Some(table) => write_file(&with_extension(base, "csv"), table)?,
                    None if format == OutputFormat::Csv => {
                        return Err(CliError::Config(
                            "this command has no CSV representation; use --format json".into(),
                        ))
                    }
                    None => {}
                }
            }
            if format.wants_json() || csv.is_none() {
                write_file(&with_extension(base, "json"), &to_json_string(report)?)?;
            }
            Ok(())
        }
    }
}

