//! Plot-ready CSV and JSON encodings of command results.
//!
//! CSV tables have a header row and use `.` as the decimal separator. A
//! command with a secondary table (histogram, summary) writes it next to the
//! main file as `<stem>.<name>.csv`; JSON output nests every table in one
//! object instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

pub fn csv_table<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidParameter(format!("csv encoding: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn json_value<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("json encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// A named table that accompanies the main one.
pub struct Table {
    pub name: &'static str,
    pub csv: String,
}

/// Where each rendered piece of output goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub path: Option<PathBuf>,
    pub contents: String,
}

/// Lays out a main CSV table plus secondary tables for `out` (or stdout).
pub fn csv_emissions(out: Option<&Path>, main: String, extra: Vec<Table>) -> Vec<Emission> {
    match out {
        Some(path) => {
            let mut v = vec![Emission {
                path: Some(path.to_path_buf()),
                contents: main,
            }];
            v.extend(extra.into_iter().map(|t| Emission {
                path: Some(sibling_path(path, t.name)),
                contents: t.csv,
            }));
            v
        }
        None => {
            let mut contents = main;
            for t in extra {
                contents.push('\n');
                contents.push_str(&t.csv);
            }
            vec![Emission { path: None, contents }]
        }
    }
}

/// `results/sweep.csv` + `hist` -> `results/sweep.hist.csv`.
pub fn sibling_path(path: &Path, name: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{name}.{ext}"))
}

pub fn write_emissions(emissions: &[Emission], stdout: &mut impl std::io::Write) -> Result<()> {
    for e in emissions {
        match &e.path {
            Some(p) => fs::write(p, &e.contents).map_err(|err| Error::io(p, err))?,
            None => stdout
                .write_all(e.contents.as_bytes())
                .map_err(|err| Error::io("<stdout>", err))?,
        }
    }
    Ok(())
}
