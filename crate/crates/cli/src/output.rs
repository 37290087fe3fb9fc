use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Where and how a command writes its result.
#[derive(Debug, Clone)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    pub fn open(&self) -> Result<Box<dyn Write>> {
        open_path(self.path.as_deref())
    }

    /// `<stem>-<name>.<ext>` next to the main output, or `None` for stdout.
    pub fn sibling(&self, name: &str) -> Option<PathBuf> {
        let path = self.path.as_ref()?;
        let stem = path
            .file_stem()
            .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
        Some(path.with_file_name(format!("{stem}-{name}.{}", self.format.extension())))
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.open()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `rows` as CSV under `header`, or as a JSON array of objects.
    pub fn records(&self, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(self.open()?);
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                w.flush()?;
                Ok(())
            }
            Format::Json => {
                let objects: Vec<serde_json::Map<String, serde_json::Value>> = rows
                    .iter()
                    .map(|r| {
                        header
                            .iter()
                            .zip(r)
                            .map(|(h, v)| (h.to_string(), json_scalar(v)))
                            .collect()
                    })
                    .collect();
                self.json(&objects)
            }
        }
    }
}

pub fn open_path(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Numbers stay numbers and empty cells become `null`.
fn json_scalar(v: &str) -> serde_json::Value {
    if v.is_empty() {
        return serde_json::Value::Null;
    }
    if let Ok(i) = v.parse::<i64>() {
        return i.into();
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => x.into(),
        _ => match v {
            "true" => true.into(),
            "false" => false.into(),
            _ => v.into(),
        },
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}
