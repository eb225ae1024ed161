use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Run parameters written as a `#` line above every table.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunInfo {
    pub seed: Option<u64>,
    pub h: Option<usize>,
    pub samples: Option<usize>,
}

impl RunInfo {
    pub fn header(&self) -> String {
        fn show<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "na".to_string(), |v| v.to_string())
        }
        format!(
            "# schema_version={SCHEMA_VERSION} seed={} H={} samples={}",
            show(self.seed),
            show(self.h),
            show(self.samples)
        )
    }
}

pub fn render_csv<S: Serialize>(info: &RunInfo, rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body = String::from_utf8(w.into_inner().context("flushing csv")?)?;
    Ok(format!("{}\n{body}", info.header()))
}

pub fn emit<S: Serialize>(out: Option<&Path>, info: &RunInfo, rows: &[S]) -> Result<()> {
    log::info!("seed={:?} H={:?} samples={:?}", info.seed, info.h, info.samples);
    let text = render_csv(info, rows)?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
