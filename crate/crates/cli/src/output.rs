//! Report emission: JSON as the canonical format, CSV as a flat projection.

use anyhow::{bail, Result};
use morrey_core::embeddings::Report;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => bail!("unknown format '{other}' (expected json|csv)"),
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    /// Echo of the resolved run parameters; a run is a pure function of it.
    pub config: serde_json::Value,
    pub reports: Vec<Report>,
}

impl RunReport {
    pub fn new(config: serde_json::Value, reports: Vec<Report>) -> Self {
        RunReport { config, reports }
    }

    /// Print one summary line per claim to stdout.
    pub fn print_summaries(&self) {
        for r in &self.reports {
            println!("{}", r.summary());
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        match format {
            Format::Json => serde_json::to_writer_pretty(&mut w, self)?,
            Format::Csv => {
                writeln!(w, "claim,member,lhs,rhs,constant_used,tolerance,exact,pass")?;
                for r in &self.reports {
                    let member = r
                        .metadata
                        .get("member")
                        .and_then(|v| v.as_str())
                        .unwrap_or("");
                    writeln!(
                        w,
                        "{},{},{:e},{:e},{:e},{:e},{},{}",
                        r.claim, member, r.lhs, r.rhs, r.constant_used, r.tolerance, r.exact, r.pass
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Exit status per the policy: 1 when any exact-tolerance claim fails,
    /// 0 otherwise.
    pub fn exit_code(&self) -> u8 {
        if self.reports.iter().any(|r| r.exact && !r.pass) {
            1
        } else {
            0
        }
    }
}
