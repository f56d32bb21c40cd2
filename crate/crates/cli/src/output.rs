//! Versioned report records (JSON lines) with optional flat CSV tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sepeval::{Scenario, SxrReport};

use crate::error::{io_error, CliError, CliResult};

pub const SXR_SCHEMA: &str = "sepeval.sxr/1";
pub const SUMMARY_SCHEMA: &str = "sepeval.summary/1";
pub const SWEEP_SCHEMA: &str = "sepeval.oa-sweep/1";
pub const OA_TUNE_SCHEMA: &str = "sepeval.oa-tune/1";
pub const OA_APPLY_SCHEMA: &str = "sepeval.oa-apply/1";
pub const LOSS_SCHEMA: &str = "sepeval.loss/1";
pub const GRAD_CHECK_SCHEMA: &str = "sepeval.grad-check/1";
pub const WER_SCHEMA: &str = "sepeval.wer/1";
pub const GRID_SCHEMA: &str = "sepeval.dsa-grid/1";

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// JSON-lines output; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Additionally write a flat CSV table.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

pub struct Outputs {
    jsonl: Box<dyn Write>,
    csv: Option<(PathBuf, csv::Writer<File>)>,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

impl OutputArgs {
    pub fn open(&self, csv_header: &[&str]) -> CliResult<Outputs> {
        let jsonl: Box<dyn Write> = match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
            None => Box::new(io::stdout().lock()),
        };
        let csv = match &self.csv {
            Some(p) => {
                let mut w = csv::Writer::from_path(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
                w.write_record(csv_header).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
                Some((p.clone(), w))
            }
            None => None,
        };
        Ok(Outputs { jsonl, csv })
    }
}

impl Outputs {
    /// Writes one JSON record tagged with `schema`, and `row` to the CSV
    /// table when one is open.
    pub fn emit<T: Serialize>(&mut self, schema: &str, body: &T, row: Option<Vec<String>>) -> CliResult<()> {
        self.json(schema, body)?;
        if let (Some((path, w)), Some(row)) = (&mut self.csv, row) {
            w.write_record(&row).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// A JSON record with no CSV counterpart.
    pub fn json<T: Serialize>(&mut self, schema: &str, body: &T) -> CliResult<()> {
        let line = serde_json::to_string(&Tagged { schema, body }).map_err(|e| CliError::internal(e.to_string()))?;
        writeln!(self.jsonl, "{line}").map_err(|e| CliError::data(format!("writing output: {e}")))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.jsonl.flush().map_err(|e| CliError::data(format!("writing output: {e}")))?;
        if let Some((path, mut w)) = self.csv.take() {
            w.flush().map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}

pub const SXR_COLUMNS: [&str; 6] = ["scenario", "num_delays", "sdr_db", "sir_db", "snr_db", "sar_db"];

pub fn scenario_token(s: Scenario) -> &'static str {
    match s {
        Scenario::SingleTalker => "single-talker",
        Scenario::MultiTalker => "multi-talker",
    }
}

pub fn sxr_cells(r: &SxrReport) -> Vec<String> {
    vec![
        scenario_token(r.scenario).to_string(),
        r.num_delays.to_string(),
        r.sdr_db.to_string(),
        r.sir_db.to_string(),
        r.snr_db.to_string(),
        r.sar_db.to_string(),
    ]
}

pub fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}
