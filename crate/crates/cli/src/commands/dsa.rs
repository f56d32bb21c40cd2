use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sepeval::dsa::{default_axis, dsa_grid_run, AsrHook, DsaConfig, DsaGrid, DsaItem};
use sepeval::wer::Transcript;

use super::enhance::{EnhancerArgs, Method};
use super::Ctx;
use crate::dataset::{create_dir, Dataset};
use crate::error::{io_error, CliError, CliResult};
use crate::output::{opt_cell, OutputArgs};

pub const DSA_RUN_SCHEMA: &str = "sepeval.dsa-run/1";

#[derive(Debug, Args)]
pub struct DsaArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "precomputed")]
    pub method: Method,
    #[command(flatten)]
    pub params: EnhancerArgs,
    #[arg(short = 'L', long = "num-delays", default_value_t = 512)]
    pub num_delays: usize,
    #[arg(long, value_delimiter = ',', default_values_t = default_axis())]
    pub interf_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = default_axis())]
    pub noise_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = default_axis())]
    pub artif_grid: Vec<f64>,
    /// Receives the synthesized signals and, unless --manifest-out is
    /// given, `dsa.jsonl`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub manifest_out: Option<PathBuf>,
    /// Flat CSV copy of the manifest.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Recognizer run as `<cmd> [args…] <signal.wav>`, printing the
    /// hypothesis on stdout.
    #[arg(long)]
    pub asr_command: Option<String>,
    #[arg(long = "asr-arg", allow_hyphen_values = true)]
    pub asr_args: Vec<String>,
    /// Skip SDR/SIR/SNR/SAR for each grid point.
    #[arg(long)]
    pub no_reports: bool,
    /// Do not write the synthesized signals.
    #[arg(long, conflicts_with = "asr_command")]
    pub no_signals: bool,
}

#[derive(Serialize)]
struct RunSummary {
    manifest: PathBuf,
    utterances: usize,
    skipped: usize,
    entries: usize,
    entry_errors: usize,
}

pub fn run(args: DsaArgs, ctx: Ctx) -> CliResult<()> {
    let data = Dataset::load(&args.manifest)?;
    create_dir(&args.out_dir)?;
    if args.method != Method::Precomputed {
        args.params.stft().validate()?;
    }
    let items = data
        .records
        .iter()
        .map(|rec| {
            Ok(DsaItem {
                id: rec.id.clone(),
                refs: data.references(rec)?,
                transcript: rec.transcript.as_deref().map(Transcript::parse),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let by_id: HashMap<&str, &crate::dataset::Record> = data.records.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut cfg = DsaConfig::new(&args.out_dir, args.num_delays);
    cfg.grid = DsaGrid {
        interf: args.interf_grid.clone(),
        noise: args.noise_grid.clone(),
        artif: args.artif_grid.clone(),
    };
    cfg.write_signals = !args.no_signals;
    cfg.with_reports = !args.no_reports;
    cfg.exec = ctx.exec;
    cfg.asr = args.asr_command.as_ref().map(|program| AsrHook {
        program: program.clone(),
        args: args.asr_args.clone(),
        workers: ctx.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    });

    let enhance = |item: &DsaItem| match args.method {
        Method::Precomputed => data
            .enhanced(by_id[item.id.as_str()])
            .map_err(|e| sepeval::Error::Enhancement(e.message)),
        m => args.params.apply(m, &item.refs),
    };
    let manifest = dsa_grid_run(&items, enhance, &cfg)?;

    let path = args.manifest_out.clone().unwrap_or_else(|| args.out_dir.join("dsa.jsonl"));
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    manifest.write_jsonl(BufWriter::new(file))?;

    if let Some(csv_path) = &args.csv {
        let err = |e: csv::Error| CliError::data(format!("{}: {e}", csv_path.display()));
        let mut w = csv::Writer::from_path(csv_path).map_err(err)?;
        w.write_record([
            "utterance", "w_interf", "w_noise", "w_artif", "interf_collapsed", "path", "sdr_db", "sir_db", "snr_db",
            "sar_db", "wer", "error",
        ])
        .map_err(err)?;
        for e in &manifest.entries {
            let r = e.report.as_ref();
            w.write_record([
                e.utterance.clone(),
                e.triple.w_interf.to_string(),
                e.triple.w_noise.to_string(),
                e.triple.w_artif.to_string(),
                e.interf_collapsed.to_string(),
                e.path.display().to_string(),
                opt_cell(r.map(|r| r.sdr_db)),
                opt_cell(r.map(|r| r.sir_db)),
                opt_cell(r.map(|r| r.snr_db)),
                opt_cell(r.map(|r| r.sar_db)),
                opt_cell(e.wer),
                e.error.clone().unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| io_error(csv_path, e))?;
    }

    let done: std::collections::HashSet<&str> = manifest.entries.iter().map(|e| e.utterance.as_str()).collect();
    let summary = RunSummary {
        manifest: path,
        utterances: done.len(),
        skipped: items.len() - done.len(),
        entries: manifest.entries.len(),
        entry_errors: manifest.entries.iter().filter(|e| e.error.is_some()).count(),
    };
    let mut out = OutputArgs { out: None, csv: None }.open(&[])?;
    out.json(DSA_RUN_SCHEMA, &summary)?;
    out.finish()?;
    if done.is_empty() {
        return Err(CliError::data("every utterance failed enhancement"));
    }
    Ok(())
}
