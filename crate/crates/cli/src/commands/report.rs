//! Re-tabulates saved records: pools DSA manifests per grid point, averages
//! metric reports, and reduces OA sweeps to one curve.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sepeval::dsa::{pool_by_grid, DsaManifest, MANIFEST_SCHEMA};
use sepeval::metrics::{aggregate, AggregateReport, DbSummary};
use sepeval::wer::parse_keyed_transcripts;

use super::evaluate::UtteranceReport;
use super::oa::SweepRow;
use super::wer::load_references;
use super::Ctx;
use crate::error::{io_error, CliError, CliResult};
use crate::output::{opt_cell, OutputArgs, GRID_SCHEMA, SUMMARY_SCHEMA, SWEEP_SCHEMA, SXR_SCHEMA};

pub const OA_CURVE_SCHEMA: &str = "sepeval.oa-curve/1";

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON-lines file written by `metrics`, `decompose`, `oa-sweep` or `dsa`.
    #[arg(long)]
    pub input: PathBuf,
    /// Keyed hypothesis transcripts for the entries of a DSA manifest.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    /// Keyed reference transcripts.
    #[arg(long, conflicts_with = "manifest")]
    pub reference: Option<PathBuf>,
    /// Dataset manifest providing reference transcripts.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Deserialize)]
struct Head {
    schema: String,
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .collect::<Result<_, _>>()
        .map_err(|e| io_error(path, e))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, k: usize, line: &str) -> CliResult<T> {
    serde_json::from_str(line).map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), k + 1)))
}

fn mean_cell(s: &DbSummary) -> String {
    opt_cell(s.mean_db)
}

pub fn run(args: ReportArgs, _ctx: Ctx) -> CliResult<()> {
    let lines = read_lines(&args.input)?;
    let first = lines
        .first()
        .ok_or_else(|| CliError::data(format!("{}: empty", args.input.display())))?;
    let schema = parse::<Head>(&args.input, 0, first)?.schema;
    match schema.as_str() {
        MANIFEST_SCHEMA => dsa_report(&args, &lines),
        SXR_SCHEMA => sxr_report(&args, &lines),
        SWEEP_SCHEMA => sweep_report(&args, &lines),
        other => Err(CliError::data(format!("{}: cannot report on schema `{other}`", args.input.display()))),
    }
}

/// Records of `schema`; other record kinds in the file are skipped.
fn records_of<T: for<'de> Deserialize<'de>>(args: &ReportArgs, lines: &[String], schema: &str) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (k, line) in lines.iter().enumerate() {
        if parse::<Head>(&args.input, k, line)?.schema == schema {
            out.push(parse(&args.input, k, line)?);
        }
    }
    Ok(out)
}

fn dsa_report(args: &ReportArgs, lines: &[String]) -> CliResult<()> {
    let mut manifest = DsaManifest::read_jsonl(lines.join("\n").as_bytes())?;
    if let Some(hyp) = &args.hypotheses {
        let refs = load_references(args.reference.as_ref(), args.manifest.as_ref())?;
        let text = std::fs::read_to_string(hyp).map_err(|e| io_error(hyp, e))?;
        let scored = manifest.attach_hypotheses(&refs, &parse_keyed_transcripts(&text)?)?;
        log::info!("attached {scored} hypotheses");
    }
    let mut out = args.out.open(&[
        "w_interf", "w_noise", "w_artif", "entries", "corpus_wer", "edits", "ref_words", "sdr_mean_db", "sir_mean_db",
        "snr_mean_db", "sar_mean_db",
    ])?;
    for g in pool_by_grid(&manifest) {
        let cells = vec![
            g.triple.w_interf.to_string(),
            g.triple.w_noise.to_string(),
            g.triple.w_artif.to_string(),
            g.entries.to_string(),
            opt_cell(g.corpus_wer),
            g.wer_stats.edits.to_string(),
            g.wer_stats.ref_words.to_string(),
            mean_cell(&g.sdr),
            mean_cell(&g.sir),
            mean_cell(&g.snr),
            mean_cell(&g.sar),
        ];
        out.emit(GRID_SCHEMA, &g, Some(cells))?;
    }
    out.finish()
}

fn sxr_report(args: &ReportArgs, lines: &[String]) -> CliResult<()> {
    let reports: Vec<UtteranceReport> = records_of(args, lines, SXR_SCHEMA)?;
    let summary: AggregateReport = aggregate(reports.iter().map(|r| &r.report).collect::<Vec<_>>());
    let mut out = args.out.open(&["metric", "mean_db", "finite", "pos_inf", "neg_inf", "undefined"])?;
    for (name, s) in [("sdr", &summary.sdr), ("sir", &summary.sir), ("snr", &summary.snr), ("sar", &summary.sar)] {
        let cells = vec![
            name.to_string(),
            mean_cell(s),
            s.finite.to_string(),
            s.pos_inf.to_string(),
            s.neg_inf.to_string(),
            s.undefined.to_string(),
        ];
        out.emit(SUMMARY_SCHEMA, &serde_json::json!({ "metric": name, "summary": s }), Some(cells))?;
    }
    out.finish()
}

#[derive(Serialize)]
struct CurvePoint {
    weight: f64,
    utterances: usize,
    sdr: DbSummary,
    sir: DbSummary,
    snr: DbSummary,
    sar: DbSummary,
    sari: DbSummary,
}

fn sweep_report(args: &ReportArgs, lines: &[String]) -> CliResult<()> {
    let rows: Vec<SweepRow> = records_of(args, lines, SWEEP_SCHEMA)?;
    let mut by_weight: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
    for r in &rows {
        by_weight.entry(r.weight.to_bits()).or_default().push(r);
    }
    let mut out = args.out.open(&["weight", "utterances", "sdr_mean_db", "sir_mean_db", "snr_mean_db", "sar_mean_db", "sari_mean_db"])?;
    for (bits, rs) in by_weight {
        let p = CurvePoint {
            weight: f64::from_bits(bits),
            utterances: rs.len(),
            sdr: DbSummary::of(rs.iter().map(|r| r.report.sdr_db)),
            sir: DbSummary::of(rs.iter().map(|r| r.report.sir_db)),
            snr: DbSummary::of(rs.iter().map(|r| r.report.snr_db)),
            sar: DbSummary::of(rs.iter().map(|r| r.report.sar_db)),
            sari: DbSummary::of(rs.iter().map(|r| r.sari_db)),
        };
        let cells = vec![
            p.weight.to_string(),
            p.utterances.to_string(),
            mean_cell(&p.sdr),
            mean_cell(&p.sir),
            mean_cell(&p.snr),
            mean_cell(&p.sar),
            mean_cell(&p.sari),
        ];
        out.emit(OA_CURVE_SCHEMA, &p, Some(cells))?;
    }
    out.finish()
}
