use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sepeval::metrics::{evaluate_with, scenario_of};
use sepeval::oa::{collect_sweep_scores, default_weights, oa_additive, oa_condition, oa_interpolate, oa_sweep_with, sweep_key, tune_weight};
use sepeval::wav::write_wav;
use sepeval::wer::parse_keyed_transcripts;
use sepeval::{Db, Execution, Projectors, SxrReport};

use super::enhance::rebased;
use super::Ctx;
use crate::dataset::{create_dir, write_records, Dataset};
use crate::error::{io_error, CliError, CliResult};
use crate::output::{sxr_cells, OutputArgs, OA_APPLY_SCHEMA, OA_TUNE_SCHEMA, SWEEP_SCHEMA, SXR_COLUMNS};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(short = 'L', long = "num-delays", default_value_t = 512)]
    pub num_delays: usize,
    #[arg(long, value_delimiter = ',', default_values_t = default_weights())]
    pub weights: Vec<f64>,
    /// Write each interpolated signal here, named `<id>__oa<w>.wav`, for an
    /// external recognizer.
    #[arg(long)]
    pub signals_dir: Option<PathBuf>,
    /// Keyed hypothesis transcripts for the signals above; selects the
    /// weight with the lowest corpus WER.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub weight: f64,
    /// Use `enh + w·y` instead of `(1−w)·enh + w·y`.
    #[arg(long)]
    pub additive: bool,
    /// Receives `<id>.oa.wav` and a manifest using them as enhanced signals.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    pub weight: f64,
    /// `⟨enh, y⟩`; positive means every weight in (0, 1) raises SAR.
    pub inner_product: f64,
    /// SAR of this row minus SAR of the unmodified enhanced signal.
    pub sari_db: Db,
    #[serde(flatten)]
    pub report: SxrReport,
}

#[derive(Serialize)]
struct TuneRecord {
    weight: f64,
    corpus_wer: f64,
    scored: usize,
}

pub fn run_sweep(args: SweepArgs, ctx: Ctx) -> CliResult<()> {
    let data = Dataset::load(&args.manifest)?;
    if let Some(dir) = &args.signals_dir {
        create_dir(dir)?;
    }
    let inner = ctx.inner(data.records.len());
    let per_utt = sepeval::par::map_collect(ctx.exec, &data.records, |rec| -> CliResult<Vec<SweepRow>> {
        let refs = data.references(rec)?;
        let enh = data.enhanced(rec)?;
        refs.check_signal("enhanced", &enh)?;
        let (ip, _) = oa_condition(&enh, &refs.observed)?;
        let p = Projectors::with_execution(&refs, args.num_delays, inner)?;
        let base = evaluate_with(&p, &enh, scenario_of(&refs))?.sar_db;
        if let Some(dir) = &args.signals_dir {
            for &w in &args.weights {
                let z = oa_interpolate(&enh, &refs.observed, w)?;
                write_wav(dir.join(format!("{}.wav", sweep_key(&rec.id, w))), &z)?;
            }
        }
        Ok(oa_sweep_with(&p, &enh, &refs, &args.weights, Execution::Sequential)?
            .into_iter()
            .map(|pt| SweepRow {
                id: rec.id.clone(),
                weight: pt.weight,
                inner_product: ip,
                sari_db: pt.report.sar_db.minus(base),
                report: pt.report,
            })
            .collect())
    });

    let mut header = vec!["id", "weight"];
    header.extend(SXR_COLUMNS);
    header.extend(["sari_db", "inner_product"]);
    let mut out = args.out.open(&header)?;
    for rows in per_utt {
        for r in rows? {
            let mut cells = vec![r.id.clone(), r.weight.to_string()];
            cells.extend(sxr_cells(&r.report));
            cells.extend([r.sari_db.to_string(), r.inner_product.to_string()]);
            out.emit(SWEEP_SCHEMA, &r, Some(cells))?;
        }
    }

    if let Some(hyp_path) = &args.hypotheses {
        let text = std::fs::read_to_string(hyp_path).map_err(|e| io_error(hyp_path, e))?;
        let hyps = parse_keyed_transcripts(&text)?;
        let ids: Vec<String> = data.records.iter().map(|r| r.id.clone()).collect();
        let scores = collect_sweep_scores(&ids, &args.weights, &data.transcripts(), &hyps)?;
        let (weight, corpus_wer) = tune_weight(&scores).ok_or_else(|| {
            CliError::data("no hypothesis matched an utterance with a reference transcript")
        })?;
        out.json(OA_TUNE_SCHEMA, &TuneRecord { weight, corpus_wer, scored: scores.len() })?;
    }
    out.finish()
}

#[derive(Serialize)]
struct ApplyRow {
    id: String,
    weight: f64,
    form: &'static str,
    inner_product: f64,
    sar_gain_guaranteed: bool,
    path: PathBuf,
}

pub fn run_apply(args: ApplyArgs, ctx: Ctx) -> CliResult<()> {
    let data = Dataset::load(&args.manifest)?;
    create_dir(&args.out_dir)?;
    let form = if args.additive { "additive" } else { "interpolate" };
    let results = sepeval::par::map_collect(ctx.exec, &data.records, |rec| -> CliResult<_> {
        let refs = data.references(rec)?;
        let enh = data.enhanced(rec)?;
        let (ip, positive) = oa_condition(&enh, &refs.observed)?;
        let z = if args.additive {
            oa_additive(&enh, &refs.observed, args.weight)?
        } else {
            oa_interpolate(&enh, &refs.observed, args.weight)?
        };
        let name = PathBuf::from(format!("{}.oa.wav", rec.id));
        write_wav(args.out_dir.join(&name), &z)?;
        let mut out_rec = rebased(&data, rec)?;
        out_rec.enhanced = Some(name.clone());
        let open_interval = args.additive || (args.weight > 0.0 && args.weight < 1.0);
        let row = ApplyRow {
            id: rec.id.clone(),
            weight: args.weight,
            form,
            inner_product: ip,
            sar_gain_guaranteed: positive && open_interval && args.weight > 0.0,
            path: args.out_dir.join(name),
        };
        Ok((out_rec, row))
    });
    let mut out = args.out.open(&["id", "weight", "form", "inner_product", "sar_gain_guaranteed", "path"])?;
    let mut records = Vec::new();
    for r in results {
        let (rec, row) = r?;
        let cells = vec![
            row.id.clone(),
            row.weight.to_string(),
            row.form.to_string(),
            row.inner_product.to_string(),
            row.sar_gain_guaranteed.to_string(),
            row.path.display().to_string(),
        ];
        out.emit(OA_APPLY_SCHEMA, &row, Some(cells))?;
        records.push(rec);
    }
    write_records(&args.out_dir.join("manifest.jsonl"), &records)?;
    out.finish()
}
