use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sepeval::metrics::{aggregate, scenario_of, sxr_with_scenario};
use sepeval::wav::write_wav;
use sepeval::{Projectors, SxrReport};

use super::Ctx;
use crate::dataset::{create_dir, Dataset};
use crate::error::CliResult;
use crate::output::{sxr_cells, OutputArgs, SUMMARY_SCHEMA, SXR_COLUMNS, SXR_SCHEMA};

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Dataset manifest with an `enhanced` path per utterance.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Delays per reference in the projection basis.
    #[arg(short = 'L', long = "num-delays", default_value_t = 512)]
    pub num_delays: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub metrics: MetricsArgs,
    /// Write `<id>.{target,interf,noise,artif}.wav` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtteranceReport {
    pub id: String,
    #[serde(flatten)]
    pub report: SxrReport,
}

fn evaluate(args: &MetricsArgs, components: Option<&PathBuf>, ctx: Ctx) -> CliResult<()> {
    let data = Dataset::load(&args.manifest)?;
    if let Some(dir) = components {
        create_dir(dir)?;
    }
    let inner = ctx.inner(data.records.len());
    let reports = sepeval::par::map_collect(ctx.exec, &data.records, |rec| -> CliResult<UtteranceReport> {
        let refs = data.references(rec)?;
        let enhanced = data.enhanced(rec)?;
        refs.check_signal("enhanced", &enhanced)?;
        let d = Projectors::with_execution(&refs, args.num_delays, inner)?.decompose(&enhanced)?;
        if let Some(dir) = components {
            for (part, w) in [("target", &d.target), ("interf", &d.interf_err), ("noise", &d.noise_err), ("artif", &d.artif_err)] {
                write_wav(dir.join(format!("{}.{part}.wav", rec.id)), w)?;
            }
        }
        Ok(UtteranceReport { id: rec.id.clone(), report: sxr_with_scenario(&d, scenario_of(&refs)) })
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;

    let mut header = vec!["id"];
    header.extend(SXR_COLUMNS);
    let mut out = args.out.open(&header)?;
    for r in &reports {
        let mut row = vec![r.id.clone()];
        row.extend(sxr_cells(&r.report));
        out.emit(SXR_SCHEMA, r, Some(row))?;
    }
    out.json(SUMMARY_SCHEMA, &aggregate(reports.iter().map(|r| &r.report).collect::<Vec<_>>()))?;
    out.finish()
}

pub fn run_metrics(args: MetricsArgs, ctx: Ctx) -> CliResult<()> {
    evaluate(&args, None, ctx)
}

pub fn run_decompose(args: DecomposeArgs, ctx: Ctx) -> CliResult<()> {
    evaluate(&args.metrics, args.out_dir.as_ref(), ctx)
}
