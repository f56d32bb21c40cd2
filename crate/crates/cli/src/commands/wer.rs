use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sepeval::wer::{corpus_wer, parse_keyed_transcripts, Transcript, WerStats};

use super::Ctx;
use crate::dataset::Dataset;
use crate::error::{io_error, CliError, CliResult};
use crate::output::{OutputArgs, SUMMARY_SCHEMA, WER_SCHEMA};

#[derive(Debug, Args)]
pub struct WerArgs {
    /// Reference transcripts, one `<id> <words…>` line per utterance.
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub reference: Option<PathBuf>,
    /// Take references from the `transcript` fields of a dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Hypothesis transcripts in the same keyed format.
    #[arg(long)]
    pub hypothesis: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn read_keyed(path: &PathBuf) -> CliResult<HashMap<String, Transcript>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_keyed_transcripts(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn load_references(reference: Option<&PathBuf>, manifest: Option<&PathBuf>) -> CliResult<HashMap<String, Transcript>> {
    match (reference, manifest) {
        (Some(r), _) => read_keyed(r),
        (None, Some(m)) => Ok(Dataset::load(m)?.transcripts()),
        (None, None) => Err(CliError::usage("reference transcripts needed: --reference or --manifest")),
    }
}

#[derive(Serialize)]
struct Row<'a> {
    id: &'a str,
    #[serde(flatten)]
    stats: WerStats,
    wer: f64,
}

#[derive(Serialize)]
struct Summary {
    utterances: usize,
    missing_hypotheses: usize,
    #[serde(flatten)]
    stats: WerStats,
    corpus_wer: Option<f64>,
}

pub fn run(args: WerArgs, _ctx: Ctx) -> CliResult<()> {
    let refs = load_references(args.reference.as_ref(), args.manifest.as_ref())?;
    let hyps = read_keyed(&args.hypothesis)?;
    let mut ids: Vec<&String> = refs.keys().collect();
    ids.sort();
    let empty = Transcript::default();
    let mut out = args.out.open(&["id", "edits", "ref_words", "wer"])?;
    let mut all = Vec::new();
    let mut missing = 0;
    for id in ids {
        let hyp = hyps.get(id).unwrap_or_else(|| {
            log::warn!("no hypothesis for `{id}`; scored as empty");
            missing += 1;
            &empty
        });
        let st = WerStats::between(&refs[id], hyp).map_err(|e| CliError::data(format!("utterance `{id}`: {e}")))?;
        let cells = vec![id.clone(), st.edits.to_string(), st.ref_words.to_string(), st.rate().to_string()];
        out.emit(WER_SCHEMA, &Row { id, stats: st, wer: st.rate() }, Some(cells))?;
        all.push(st);
    }
    let stats: WerStats = all.iter().copied().sum();
    out.json(
        SUMMARY_SCHEMA,
        &Summary { utterances: all.len(), missing_hypotheses: missing, stats, corpus_wer: corpus_wer(all) },
    )?;
    out.finish()
}
