use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sepeval::mix::{mix, ImpulseResponses, MixConditions, MixSpec};
use sepeval::wav::{read_wav, write_wav};
use sepeval::{synth, ReferenceSet, Waveform};

use super::Ctx;
use crate::dataset::{create_dir, write_records, Dataset, Record};
use crate::error::{io_error, CliError, CliResult};
use crate::output::OutputArgs;

pub const MIX_SCHEMA: &str = "sepeval.mix/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 0 to 10 dB SNR, drawn uniformly in dB.
    SingleTalkerTrain,
    /// 0 dB SNR.
    SingleTalkerEval,
    /// 5 to 20 dB SNR and SIR, drawn uniformly in dB.
    MultiTalkerTrain,
    /// 10 dB SNR, 5 dB SIR.
    MultiTalkerEval,
}

impl Preset {
    fn conditions(self) -> MixConditions {
        match self {
            Preset::SingleTalkerTrain => MixConditions::SINGLE_TALKER_TRAIN,
            Preset::SingleTalkerEval => MixConditions::SINGLE_TALKER_EVAL,
            Preset::MultiTalkerTrain => MixConditions::MULTI_TALKER_TRAIN,
            Preset::MultiTalkerEval => MixConditions::MULTI_TALKER_EVAL,
        }
    }
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long, required_unless_present = "synthetic")]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub interference: Option<PathBuf>,
    #[arg(long, required_unless_present = "synthetic")]
    pub noise: Option<PathBuf>,
    /// JSON file with `target_snr_db`, optional `target_sir_db`, `seed` and
    /// `rir_paths` (`source`, `interference`, `noise`).
    #[arg(long, conflicts_with_all = ["snr_db", "sir_db"])]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sir_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "utt0")]
    pub id: String,
    #[arg(long)]
    pub transcript: Option<String>,
    /// Generate this many synthetic utterances instead of mixing files.
    #[arg(long, value_name = "COUNT", conflicts_with_all = ["source", "noise", "interference", "config"])]
    pub synthetic: Option<usize>,
    #[arg(long, value_enum, default_value = "single-talker-eval")]
    pub preset: Preset,
    /// Samples per synthetic utterance.
    #[arg(long, default_value_t = 16000)]
    pub length: usize,
    #[arg(long, default_value_t = 16000)]
    pub sample_rate: u32,
    /// Add to an existing `manifest.jsonl` in the output directory.
    #[arg(long)]
    pub append: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RirPaths {
    source: Option<PathBuf>,
    interference: Option<PathBuf>,
    noise: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixConfig {
    target_snr_db: f64,
    #[serde(default)]
    target_sir_db: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    rir_paths: RirPaths,
}

#[derive(Serialize)]
struct MixRow<'a> {
    id: &'a str,
    target_snr_db: f64,
    achieved_snr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_sir_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achieved_sir_db: Option<f64>,
}

fn level_db(a: &Waveform, b: &Waveform) -> f64 {
    10.0 * (a.energy() / b.energy()).log10()
}

fn load_config(path: &Path, seed: u64) -> CliResult<(MixSpec, ImpulseResponses)> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let cfg: MixConfig =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let load = |p: &Option<PathBuf>| -> CliResult<Option<Waveform>> {
        p.as_ref().map(|p| read_wav(base.join(p)).map_err(CliError::from)).transpose()
    };
    let rirs = ImpulseResponses {
        source: load(&cfg.rir_paths.source)?,
        interference: load(&cfg.rir_paths.interference)?,
        noise: load(&cfg.rir_paths.noise)?,
    };
    Ok((MixSpec::new(cfg.target_snr_db, cfg.target_sir_db, cfg.seed.unwrap_or(seed)), rirs))
}

fn write_utterance(out_dir: &Path, id: &str, refs: &ReferenceSet, spec: MixSpec, transcript: Option<String>) -> CliResult<Record> {
    let file = |part: &str| PathBuf::from(format!("{id}.{part}.wav"));
    let put = |part: &str, w: &Waveform| -> CliResult<PathBuf> {
        let name = file(part);
        write_wav(out_dir.join(&name), w)?;
        Ok(name)
    };
    Ok(Record {
        id: id.to_string(),
        source: put("source", &refs.source)?,
        interference: refs.interference.as_ref().map(|i| put("interference", i)).transpose()?,
        noise: put("noise", &refs.noise)?,
        observed: Some(put("observed", &refs.observed)?),
        enhanced: None,
        transcript,
        mix: Some(spec),
    })
}

fn row<'a>(id: &'a str, refs: &ReferenceSet, spec: &MixSpec) -> MixRow<'a> {
    MixRow {
        id,
        target_snr_db: spec.target_snr_db,
        achieved_snr_db: level_db(&refs.source, &refs.noise),
        target_sir_db: spec.target_sir_db,
        achieved_sir_db: refs.interference.as_ref().map(|i| level_db(&refs.source, i)),
    }
}

pub fn run(args: MixArgs, ctx: Ctx) -> CliResult<()> {
    create_dir(&args.out_dir)?;
    let manifest_path = args.out_dir.join("manifest.jsonl");
    let mut records = if args.append && manifest_path.exists() {
        Dataset::load(&manifest_path)?.records
    } else {
        Vec::new()
    };

    let made: Vec<(String, ReferenceSet, MixSpec, Option<String>)> = match args.synthetic {
        Some(count) => {
            if count == 0 {
                return Err(CliError::usage("--synthetic needs at least one utterance"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let seeds: Vec<u64> = (0..count).map(|_| rng.gen()).collect();
            let conditions = args.preset.conditions();
            let built = sepeval::par::map_collect(ctx.exec, &seeds, |&seed| {
                let spec = conditions.draw(seed);
                let s = synth::voiced(args.length, args.sample_rate, seed);
                let i = spec
                    .target_sir_db
                    .map(|_| synth::voiced(args.length, args.sample_rate, seed.wrapping_add(1)));
                let n = synth::colored_noise(args.length, args.sample_rate, seed.wrapping_add(2));
                mix(&s, i.as_ref(), &n, &spec, &ImpulseResponses::default()).map(|r| (r, spec))
            });
            built
                .into_iter()
                .enumerate()
                .map(|(k, r)| r.map(|(refs, spec)| (format!("syn{k:04}"), refs, spec, None)))
                .collect::<Result<_, _>>()?
        }
        None => {
            let (spec, rirs) = match &args.config {
                Some(p) => load_config(p, args.seed)?,
                None => {
                    let snr = args
                        .snr_db
                        .ok_or_else(|| CliError::usage("give --snr-db or --config"))?;
                    (MixSpec::new(snr, args.sir_db, args.seed), ImpulseResponses::default())
                }
            };
            let read = |p: &Option<PathBuf>| p.as_ref().map(read_wav).transpose();
            let s = read(&args.source)?.expect("required by clap");
            let n = read(&args.noise)?.expect("required by clap");
            let i = read(&args.interference)?;
            let refs = mix(&s, i.as_ref(), &n, &spec, &rirs)?;
            vec![(args.id.clone(), refs, spec, args.transcript.clone())]
        }
    };

    if records.iter().any(|r| made.iter().any(|m| m.0 == r.id)) {
        return Err(CliError::usage("an utterance with this id is already in the manifest"));
    }
    let mut out = args.out.open(&[])?;
    for (id, refs, spec, transcript) in made {
        out.json(MIX_SCHEMA, &row(&id, &refs, &spec))?;
        records.push(write_utterance(&args.out_dir, &id, &refs, spec, transcript)?);
    }
    write_records(&manifest_path, &records)?;
    out.finish()
}
