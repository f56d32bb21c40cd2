use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sepeval::enhance::{oracle_wiener, spectral_subtract};
use sepeval::stft::{StftConfig, Window};
use sepeval::wav::write_wav;
use sepeval::{ReferenceSet, Waveform};

use super::{absolute, Ctx};
use crate::dataset::{create_dir, write_records, Dataset, Record};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Read the `enhanced` file named in the manifest.
    Precomputed,
    /// Oracle Wiener mask from the reference spectra.
    Wiener,
    /// Blind magnitude spectral subtraction.
    SpectralSubtraction,
}

#[derive(Debug, Clone, Args)]
pub struct EnhancerArgs {
    #[arg(long, default_value_t = 1024)]
    pub frame_len: usize,
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
    /// Leading frames used as the noise estimate by spectral subtraction.
    #[arg(long, default_value_t = 8)]
    pub profile_frames: usize,
    /// Spectral floor for spectral subtraction, as a fraction of |Y|.
    #[arg(long, default_value_t = 0.05)]
    pub floor: f64,
}

impl EnhancerArgs {
    pub fn stft(&self) -> StftConfig {
        StftConfig { frame_len: self.frame_len, hop: self.hop, window: Window::Hann }
    }

    /// Runs a reference enhancer; `Precomputed` is handled by callers.
    pub fn apply(&self, method: Method, refs: &ReferenceSet) -> sepeval::Result<Waveform> {
        match method {
            Method::Wiener => oracle_wiener(refs, self.stft()),
            Method::SpectralSubtraction => spectral_subtract(&refs.observed, self.profile_frames, self.stft(), self.floor),
            Method::Precomputed => Err(sepeval::Error::InvalidParameter {
                name: "method".into(),
                reason: "precomputed outputs are read from the manifest".into(),
            }),
        }
    }
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "wiener")]
    pub method: Method,
    #[command(flatten)]
    pub params: EnhancerArgs,
    /// Receives `<id>.enhanced.wav` files and a manifest naming them.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// A copy of `rec` whose reference paths are absolute, for manifests
/// written to another directory.
pub fn rebased(data: &Dataset, rec: &Record) -> CliResult<Record> {
    let abs = |p: &PathBuf| absolute(&data.resolve(p));
    Ok(Record {
        id: rec.id.clone(),
        source: abs(&rec.source)?,
        interference: rec.interference.as_ref().map(abs).transpose()?,
        noise: abs(&rec.noise)?,
        observed: rec.observed.as_ref().map(abs).transpose()?,
        enhanced: rec.enhanced.as_ref().map(abs).transpose()?,
        transcript: rec.transcript.clone(),
        mix: rec.mix.clone(),
    })
}

pub fn run(args: EnhanceArgs, ctx: Ctx) -> CliResult<()> {
    if args.method == Method::Precomputed {
        return Err(CliError::usage("`enhance` needs --method wiener or spectral-subtraction"));
    }
    args.params.stft().validate()?;
    let data = Dataset::load(&args.manifest)?;
    create_dir(&args.out_dir)?;
    let results = sepeval::par::map_collect(ctx.exec, &data.records, |rec| -> CliResult<Record> {
        let refs = data.references(rec)?;
        let enhanced = args.params.apply(args.method, &refs)?;
        let name = PathBuf::from(format!("{}.enhanced.wav", rec.id));
        write_wav(args.out_dir.join(&name), &enhanced)?;
        let mut out = rebased(&data, rec)?;
        out.enhanced = Some(name);
        Ok(out)
    });
    let records = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    write_records(&args.out_dir.join("manifest.jsonl"), &records)
}
