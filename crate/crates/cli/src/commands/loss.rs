use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sepeval::enhance::oracle_wiener;
use sepeval::loss::{default_alpha_grid, AbSdrLoss, DenomFloor, LossConfig};
use sepeval::stft::{StftConfig, Window};
use sepeval::{synth, Db, ReferenceSet, Waveform};

use super::Ctx;
use crate::dataset::Dataset;
use crate::error::{CliError, CliResult};
use crate::output::{OutputArgs, GRAD_CHECK_SCHEMA, LOSS_SCHEMA, SUMMARY_SCHEMA};

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = default_alpha_grid())]
    pub alpha: Vec<f64>,
    /// Delays per reference; defaults to 2 for single-talker and 1 for
    /// multi-talker utterances.
    #[arg(short = 'L', long = "num-delays")]
    pub num_delays: Option<usize>,
    #[command(flatten)]
    pub floor: FloorArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FloorArgs {
    /// Denominator floor as a fraction of the source energy.
    #[arg(long, default_value_t = 1e-12)]
    pub floor_rel: f64,
    /// Absolute denominator floor; overrides --floor-rel.
    #[arg(long)]
    pub floor_abs: Option<f64>,
}

impl FloorArgs {
    fn resolve(&self) -> DenomFloor {
        match self.floor_abs {
            Some(a) => DenomFloor::Absolute(a),
            None => DenomFloor::RelativeToSource(self.floor_rel),
        }
    }
}

fn config_for(refs: &ReferenceSet, alpha: f64, num_delays: Option<usize>, floor: DenomFloor) -> LossConfig {
    let base = LossConfig::recommended_for(refs);
    LossConfig { alpha, num_delays: num_delays.unwrap_or(base.num_delays), denom_floor: floor }
}

#[derive(Serialize)]
struct LossRow {
    id: String,
    alpha: f64,
    num_delays: usize,
    loss_db: Db,
}

/// Loss values live in dB; infinities become sentinel tokens.
fn as_db(v: f64) -> Db {
    if v.is_finite() {
        Db::Finite(v)
    } else if v == f64::INFINITY {
        Db::PosInf
    } else if v == f64::NEG_INFINITY {
        Db::NegInf
    } else {
        Db::Undefined
    }
}

pub fn run_loss(args: LossArgs, ctx: Ctx) -> CliResult<()> {
    let data = Dataset::load(&args.manifest)?;
    let floor = args.floor.resolve();
    let rows = sepeval::par::map_collect(ctx.exec, &data.records, |rec| -> CliResult<Vec<LossRow>> {
        let refs = data.references(rec)?;
        let enh = data.enhanced(rec)?;
        refs.check_signal("enhanced", &enh)?;
        args.alpha
            .iter()
            .map(|&alpha| {
                let cfg = config_for(&refs, alpha, args.num_delays, floor);
                let loss = AbSdrLoss::new(&refs, &cfg)?.loss(&enh)?;
                Ok(LossRow { id: rec.id.clone(), alpha, num_delays: cfg.num_delays, loss_db: as_db(loss) })
            })
            .collect()
    });
    let mut out = args.out.open(&["id", "alpha", "num_delays", "loss_db"])?;
    for utt in rows {
        for r in utt? {
            let cells = vec![r.id.clone(), r.alpha.to_string(), r.num_delays.to_string(), r.loss_db.to_string()];
            out.emit(LOSS_SCHEMA, &r, Some(cells))?;
        }
    }
    out.finish()
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// Check utterances from this manifest instead of the built-in fixtures.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = default_alpha_grid())]
    pub alpha: Vec<f64>,
    #[arg(short = 'L', long = "num-delays", default_value_t = 2)]
    pub num_delays: usize,
    /// Number of built-in fixtures.
    #[arg(long, default_value_t = 8)]
    pub instances: usize,
    /// Samples per built-in fixture.
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    /// Manifest utterances are cropped to this many samples.
    #[arg(long, default_value_t = 512)]
    pub max_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite-difference step as a fraction of the signal RMS.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

struct Case {
    id: String,
    refs: ReferenceSet,
    enhanced: Waveform,
}

fn fixtures(args: &GradCheckArgs) -> CliResult<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    // Short frames so that short fixtures still carry masking artifacts.
    let stft = StftConfig { frame_len: 64, hop: 16, window: Window::Hann };
    (0..args.instances)
        .map(|k| {
            let snr = rng.gen_range(0.0..10.0);
            let sir = (k % 2 == 1).then(|| rng.gen_range(5.0..20.0));
            let refs = synth::mixture(args.length, 16000, snr, sir, rng.gen())?;
            let enhanced = oracle_wiener(&refs, stft)?;
            Ok(Case { id: format!("fixture{k}"), refs, enhanced })
        })
        .collect()
}

fn crop(w: &Waveform, n: usize) -> sepeval::Result<Waveform> {
    w.with_samples(w.samples()[..n.min(w.len())].to_vec())
}

fn from_manifest(path: &Path, max: usize) -> CliResult<Vec<Case>> {
    let data = Dataset::load(path)?;
    data.records
        .iter()
        .map(|rec| {
            let refs = data.references(rec)?;
            let enh = data.enhanced(rec)?;
            refs.check_signal("enhanced", &enh)?;
            let refs = ReferenceSet::new(
                crop(&refs.source, max)?,
                refs.interference.as_ref().map(|i| crop(i, max)).transpose()?,
                crop(&refs.noise, max)?,
                crop(&refs.observed, max)?,
            )?;
            Ok(Case { id: rec.id.clone(), refs, enhanced: crop(&enh, max)? })
        })
        .collect()
}

/// Largest deviation between the analytic gradient and central finite
/// differences, relative to the largest gradient entry.
fn max_relative_error(loss: &AbSdrLoss, enh: &Waveform, step_rel: f64) -> CliResult<f64> {
    let (_, g) = loss.loss_and_gradient(enh)?;
    let x = enh.samples();
    let rms = (enh.energy() / x.len() as f64).sqrt();
    let h = step_rel * rms;
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = loss.loss(&enh.with_samples(probe.clone())?)?;
        probe[k] = x[k] - h;
        let down = loss.loss(&enh.with_samples(probe.clone())?)?;
        probe[k] = x[k];
        worst = worst.max(((up - down) / (2.0 * h) - g.samples()[k]).abs());
    }
    let scale = g.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[derive(Serialize)]
struct CheckRow {
    id: String,
    alpha: f64,
    num_delays: usize,
    max_rel_error: f64,
}

#[derive(Serialize)]
struct CheckSummary {
    checks: usize,
    max_rel_error: f64,
    tolerance: f64,
    pass: bool,
}

pub fn run_grad_check(args: GradCheckArgs, ctx: Ctx) -> CliResult<()> {
    if args.alpha.is_empty() {
        return Err(CliError::usage("--alpha needs at least one value"));
    }
    let cases = match &args.manifest {
        Some(p) => from_manifest(p, args.max_samples)?,
        None => fixtures(&args)?,
    };
    // The floor is disabled so that the loss is exactly scale invariant.
    let jobs: Vec<(usize, f64)> = cases
        .iter()
        .enumerate()
        .flat_map(|(k, _)| args.alpha.iter().map(move |&a| (k, a)))
        .collect();
    let results = sepeval::par::map_collect(ctx.exec, &jobs, |&(k, alpha)| -> CliResult<CheckRow> {
        let c = &cases[k];
        let cfg = LossConfig { alpha, num_delays: args.num_delays, denom_floor: DenomFloor::NONE };
        let loss = AbSdrLoss::new(&c.refs, &cfg)?;
        Ok(CheckRow {
            id: c.id.clone(),
            alpha,
            num_delays: args.num_delays,
            max_rel_error: max_relative_error(&loss, &c.enhanced, args.step)?,
        })
    });
    let mut out = args.out.open(&["id", "alpha", "num_delays", "max_rel_error"])?;
    let mut worst = 0.0_f64;
    for r in results {
        let r = r?;
        worst = worst.max(r.max_rel_error);
        let cells = vec![r.id.clone(), r.alpha.to_string(), r.num_delays.to_string(), r.max_rel_error.to_string()];
        out.emit(GRAD_CHECK_SCHEMA, &r, Some(cells))?;
    }
    let pass = worst <= args.tolerance;
    out.json(SUMMARY_SCHEMA, &CheckSummary { checks: jobs.len(), max_rel_error: worst, tolerance: args.tolerance, pass })?;
    out.finish()?;
    if !pass {
        return Err(CliError::internal(format!(
            "gradient check failed: max relative error {worst:.3e} exceeds {:.1e}",
            args.tolerance
        )));
    }
    Ok(())
}
