//! Direct scaling analysis.
//!
//! Each utterance is enhanced and decomposed once; every point of a
//! three-axis grid then yields `s_target + w_i·e_interf + w_n·e_noise +
//! w_a·e_artif`. The synthesized signals are written to disk, optionally
//! transcribed by an external recognizer, and scored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{scenario_of, sxr_with_scenario, DbSummary, SxrReport};
use crate::par::{self, Execution};
use crate::projection::{Decomposition, Projectors};
use crate::signal::{ReferenceSet, Waveform};
use crate::wav::write_wav;
use crate::wer::{Transcript, WerStats};

pub const MANIFEST_SCHEMA: &str = "sepeval.dsa-manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingTriple {
    pub w_interf: f64,
    pub w_noise: f64,
    pub w_artif: f64,
}

impl ScalingTriple {
    pub const IDENTITY: ScalingTriple = ScalingTriple {
        w_interf: 1.0,
        w_noise: 1.0,
        w_artif: 1.0,
    };

    pub fn new(w_interf: f64, w_noise: f64, w_artif: f64) -> Result<Self> {
        let t = ScalingTriple {
            w_interf,
            w_noise,
            w_artif,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_interf", self.w_interf),
            ("w_noise", self.w_noise),
            ("w_artif", self.w_artif),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// `{0.1, 0.2, …, 1.5}`.
pub fn default_axis() -> Vec<f64> {
    (1..=15).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsaGrid {
    pub interf: Vec<f64>,
    pub noise: Vec<f64>,
    pub artif: Vec<f64>,
}

impl Default for DsaGrid {
    fn default() -> Self {
        DsaGrid {
            interf: default_axis(),
            noise: default_axis(),
            artif: default_axis(),
        }
    }
}

impl DsaGrid {
    pub fn uniform(axis: Vec<f64>) -> Self {
        DsaGrid {
            interf: axis.clone(),
            noise: axis.clone(),
            artif: axis,
        }
    }

    /// Grid points in loop order (interference outermost). With
    /// `collapse_interf`, only the first interference value is used.
    pub fn points(&self, collapse_interf: bool) -> Result<Vec<ScalingTriple>> {
        if self.interf.is_empty() || self.noise.is_empty() || self.artif.is_empty() {
            return Err(Error::param("grid", "every axis needs at least one value"));
        }
        let interf = if collapse_interf {
            &self.interf[..1]
        } else {
            &self.interf[..]
        };
        let mut out = Vec::with_capacity(interf.len() * self.noise.len() * self.artif.len());
        for &wi in interf {
            for &wn in &self.noise {
                for &wa in &self.artif {
                    out.push(ScalingTriple::new(wi, wn, wa)?);
                }
            }
        }
        Ok(out)
    }
}

/// `s_target + w_interf·e_interf + w_noise·e_noise + w_artif·e_artif`.
pub fn dsa_synthesize(decomp: &Decomposition, w: ScalingTriple) -> Result<Waveform> {
    w.validate()?;
    decomp
        .target
        .with_samples(decomp.recombine(w.w_interf, w.w_noise, w.w_artif))
}

/// Deterministic file stem for one grid point.
pub fn entry_key(utterance: &str, w: &ScalingTriple) -> String {
    format!(
        "{utterance}__i{:05.2}_n{:05.2}_a{:05.2}",
        w.w_interf, w.w_noise, w.w_artif
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsaEntry {
    pub utterance: String,
    #[serde(flatten)]
    pub triple: ScalingTriple,
    /// Set when the interference axis was collapsed for a single-talker
    /// utterance; `w_interf` is then irrelevant.
    #[serde(default)]
    pub interf_collapsed: bool,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SxrReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wer_stats: Option<WerStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DsaEntry {
    pub fn key(&self) -> String {
        entry_key(&self.utterance, &self.triple)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DsaManifest {
    pub entries: Vec<DsaEntry>,
}

#[derive(Serialize, Deserialize)]
struct Record<'a> {
    schema: std::borrow::Cow<'a, str>,
    #[serde(flatten)]
    entry: DsaEntry,
}

impl DsaManifest {
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for e in &self.entries {
            let rec = Record {
                schema: MANIFEST_SCHEMA.into(),
                entry: e.clone(),
            };
            let line = serde_json::to_string(&rec).map_err(|err| Error::Format {
                context: "dsa manifest".into(),
                reason: err.to_string(),
            })?;
            writeln!(out, "{line}").map_err(|source| Error::Io {
                path: PathBuf::from("<manifest>"),
                source,
            })?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: PathBuf::from("<manifest>"),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|err| Error::Format {
                context: format!("dsa manifest line {}", k + 1),
                reason: err.to_string(),
            })?;
            if rec.schema != MANIFEST_SCHEMA {
                return Err(Error::Format {
                    context: format!("dsa manifest line {}", k + 1),
                    reason: format!("unknown schema `{}`", rec.schema),
                });
            }
            entries.push(rec.entry);
        }
        Ok(DsaManifest { entries })
    }

    /// Attaches WER from hypothesis transcripts keyed by [`DsaEntry::key`].
    /// Entries without a hypothesis or reference are left unscored.
    pub fn attach_hypotheses(
        &mut self,
        references: &HashMap<String, Transcript>,
        hypotheses: &HashMap<String, Transcript>,
    ) -> Result<usize> {
        let mut scored = 0;
        for e in &mut self.entries {
            let (Some(r), Some(h)) = (references.get(&e.utterance), hypotheses.get(&e.key())) else {
                continue;
            };
            let st = WerStats::between(r, h)?;
            e.wer = Some(st.rate());
            e.wer_stats = Some(st);
            scored += 1;
        }
        Ok(scored)
    }
}

/// One grid point pooled over all utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    #[serde(flatten)]
    pub triple: ScalingTriple,
    pub entries: usize,
    pub corpus_wer: Option<f64>,
    pub wer_stats: WerStats,
    pub sdr: DbSummary,
    pub sir: DbSummary,
    pub snr: DbSummary,
    pub sar: DbSummary,
}

/// Corpus-level pooling per grid point: WER is total edits over total
/// reference words, metrics are per-utterance means.
pub fn pool_by_grid(manifest: &DsaManifest) -> Vec<GridScore> {
    let mut groups: BTreeMap<[u64; 3], Vec<&DsaEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        let t = e.triple;
        // Bit patterns of non-negative floats sort like the values.
        groups
            .entry([t.w_interf.to_bits(), t.w_noise.to_bits(), t.w_artif.to_bits()])
            .or_default()
            .push(e);
    }
    groups
        .into_values()
        .map(|es| {
            let stats: Vec<WerStats> = es.iter().filter_map(|e| e.wer_stats).collect();
            let wer_stats: WerStats = stats.iter().copied().sum();
            let reports: Vec<&SxrReport> = es.iter().filter_map(|e| e.report.as_ref()).collect();
            GridScore {
                triple: es[0].triple,
                entries: es.len(),
                corpus_wer: (wer_stats.ref_words > 0).then(|| wer_stats.rate()),
                wer_stats,
                sdr: DbSummary::of(reports.iter().map(|r| r.sdr_db)),
                sir: DbSummary::of(reports.iter().map(|r| r.sir_db)),
                snr: DbSummary::of(reports.iter().map(|r| r.snr_db)),
                sar: DbSummary::of(reports.iter().map(|r| r.sar_db)),
            }
        })
        .collect()
}

/// External recognizer: `program args… <signal.wav>` must print the
/// hypothesis words on stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrHook {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub workers: usize,
}

impl AsrHook {
    pub fn transcribe(&self, signal: &Path) -> Result<Transcript> {
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(signal)
            .output()
            .map_err(|source| Error::Io {
                path: PathBuf::from(&self.program),
                source,
            })?;
        if !out.status.success() {
            return Err(Error::Format {
                context: format!("asr hook on {}", signal.display()),
                reason: format!(
                    "exited with {}: {}",
                    out.status,
                    String::from_utf8_lossy(&out.stderr).trim()
                ),
            });
        }
        Ok(Transcript::parse(&String::from_utf8_lossy(&out.stdout)))
    }
}

#[derive(Debug, Clone)]
pub struct DsaItem {
    pub id: String,
    pub refs: ReferenceSet,
    pub transcript: Option<Transcript>,
}

#[derive(Debug, Clone)]
pub struct DsaConfig {
    pub grid: DsaGrid,
    pub num_delays: usize,
    pub out_dir: PathBuf,
    /// Write the synthesized signals. Required when an ASR hook is set.
    pub write_signals: bool,
    /// Score each synthesized signal with SDR/SIR/SNR/SAR.
    pub with_reports: bool,
    pub asr: Option<AsrHook>,
    pub exec: Execution,
}

impl DsaConfig {
    pub fn new(out_dir: impl Into<PathBuf>, num_delays: usize) -> Self {
        DsaConfig {
            grid: DsaGrid::default(),
            num_delays,
            out_dir: out_dir.into(),
            write_signals: true,
            with_reports: true,
            asr: None,
            exec: Execution::default(),
        }
    }
}

/// Runs the grid over `dataset`. `enhance` produces the enhanced signal for
/// one utterance; a failing utterance is logged and skipped, a failing
/// recognizer call is recorded on its entry.
pub fn dsa_grid_run<F>(dataset: &[DsaItem], enhance: F, cfg: &DsaConfig) -> Result<DsaManifest>
where
    F: Fn(&DsaItem) -> Result<Waveform> + Sync + Send,
{
    if dataset.is_empty() {
        return Err(Error::param("dataset", "no utterances"));
    }
    cfg.grid.points(false)?;
    if cfg.asr.is_some() && !cfg.write_signals {
        return Err(Error::param("asr", "an ASR hook needs the synthesized signals on disk"));
    }
    let mut seen = HashSet::new();
    for item in dataset {
        if !seen.insert(item.id.as_str()) {
            return Err(Error::param("dataset", format!("duplicate utterance id `{}`", item.id)));
        }
    }
    if cfg.write_signals {
        std::fs::create_dir_all(&cfg.out_dir).map_err(|source| Error::Io {
            path: cfg.out_dir.clone(),
            source,
        })?;
    }

    let per_utt = par::map_collect(cfg.exec, dataset, |item| run_utterance(item, &enhance, cfg));
    let mut entries = Vec::new();
    for (item, res) in dataset.iter().zip(per_utt) {
        match res {
            Ok(es) => entries.extend(es),
            Err(e @ Error::Enhancement(_)) => log::warn!("utterance {}: {e}; skipped", item.id),
            Err(e) => return Err(e),
        }
    }

    if let Some(hook) = &cfg.asr {
        let transcripts: HashMap<&str, &Transcript> = dataset
            .iter()
            .filter_map(|d| d.transcript.as_ref().map(|t| (d.id.as_str(), t)))
            .collect();
        let hyps = par::map_bounded(hook.workers.max(1), &entries, |e| hook.transcribe(&e.path));
        for (e, hyp) in entries.iter_mut().zip(hyps) {
            match hyp {
                Ok(h) => {
                    if let Some(r) = transcripts.get(e.utterance.as_str()) {
                        match WerStats::between(r, &h) {
                            Ok(st) => {
                                e.wer = Some(st.rate());
                                e.wer_stats = Some(st);
                            }
                            Err(err) => e.error = Some(err.to_string()),
                        }
                    }
                }
                Err(err) => e.error = Some(err.to_string()),
            }
        }
    }
    Ok(DsaManifest { entries })
}

fn run_utterance<F>(item: &DsaItem, enhance: &F, cfg: &DsaConfig) -> Result<Vec<DsaEntry>>
where
    F: Fn(&DsaItem) -> Result<Waveform> + Sync + Send,
{
    let enhanced = enhance(item).map_err(|e| match e {
        Error::Enhancement(_) => e,
        other => Error::Enhancement(other.to_string()),
    })?;
    item.refs
        .check_signal("enhanced", &enhanced)
        .map_err(|e| Error::Enhancement(e.to_string()))?;
    let scenario = scenario_of(&item.refs);
    let decomp = Projectors::with_execution(&item.refs, cfg.num_delays, Execution::Sequential)?
        .decompose(&enhanced)?;
    let collapse = item.refs.is_single_talker();
    let points = cfg.grid.points(collapse)?;

    par::map_collect(cfg.exec, &points, |&w| {
        let key = entry_key(&item.id, &w);
        let path = cfg.out_dir.join(format!("{key}.wav"));
        if cfg.write_signals {
            write_wav(&path, &dsa_synthesize(&decomp, w)?)?;
        }
        let report = if cfg.with_reports {
            let scaled = decomp.rescaled(w.w_interf, w.w_noise, w.w_artif)?;
            Some(sxr_with_scenario(&scaled, scenario))
        } else {
            None
        };
        Ok(DsaEntry {
            utterance: item.id.clone(),
            triple: w,
            interf_collapsed: collapse,
            path,
            report,
            wer: None,
            wer_stats: None,
            error: None,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{sxr, Db};
    use crate::projection::decompose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_wf(rng: &mut ChaCha8Rng, t: usize) -> Waveform {
        Waveform::new((0..t).map(|_| rng.gen_range(-1.0..1.0)).collect(), 8000).unwrap()
    }

    fn refs(rng: &mut ChaCha8Rng, t: usize, multi: bool) -> ReferenceSet {
        let s = rand_wf(rng, t);
        let i = multi.then(|| rand_wf(rng, t));
        let n = rand_wf(rng, t);
        ReferenceSet::from_components(s, i, n).unwrap()
    }

    /// Deterministic nonlinear "enhancer": soft-thresholded observation.
    fn shrink(r: &ReferenceSet) -> Result<Waveform> {
        r.observed
            .with_samples(r.observed.samples().iter().map(|v| v.signum() * (v.abs() - 0.3).max(0.0)).collect())
    }

    #[test]
    fn default_axis_values() {
        let a = default_axis();
        assert_eq!(a.len(), 15);
        assert_eq!(a[0], 0.1);
        assert_eq!(a[14], 1.5);
        assert_eq!(DsaGrid::default().points(false).unwrap().len(), 3375);
        assert_eq!(DsaGrid::default().points(true).unwrap().len(), 225);
    }

    #[test]
    fn triple_validation() {
        assert!(ScalingTriple::new(-0.1, 1.0, 1.0).is_err());
        assert!(ScalingTriple::new(1.0, f64::NAN, 1.0).is_err());
        assert!(ScalingTriple::new(0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn identity_and_zero_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = refs(&mut rng, 64, true);
        let x = shrink(&r).unwrap();
        let d = decompose(&x, &r, 2).unwrap();
        let back = dsa_synthesize(&d, ScalingTriple::IDENTITY).unwrap();
        let err: f64 = back.samples().iter().zip(x.samples()).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(err.sqrt() <= 1e-10 * x.energy().sqrt());

        let only_target = dsa_synthesize(&d, ScalingTriple::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(only_target, d.target);
        let rep = sxr(&d.rescaled(0.0, 0.0, 0.0).unwrap());
        assert_eq!(rep.sdr_db, Db::PosInf);
        assert_eq!(rep.sar_db, Db::PosInf);
    }

    #[test]
    fn rescaled_report_matches_redecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let r = refs(&mut rng, 96, true);
        let x = shrink(&r).unwrap();
        let d = decompose(&x, &r, 2).unwrap();
        let w = ScalingTriple::new(0.4, 1.3, 0.7).unwrap();
        let analytic = sxr(&d.rescaled(w.w_interf, w.w_noise, w.w_artif).unwrap());
        let direct = sxr(&decompose(&dsa_synthesize(&d, w).unwrap(), &r, 2).unwrap());
        for (a, b) in [
            (analytic.sdr_db, direct.sdr_db),
            (analytic.sir_db, direct.sir_db),
            (analytic.snr_db, direct.snr_db),
            (analytic.sar_db, direct.sar_db),
        ] {
            assert!((a.finite().unwrap() - b.finite().unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn sar_increases_as_artifact_weight_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let r = refs(&mut rng, 80, false);
        let d = decompose(&shrink(&r).unwrap(), &r, 2).unwrap();
        let sars: Vec<f64> = default_axis()
            .iter()
            .rev()
            .map(|&wa| sxr(&d.rescaled(1.0, 1.0, wa).unwrap()).sar_db.finite().unwrap())
            .collect();
        assert!(sars.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn identity_grid_run_reproduces_enhanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let dir = tempfile::tempdir().unwrap();
        let items: Vec<DsaItem> = (0..3)
            .map(|k| DsaItem {
                id: format!("utt{k}"),
                refs: refs(&mut rng, 64, k != 1),
                transcript: None,
            })
            .collect();
        let mut cfg = DsaConfig::new(dir.path(), 2);
        cfg.grid = DsaGrid::uniform(vec![1.0]);
        let m = dsa_grid_run(&items, |it: &DsaItem| shrink(&it.refs), &cfg).unwrap();
        assert_eq!(m.entries.len(), 3);
        for (e, item) in m.entries.iter().zip(&items) {
            let x = shrink(&item.refs).unwrap();
            let y = crate::wav::read_wav(&e.path).unwrap();
            // Files hold f32 samples.
            let err = y.samples().iter().zip(x.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6);
            assert!(e.wer.is_none());
        }
    }

    #[test]
    fn single_talker_collapses_interference_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let r = refs(&mut rng, 48, false);
        let d = decompose(&shrink(&r).unwrap(), &r, 1).unwrap();
        let a = dsa_synthesize(&d, ScalingTriple::new(0.1, 0.5, 0.9).unwrap()).unwrap();
        let b = dsa_synthesize(&d, ScalingTriple::new(1.5, 0.5, 0.9).unwrap()).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let items = vec![DsaItem {
            id: "st".into(),
            refs: r,
            transcript: None,
        }];
        let mut cfg = DsaConfig::new(dir.path(), 1);
        cfg.write_signals = false;
        let m = dsa_grid_run(&items, |it: &DsaItem| shrink(&it.refs), &cfg).unwrap();
        assert_eq!(m.entries.len(), 225);
        assert!(m.entries.iter().all(|e| e.interf_collapsed));
    }

    #[test]
    fn manifest_round_trip_and_pooling() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let dir = tempfile::tempdir().unwrap();
        let items: Vec<DsaItem> = (0..2)
            .map(|k| DsaItem {
                id: format!("u{k}"),
                refs: refs(&mut rng, 32, true),
                transcript: Some(Transcript::parse("a b c d")),
            })
            .collect();
        let mut cfg = DsaConfig::new(dir.path(), 1);
        cfg.grid = DsaGrid::uniform(vec![0.5, 1.0]);
        cfg.write_signals = false;
        let mut m = dsa_grid_run(&items, |it: &DsaItem| shrink(&it.refs), &cfg).unwrap();
        assert_eq!(m.entries.len(), 16);

        let refs_map: HashMap<String, Transcript> =
            items.iter().map(|d| (d.id.clone(), d.transcript.clone().unwrap())).collect();
        let hyps: HashMap<String, Transcript> = m
            .entries
            .iter()
            .map(|e| {
                let h = if e.utterance == "u0" { "a b c d" } else { "a b" };
                (e.key(), Transcript::parse(h))
            })
            .collect();
        assert_eq!(m.attach_hypotheses(&refs_map, &hyps).unwrap(), 16);

        let mut buf = Vec::new();
        m.write_jsonl(&mut buf).unwrap();
        let back = DsaManifest::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, m);

        let pooled = pool_by_grid(&m);
        assert_eq!(pooled.len(), 8);
        // 0 + 2 edits over 4 + 4 words.
        assert!(pooled.iter().all(|g| g.corpus_wer == Some(0.25) && g.entries == 2));
    }

    #[test]
    fn failing_enhancer_skips_utterance() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let dir = tempfile::tempdir().unwrap();
        let items = vec![
            DsaItem {
                id: "ok".into(),
                refs: refs(&mut rng, 16, false),
                transcript: None,
            },
            DsaItem {
                id: "bad".into(),
                refs: refs(&mut rng, 20, false),
                transcript: None,
            },
        ];
        let mut cfg = DsaConfig::new(dir.path(), 1);
        cfg.grid = DsaGrid::uniform(vec![1.0]);
        cfg.write_signals = false;
        let m = dsa_grid_run(
            &items,
            |item: &DsaItem| {
                if item.refs.len() == 20 {
                    Err(Error::Enhancement("model exploded".into()))
                } else {
                    shrink(&item.refs)
                }
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].utterance, "ok");
    }

    #[cfg(unix)]
    #[test]
    fn asr_hook_failures_are_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let dir = tempfile::tempdir().unwrap();
        let items = vec![DsaItem {
            id: "u".into(),
            refs: refs(&mut rng, 16, false),
            transcript: Some(Transcript::parse("hello there")),
        }];
        let mut cfg = DsaConfig::new(dir.path(), 1);
        cfg.grid = DsaGrid::uniform(vec![1.0]);

        cfg.asr = Some(AsrHook {
            program: "sh".into(),
            args: vec!["-c".into(), "echo hello world".into(), "hook".into()],
            workers: 2,
        });
        let m = dsa_grid_run(&items, |it: &DsaItem| shrink(&it.refs), &cfg).unwrap();
        assert_eq!(m.entries[0].wer, Some(0.5));

        cfg.asr = Some(AsrHook {
            program: "sh".into(),
            args: vec!["-c".into(), "exit 3".into(), "hook".into()],
            workers: 1,
        });
        let m = dsa_grid_run(&items, |it: &DsaItem| shrink(&it.refs), &cfg).unwrap();
        assert!(m.entries[0].wer.is_none());
        assert!(m.entries[0].error.as_deref().unwrap().contains("exited"));
    }
}
