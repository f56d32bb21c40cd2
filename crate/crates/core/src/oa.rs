//! Observation adding: mixing part of the observed signal back into the
//! enhanced one.
//!
//! Since `y` lies in the span of the references, `ŝ_OA = (1−ω)ŝ + ωy` has
//! artifact error `(1−ω)·e_artif` while its projected part grows by `ωy`.
//! Whenever `⟨ŝ, y⟩ > 0` this strictly raises SAR for every `ω ∈ (0, 1)`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{scenario_of, Db, SxrReport};
use crate::par::{self, Execution};
use crate::projection::Projectors;
use crate::signal::{dot, energy, ReferenceSet, Waveform};
use crate::wer::WerStats;

/// `{0.0, 0.1, …, 1.0}`.
pub fn default_weights() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaConfig {
    pub weight: f64,
    #[serde(default = "default_weights")]
    pub sweep: Vec<f64>,
}

impl Default for OaConfig {
    fn default() -> Self {
        OaConfig {
            weight: 0.5,
            sweep: default_weights(),
        }
    }
}

impl OaConfig {
    pub fn validate(&self) -> Result<()> {
        check_weight(self.weight)?;
        self.sweep.iter().try_for_each(|&w| check_weight(w))
    }
}

fn check_weight(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::param("weight", format!("must lie in [0, 1], got {w}")))
    }
}

/// `(1−w)·enh + w·obs`. The endpoints return the inputs bit for bit.
pub fn oa_interpolate(enh: &Waveform, obs: &Waveform, w: f64) -> Result<Waveform> {
    check_weight(w)?;
    enh.check_compatible("observed", obs)?;
    if w == 0.0 {
        return Ok(enh.clone());
    }
    if w == 1.0 {
        return Ok(obs.clone());
    }
    enh.with_samples(
        enh.samples()
            .iter()
            .zip(obs.samples())
            .map(|(e, y)| (1.0 - w) * e + w * y)
            .collect(),
    )
}

/// `enh + w·obs`. Equals `oa_interpolate(enh, obs, w/(1+w))` scaled by
/// `1+w`, so every SXR metric agrees with the interpolated form.
pub fn oa_additive(enh: &Waveform, obs: &Waveform, w: f64) -> Result<Waveform> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::param("weight", format!("must be finite and >= 0, got {w}")));
    }
    enh.check_compatible("observed", obs)?;
    enh.with_samples(enh.samples().iter().zip(obs.samples()).map(|(e, y)| e + w * y).collect())
}

/// `⟨enh, obs⟩` and whether it is strictly positive, the sufficient
/// condition for a SAR gain.
pub fn oa_condition(enh: &Waveform, obs: &Waveform) -> Result<(f64, bool)> {
    enh.check_compatible("observed", obs)?;
    let ip = enh.dot(obs);
    Ok((ip, ip > 0.0))
}

/// SAR gain of `oa_interpolate(enh, y, w)` over `enh` from a single
/// projection of `enh`:
///
/// `10·log10(1 + (w²‖y‖² + 2(1−w)w⟨P ŝ, y⟩) / ((1−w)²‖P ŝ‖²))`
///
/// with `P = P_{s,i,n}`. Uses `P y = y`, so it is only meaningful when the
/// observed signal is the sum of the references.
pub fn sari_closed_form(p: &Projectors, enh: &Waveform, obs: &Waveform, w: f64) -> Result<Db> {
    check_weight(w)?;
    enh.check_compatible("observed", obs)?;
    let projected = p.apply(enh.samples()).all;
    let py2 = energy(&projected);
    let num = w * w * energy(obs.samples()) + 2.0 * (1.0 - w) * w * dot(&projected, obs.samples());
    let den = (1.0 - w).powi(2) * py2;
    Ok(Db::ratio(den + num, den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weight: f64,
    pub report: SxrReport,
}

/// Metrics of `oa_interpolate(enh, y, w)` for every weight.
pub fn oa_sweep(enh: &Waveform, refs: &ReferenceSet, num_delays: usize, weights: &[f64]) -> Result<Vec<SweepPoint>> {
    refs.check_signal("enhanced", enh)?;
    let p = Projectors::new(refs, num_delays)?;
    oa_sweep_with(&p, enh, refs, weights, Execution::default())
}

pub fn oa_sweep_with(
    p: &Projectors,
    enh: &Waveform,
    refs: &ReferenceSet,
    weights: &[f64],
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    weights.iter().try_for_each(|&w| check_weight(w))?;
    let scenario = scenario_of(refs);
    par::map_collect(exec, weights, |&w| {
        let modified = oa_interpolate(enh, &refs.observed, w)?;
        Ok(SweepPoint {
            weight: w,
            report: crate::metrics::evaluate_with(p, &modified, scenario)?,
        })
    })
    .into_iter()
    .collect()
}

/// Picks the weight with the lowest corpus WER over development utterances.
/// Ties go to the smaller weight.
pub fn tune_weight(scores: &[(f64, WerStats)]) -> Option<(f64, f64)> {
    let mut pooled: BTreeMap<u64, WerStats> = BTreeMap::new();
    for &(w, st) in scores {
        let acc = pooled.entry(w.to_bits()).or_default();
        *acc = *acc + st;
    }
    pooled
        .into_iter()
        .filter(|(_, st)| st.ref_words > 0)
        .map(|(bits, st)| (f64::from_bits(bits), st.rate()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
}

/// Deterministic key for an OA-modified utterance, used to match
/// hypothesis transcripts.
pub fn sweep_key(utterance: &str, w: f64) -> String {
    format!("{utterance}__oa{w:04.2}")
}

/// Groups per-utterance hypothesis scores by weight, for [`tune_weight`].
pub fn collect_sweep_scores(
    utterances: &[String],
    weights: &[f64],
    references: &HashMap<String, crate::wer::Transcript>,
    hypotheses: &HashMap<String, crate::wer::Transcript>,
) -> Result<Vec<(f64, WerStats)>> {
    let mut out = Vec::new();
    for u in utterances {
        let Some(r) = references.get(u) else { continue };
        for &w in weights {
            if let Some(h) = hypotheses.get(&sweep_key(u, w)) {
                out.push((w, WerStats::between(r, h)?));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{evaluate, sar_improvement};
    use crate::wer::Transcript;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wf(v: Vec<f64>) -> Waveform {
        Waveform::new(v, 16000).unwrap()
    }

    fn rand_wf(rng: &mut ChaCha8Rng, t: usize) -> Waveform {
        wf((0..t).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn instance(rng: &mut ChaCha8Rng, t: usize) -> (ReferenceSet, Waveform) {
        let s = rand_wf(rng, t);
        let i = rand_wf(rng, t);
        let n = rand_wf(rng, t);
        let refs = ReferenceSet::from_components(s, Some(i), n).unwrap();
        let mut e = rand_wf(rng, t);
        // A rough estimate of s plus junk, so ⟨ŝ, y⟩ > 0.
        e = e.with_samples(e.samples().iter().zip(refs.source.samples()).map(|(a, b)| 0.5 * a + b).collect()).unwrap();
        (refs, e)
    }

    #[test]
    fn endpoints_and_midpoint() {
        let e = wf(vec![2.0, 0.0]);
        let y = wf(vec![0.0, 2.0]);
        assert_eq!(oa_interpolate(&e, &y, 0.0).unwrap(), e);
        assert_eq!(oa_interpolate(&e, &y, 1.0).unwrap(), y);
        assert_eq!(oa_interpolate(&e, &y, 0.5).unwrap().samples(), &[1.0, 1.0]);
        assert!(oa_interpolate(&e, &y, 1.5).is_err());
        assert!(oa_interpolate(&e, &y, -0.1).is_err());
    }

    #[test]
    fn additive_form() {
        let e = wf(vec![1.0, -2.0, 3.0]);
        let y = wf(vec![0.5, 0.5, 0.5]);
        assert_eq!(oa_additive(&e, &y, 0.0).unwrap(), e);
        assert_eq!(oa_additive(&y, &y, 1.0).unwrap().samples(), &[1.0, 1.0, 1.0]);
        assert!(oa_additive(&e, &y, -1.0).is_err());
    }

    #[test]
    fn additive_and_interpolated_forms_agree_in_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (refs, e) = instance(&mut rng, 96);
        let w = 0.25;
        let a = evaluate(&oa_additive(&e, &refs.observed, w / (1.0 - w)).unwrap(), &refs, 2).unwrap();
        let b = evaluate(&oa_interpolate(&e, &refs.observed, w).unwrap(), &refs, 2).unwrap();
        for (x, y) in [(a.sdr_db, b.sdr_db), (a.sir_db, b.sir_db), (a.snr_db, b.snr_db), (a.sar_db, b.sar_db)] {
            assert!((x.finite().unwrap() - y.finite().unwrap()).abs() <= 1e-9);
        }
        // Scaling the observation by 2 leaves SAR at +inf.
        let twice = oa_additive(&refs.observed, &refs.observed, 1.0).unwrap();
        assert_eq!(evaluate(&twice, &refs, 2).unwrap().sar_db, Db::PosInf);
    }

    #[test]
    fn condition_signs() {
        let y = wf(vec![1.0, -2.0, 0.5]);
        let (ip, ok) = oa_condition(&y, &y).unwrap();
        assert!(ok && ip > 0.0);
        let neg = y.scaled(-1.0).unwrap();
        let (ip, ok) = oa_condition(&neg, &y).unwrap();
        assert!(!ok && ip < 0.0);
    }

    #[test]
    fn closed_form_matches_two_decompositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (refs, e) = instance(&mut rng, 64);
        let p = Projectors::new(&refs, 2).unwrap();
        let w = 0.3;
        let closed = sari_closed_form(&p, &e, &refs.observed, w).unwrap().finite().unwrap();
        let modified = oa_interpolate(&e, &refs.observed, w).unwrap();
        let direct = sar_improvement(&e, &modified, &refs, 2).unwrap().finite().unwrap();
        assert!((closed - direct).abs() < 1e-6, "{closed} vs {direct}");
        assert!(closed > 0.0);
    }

    #[test]
    fn sweep_endpoints_match_direct_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (refs, e) = instance(&mut rng, 64);
        let pts = oa_sweep(&e, &refs, 2, &[0.0, 1.0]).unwrap();
        assert_eq!(pts[0].report, evaluate(&e, &refs, 2).unwrap());
        assert_eq!(pts[1].report, evaluate(&refs.observed, &refs, 2).unwrap());
        let full = oa_sweep(&e, &refs, 2, &default_weights()).unwrap();
        assert_eq!(full.len(), 11);
        let sar0 = full[0].report.sar_db;
        for pt in &full[1..10] {
            assert_eq!(pt.report.sar_db.partial_cmp_ext(sar0), Some(std::cmp::Ordering::Greater));
        }
    }

    #[test]
    fn tuning_picks_lowest_corpus_wer() {
        let st = |e, n| WerStats { edits: e, ref_words: n };
        let scores = vec![(0.0, st(5, 10)), (0.5, st(2, 10)), (0.5, st(1, 10)), (1.0, st(3, 10))];
        assert_eq!(tune_weight(&scores), Some((0.5, 0.15)));
        assert_eq!(tune_weight(&[]), None);

        let refs: HashMap<String, Transcript> = [("u".to_string(), Transcript::parse("a b"))].into();
        let hyps: HashMap<String, Transcript> = [
            (sweep_key("u", 0.0), Transcript::parse("a")),
            (sweep_key("u", 0.5), Transcript::parse("a b")),
        ]
        .into();
        let s = collect_sweep_scores(&["u".into()], &default_weights(), &refs, &hyps).unwrap();
        assert_eq!(tune_weight(&s), Some((0.5, 0.0)));
    }
}
