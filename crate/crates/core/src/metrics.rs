//! SDR, SIR, SNR and SAR from a [`Decomposition`].
//!
//! Ratios are reported as [`Db`] values. Zero energies produce sentinels
//! instead of clamped numbers, so that dataset averages are never silently
//! skewed by error-free components.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::projection::{Decomposition, Projectors};
use crate::signal::{energy, ReferenceSet, Waveform};

/// Energies at or below this fraction of the decomposed signal's energy
/// count as exactly zero (a 200 dB dynamic range).
pub const ZERO_ENERGY_REL: f64 = 1e-20;

/// A decibel value on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Db {
    Finite(f64),
    PosInf,
    NegInf,
    /// `0 / 0`.
    Undefined,
}

impl Db {
    /// `10·log10(num / den)` with sentinels for zero energies.
    pub fn ratio(num: f64, den: f64) -> Db {
        match (num == 0.0, den == 0.0) {
            (true, true) => Db::Undefined,
            (false, true) => Db::PosInf,
            (true, false) => Db::NegInf,
            (false, false) => Db::Finite(10.0 * (num / den).log10()),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Db::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Db::Finite(_))
    }

    /// Extended-real subtraction. `∞ − ∞` and anything involving
    /// [`Db::Undefined`] is undefined.
    pub fn minus(self, other: Db) -> Db {
        use Db::*;
        match (self, other) {
            (Undefined, _) | (_, Undefined) => Undefined,
            (Finite(a), Finite(b)) => Finite(a - b),
            (PosInf, PosInf) | (NegInf, NegInf) => Undefined,
            (PosInf, _) | (_, NegInf) => PosInf,
            (NegInf, _) | (_, PosInf) => NegInf,
        }
    }

    /// Total order used for monotonicity checks; undefined compares as `None`.
    pub fn partial_cmp_ext(self, other: Db) -> Option<std::cmp::Ordering> {
        let key = |d: Db| match d {
            Db::NegInf => Some(f64::NEG_INFINITY),
            Db::PosInf => Some(f64::INFINITY),
            Db::Finite(v) => Some(v),
            Db::Undefined => None,
        };
        key(self)?.partial_cmp(&key(other)?)
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Db::Finite(v) => write!(f, "{v}"),
            Db::PosInf => f.write_str("+inf"),
            Db::NegInf => f.write_str("-inf"),
            Db::Undefined => f.write_str("undefined"),
        }
    }
}

impl FromStr for Db {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+inf" => Ok(Db::PosInf),
            "-inf" => Ok(Db::NegInf),
            "undefined" => Ok(Db::Undefined),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Db::Finite)
                .ok_or_else(|| Error::Format {
                    context: "dB value".into(),
                    reason: format!("cannot parse `{s}`"),
                }),
        }
    }
}

// Finite values serialize as numbers, sentinels as string tokens.
impl Serialize for Db {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Db::Finite(v) => ser.serialize_f64(*v),
            other => ser.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tok(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) if v.is_finite() => Ok(Db::Finite(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("non-finite dB number {v}"))),
            Raw::Tok(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SingleTalker,
    MultiTalker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SxrReport {
    pub sdr_db: Db,
    pub sir_db: Db,
    pub snr_db: Db,
    pub sar_db: Db,
    pub num_delays: usize,
    pub scenario: Scenario,
}

/// Component energies behind one report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub target: f64,
    pub interf: f64,
    pub noise: f64,
    pub artif: f64,
    /// `‖e_interf + e_noise + e_artif‖²`.
    pub total_error: f64,
    /// `‖s_target + e_interf‖²`.
    pub target_interf: f64,
    /// `‖s_target + e_interf + e_noise‖²`.
    pub linear_part: f64,
}

impl Energies {
    pub fn of(d: &Decomposition) -> Energies {
        let t = d.target.samples();
        let i = d.interf_err.samples();
        let n = d.noise_err.samples();
        let a = d.artif_err.samples();
        let mut e = Energies {
            target: energy(t),
            interf: energy(i),
            noise: energy(n),
            artif: energy(a),
            total_error: 0.0,
            target_interf: 0.0,
            linear_part: 0.0,
        };
        let mut whole = 0.0;
        for k in 0..t.len() {
            let ti = t[k] + i[k];
            let lin = ti + n[k];
            let err = i[k] + n[k] + a[k];
            e.total_error += err * err;
            e.target_interf += ti * ti;
            e.linear_part += lin * lin;
            whole += (lin + a[k]) * (lin + a[k]);
        }
        let floor = ZERO_ENERGY_REL * whole;
        for v in [
            &mut e.target,
            &mut e.interf,
            &mut e.noise,
            &mut e.artif,
            &mut e.total_error,
            &mut e.target_interf,
            &mut e.linear_part,
        ] {
            if *v <= floor {
                *v = 0.0;
            }
        }
        e
    }
}

/// SDR/SIR/SNR/SAR of one decomposition.
pub fn sxr(d: &Decomposition) -> SxrReport {
    let scenario = if d.interf_err.samples().iter().all(|&v| v == 0.0) {
        Scenario::SingleTalker
    } else {
        Scenario::MultiTalker
    };
    sxr_with_scenario(d, scenario)
}

/// Like [`sxr`], with the scenario taken from the reference set instead of
/// inferred from the interference error.
pub fn sxr_with_scenario(d: &Decomposition, scenario: Scenario) -> SxrReport {
    let e = Energies::of(d);
    SxrReport {
        sdr_db: Db::ratio(e.target, e.total_error),
        sir_db: if scenario == Scenario::SingleTalker {
            Db::PosInf
        } else {
            Db::ratio(e.target, e.interf)
        },
        snr_db: Db::ratio(e.target_interf, e.noise),
        sar_db: Db::ratio(e.linear_part, e.artif),
        num_delays: d.num_delays,
        scenario,
    }
}

pub fn scenario_of(refs: &ReferenceSet) -> Scenario {
    if refs.is_single_talker() {
        Scenario::SingleTalker
    } else {
        Scenario::MultiTalker
    }
}

/// Decomposes and evaluates `enhanced` in one step.
pub fn evaluate(enhanced: &Waveform, refs: &ReferenceSet, num_delays: usize) -> Result<SxrReport> {
    refs.check_signal("enhanced", enhanced)?;
    let p = Projectors::new(refs, num_delays)?;
    evaluate_with(&p, enhanced, scenario_of(refs))
}

pub fn evaluate_with(p: &Projectors, enhanced: &Waveform, scenario: Scenario) -> Result<SxrReport> {
    Ok(sxr_with_scenario(&p.decompose(enhanced)?, scenario))
}

/// Evaluates many utterances, one result per input in input order.
pub fn evaluate_batch(
    items: &[(Waveform, ReferenceSet)],
    num_delays: usize,
    exec: Execution,
) -> Vec<Result<SxrReport>> {
    par::map_collect(exec, items, |(enh, refs)| {
        refs.check_signal("enhanced", enh)?;
        let p = Projectors::with_execution(refs, num_delays, Execution::Sequential)?;
        evaluate_with(&p, enh, scenario_of(refs))
    })
}

/// `SAR(modified) − SAR(enhanced)` from two decompositions.
pub fn sar_improvement(
    enhanced: &Waveform,
    modified: &Waveform,
    refs: &ReferenceSet,
    num_delays: usize,
) -> Result<Db> {
    refs.check_signal("enhanced", enhanced)?;
    refs.check_signal("modified", modified)?;
    let p = Projectors::new(refs, num_delays)?;
    sar_improvement_with(&p, enhanced, modified)
}

pub fn sar_improvement_with(p: &Projectors, enhanced: &Waveform, modified: &Waveform) -> Result<Db> {
    let before = sxr(&p.decompose(enhanced)?).sar_db;
    let after = sxr(&p.decompose(modified)?).sar_db;
    Ok(after.minus(before))
}

/// Mean of finite values with the sentinels counted separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DbSummary {
    pub mean_db: Option<f64>,
    pub finite: usize,
    pub pos_inf: usize,
    pub neg_inf: usize,
    pub undefined: usize,
}

impl DbSummary {
    pub fn of(values: impl IntoIterator<Item = Db>) -> DbSummary {
        let mut s = DbSummary::default();
        let mut sum = 0.0;
        for v in values {
            match v {
                Db::Finite(x) => {
                    s.finite += 1;
                    sum += x;
                }
                Db::PosInf => s.pos_inf += 1,
                Db::NegInf => s.neg_inf += 1,
                Db::Undefined => s.undefined += 1,
            }
        }
        if s.finite > 0 {
            s.mean_db = Some(sum / s.finite as f64);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub utterances: usize,
    pub sdr: DbSummary,
    pub sir: DbSummary,
    pub snr: DbSummary,
    pub sar: DbSummary,
}

/// Per-utterance mean over a dataset.
pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a SxrReport> + Clone) -> AggregateReport {
    let it = reports.clone().into_iter();
    AggregateReport {
        utterances: it.count(),
        sdr: DbSummary::of(reports.clone().into_iter().map(|r| r.sdr_db)),
        sir: DbSummary::of(reports.clone().into_iter().map(|r| r.sir_db)),
        snr: DbSummary::of(reports.clone().into_iter().map(|r| r.snr_db)),
        sar: DbSummary::of(reports.into_iter().map(|r| r.sar_db)),
    }
}
