//! Level-controlled synthetic mixtures `y = s + i + n`.
//!
//! Levels are whole-utterance energy ratios: `SNR = 10·log10(‖s‖²/‖n‖²)`
//! and `SIR = 10·log10(‖s‖²/‖i‖²)`. The stored references are the rescaled
//! signals, so the mixture identity holds exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::Correlator;
use crate::error::{Error, Result};
use crate::signal::{ReferenceSet, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub target_snr_db: f64,
    /// Absent for a single-talker mixture.
    #[serde(default)]
    pub target_sir_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl MixSpec {
    pub fn new(target_snr_db: f64, target_sir_db: Option<f64>, seed: u64) -> Self {
        MixSpec {
            target_snr_db,
            target_sir_db,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.target_snr_db.is_finite() {
            return Err(Error::param("target_snr_db", "must be finite"));
        }
        if matches!(self.target_sir_db, Some(v) if !v.is_finite()) {
            return Err(Error::param("target_sir_db", "must be finite"));
        }
        Ok(())
    }
}

/// Optional impulse responses applied to each signal before level setting.
#[derive(Debug, Clone, Default)]
pub struct ImpulseResponses {
    pub source: Option<Waveform>,
    pub interference: Option<Waveform>,
    pub noise: Option<Waveform>,
}

/// A range of mixing levels, sampled uniformly in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRange {
    pub min_db: f64,
    pub max_db: f64,
}

impl LevelRange {
    pub const fn fixed(db: f64) -> Self {
        LevelRange { min_db: db, max_db: db }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min_db == self.max_db {
            self.min_db
        } else {
            rng.gen_range(self.min_db..=self.max_db)
        }
    }
}

/// Mixing conditions for one dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixConditions {
    pub snr: LevelRange,
    pub sir: Option<LevelRange>,
}

impl MixConditions {
    /// Single talker: training and development at 0–10 dB SNR.
    pub const SINGLE_TALKER_TRAIN: MixConditions = MixConditions {
        snr: LevelRange { min_db: 0.0, max_db: 10.0 },
        sir: None,
    };
    pub const SINGLE_TALKER_EVAL: MixConditions = MixConditions {
        snr: LevelRange::fixed(0.0),
        sir: None,
    };
    /// Multi talker: training and development at 5–20 dB SNR and SIR.
    pub const MULTI_TALKER_TRAIN: MixConditions = MixConditions {
        snr: LevelRange { min_db: 5.0, max_db: 20.0 },
        sir: Some(LevelRange { min_db: 5.0, max_db: 20.0 }),
    };
    pub const MULTI_TALKER_EVAL: MixConditions = MixConditions {
        snr: LevelRange::fixed(10.0),
        sir: Some(LevelRange::fixed(5.0)),
    };

    /// Draws one [`MixSpec`]; the same `seed` always gives the same spec.
    pub fn draw(&self, seed: u64) -> MixSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snr = self.snr.sample(&mut rng);
        let sir = self.sir.map(|r| r.sample(&mut rng));
        MixSpec::new(snr, sir, seed)
    }
}

fn convolve(x: &Waveform, h: &Waveform) -> Result<Waveform> {
    x.check_compatible_rate("impulse response", h)?;
    let c = Correlator::new(x.len(), h.len());
    let xs = c.spectrum(x.samples());
    let hs = c.spectrum(h.samples());
    let prod = xs.iter().zip(&hs).map(|(a, b)| a * b).collect();
    x.with_samples(c.synthesize(prod))
}

fn crop(x: &Waveform, len: usize, field: &str, rng: &mut ChaCha8Rng) -> Result<Waveform> {
    if x.len() < len {
        return Err(Error::LengthMismatch {
            field: field.to_string(),
            expected: len,
            found: x.len(),
        });
    }
    let offset = rng.gen_range(0..=x.len() - len);
    x.with_samples(x.samples()[offset..offset + len].to_vec())
}

fn scale_to(x: &Waveform, source_energy: f64, target_db: f64, field: &str) -> Result<Waveform> {
    let e = x.energy();
    if e == 0.0 {
        return Err(Error::ZeroEnergy { field: field.to_string() });
    }
    let gain = (source_energy / (e * 10f64.powf(target_db / 10.0))).sqrt();
    x.scaled(gain)
}

/// Builds a mixture at the requested levels.
///
/// `noise` (and `interference`) may be longer than `source`; a window of the
/// source length is cut at a seed-determined offset.
pub fn mix(
    source: &Waveform,
    interference: Option<&Waveform>,
    noise: &Waveform,
    spec: &MixSpec,
    rirs: &ImpulseResponses,
) -> Result<ReferenceSet> {
    spec.validate()?;
    source.check_compatible_rate("noise", noise)?;
    if let Some(i) = interference {
        source.check_compatible_rate("interference", i)?;
    }
    match (interference.is_some(), spec.target_sir_db.is_some()) {
        (true, false) => return Err(Error::param("target_sir_db", "required when an interferer is given")),
        (false, true) => return Err(Error::param("target_sir_db", "given without an interferer")),
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = source.len();
    let interference = interference
        .map(|i| crop(i, len, "interference", &mut rng))
        .transpose()?;
    let noise = crop(noise, len, "noise", &mut rng)?;

    let reverb = |x: Waveform, h: &Option<Waveform>| match h {
        Some(h) => convolve(&x, h),
        None => Ok(x),
    };
    let source = reverb(source.clone(), &rirs.source)?;
    let interference = interference.map(|i| reverb(i, &rirs.interference)).transpose()?;
    let noise = reverb(noise, &rirs.noise)?;

    let es = source.energy();
    if es == 0.0 {
        return Err(Error::ZeroEnergy { field: "source".into() });
    }
    let noise = scale_to(&noise, es, spec.target_snr_db, "noise")?;
    let interference = match (interference, spec.target_sir_db) {
        (Some(i), Some(sir)) => Some(scale_to(&i, es, sir, "interference")?),
        _ => None,
    };
    ReferenceSet::from_components(source, interference, noise)
}
