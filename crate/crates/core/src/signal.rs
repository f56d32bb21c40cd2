//! Waveform and reference-set data model.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A finite-length, single-channel, uniformly sampled real signal.
///
/// Samples are stored as `f64` regardless of the file bit depth; the
/// normal-equation solves at large delay counts are ill-conditioned in single
/// precision. The sample buffer is shared, so clones are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Arc<[f64]>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::named("waveform", samples, sample_rate)
    }

    /// Like [`Waveform::new`], reporting violations against `field`.
    pub fn named(field: &str, samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal {
                field: field.to_string(),
            });
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                field: field.to_string(),
                index,
            });
        }
        Ok(Waveform {
            samples: samples.into(),
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed waveform; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    pub fn dot(&self, other: &Waveform) -> f64 {
        dot(&self.samples, &other.samples)
    }

    /// Builds a waveform with the same rate from samples computed here.
    /// Non-finite output is rejected.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Waveform::new(samples, self.sample_rate)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|x| c * x).collect())
    }

    pub(crate) fn check_compatible_rate(&self, field: &str, other: &Waveform) -> Result<()> {
        if self.sample_rate() != other.sample_rate() {
            return Err(Error::SampleRateMismatch {
                field: field.to_string(),
                expected: self.sample_rate(),
                found: other.sample_rate(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_compatible(&self, field: &str, other: &Waveform) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::LengthMismatch {
                field: field.to_string(),
                expected: self.len(),
                found: other.len(),
            });
        }
        if other.sample_rate != self.sample_rate {
            return Err(Error::SampleRateMismatch {
                field: field.to_string(),
                expected: self.sample_rate,
                found: other.sample_rate,
            });
        }
        Ok(())
    }
}

/// Reference signals for one utterance: source `s`, optional interference
/// `i`, noise `n`, and the observed mixture `y`.
///
/// A missing interference signal means a single-talker scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub source: Waveform,
    pub interference: Option<Waveform>,
    pub noise: Waveform,
    pub observed: Waveform,
}

impl ReferenceSet {
    pub fn new(
        source: Waveform,
        interference: Option<Waveform>,
        noise: Waveform,
        observed: Waveform,
    ) -> Result<Self> {
        validate_set(ReferenceSet {
            source,
            interference,
            noise,
            observed,
        })
    }

    /// Builds a set whose observed signal is the exact sum of the others.
    pub fn from_components(
        source: Waveform,
        interference: Option<Waveform>,
        noise: Waveform,
    ) -> Result<Self> {
        source.check_compatible("noise", &noise)?;
        if let Some(i) = &interference {
            source.check_compatible("interference", i)?;
        }
        let mut y: Vec<f64> = source
            .samples()
            .iter()
            .zip(noise.samples())
            .map(|(s, n)| s + n)
            .collect();
        if let Some(i) = &interference {
            y.iter_mut().zip(i.samples()).for_each(|(y, i)| *y += i);
        }
        let observed = Waveform::named("observed", y, source.sample_rate())?;
        Self::new(source, interference, noise, observed)
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.source.sample_rate()
    }

    pub fn is_single_talker(&self) -> bool {
        self.interference.is_none()
    }

    /// Checks that `x` can be evaluated against this set.
    pub fn check_signal(&self, field: &str, x: &Waveform) -> Result<()> {
        self.source.check_compatible(field, x)
    }
}

/// Returns the set unchanged if every shared-length and sample-rate invariant
/// holds. The mixture identity `y = s + i + n` is not checked: externally
/// loaded sets may legitimately violate it.
pub fn validate_set(set: ReferenceSet) -> Result<ReferenceSet> {
    let s = &set.source;
    s.check_compatible("noise", &set.noise)?;
    s.check_compatible("observed", &set.observed)?;
    if let Some(i) = &set.interference {
        s.check_compatible("interference", i)?;
    }
    Ok(set)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}
