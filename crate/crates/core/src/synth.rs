//! Deterministic stand-in signals for tests, benchmarks and demos: a voiced,
//! amplitude-modulated harmonic source and low-pass filtered noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mix::{mix, ImpulseResponses, MixSpec};
use crate::signal::{ReferenceSet, Waveform};

/// Harmonic signal with a wandering pitch and a syllable-rate envelope.
pub fn voiced(len: usize, sample_rate: u32, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let f0 = rng.gen_range(100.0..220.0);
    let vib_rate = rng.gen_range(3.0..6.0);
    let syl_rate = rng.gen_range(2.5..5.0);
    let syl_phase = rng.gen_range(0.0..2.0 * PI);
    let harmonics = ((0.45 * sr / f0) as usize).clamp(1, 30);
    let amps: Vec<f64> = (1..=harmonics)
        .map(|k| rng.gen_range(0.5..1.0) / k as f64)
        .collect();
    let mut phase = 0.0;
    let samples = (0..len)
        .map(|t| {
            let time = t as f64 / sr;
            let f = f0 * (1.0 + 0.05 * (2.0 * PI * vib_rate * time).sin());
            phase += 2.0 * PI * f / sr;
            let env = 0.2 + 0.8 * (0.5 + 0.5 * (2.0 * PI * syl_rate * time + syl_phase).sin()).powi(2);
            let v: f64 = amps
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * phase).sin())
                .sum();
            0.3 * env * v
        })
        .collect();
    Waveform::new(samples, sample_rate).expect("synthesized samples are finite")
}

/// White noise through a one-pole low-pass filter.
pub fn colored_noise(len: usize, sample_rate: u32, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pole = rng.gen_range(0.3..0.8);
    let mut state = 0.0;
    let samples = (0..len)
        .map(|_| {
            state = pole * state + (1.0 - pole) * rng.gen_range(-1.0..1.0);
            state
        })
        .collect();
    Waveform::new(samples, sample_rate).expect("synthesized samples are finite")
}

/// A mixture of synthetic signals at the given levels.
pub fn mixture(
    len: usize,
    sample_rate: u32,
    snr_db: f64,
    sir_db: Option<f64>,
    seed: u64,
) -> Result<ReferenceSet> {
    let base = seed.wrapping_mul(4);
    let s = voiced(len, sample_rate, base);
    let i = sir_db.map(|_| voiced(len, sample_rate, base + 1));
    let n = colored_noise(len, sample_rate, base + 2);
    mix(
        &s,
        i.as_ref(),
        &n,
        &MixSpec::new(snr_db, sir_db, base + 3),
        &ImpulseResponses::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_nontrivial() {
        assert_eq!(voiced(500, 16000, 3), voiced(500, 16000, 3));
        assert_ne!(voiced(500, 16000, 3), voiced(500, 16000, 4));
        assert!(voiced(500, 16000, 3).energy() > 0.0);
        assert!(colored_noise(500, 16000, 3).energy() > 0.0);
        let m = mixture(1000, 16000, 0.0, Some(5.0), 1).unwrap();
        assert!(!m.is_single_talker());
    }
}
