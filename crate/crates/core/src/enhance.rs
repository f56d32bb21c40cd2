//! Two deterministic reference enhancers: an oracle Wiener mask computed
//! from the reference spectra, and blind magnitude spectral subtraction.
//! Both are nonlinear and therefore leave artifact errors.

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{ReferenceSet, Waveform};
use crate::stft::{Spectrogram, Stft, StftConfig};

/// Applies `|S|² / (|S|² + |I|² + |N|²)` to the observed signal's STFT.
pub fn oracle_wiener(refs: &ReferenceSet, cfg: StftConfig) -> Result<Waveform> {
    let stft = Stft::new(cfg)?;
    let s = stft.analyze(refs.source.samples());
    let n = stft.analyze(refs.noise.samples());
    let i = refs.interference.as_ref().map(|i| stft.analyze(i.samples()));
    let mut y = stft.analyze(refs.observed.samples());
    for (f, frame) in y.frames.iter_mut().enumerate() {
        for (b, bin) in frame.iter_mut().enumerate() {
            let ps = s.frames[f][b].norm_sqr();
            let pi = i.as_ref().map_or(0.0, |i| i.frames[f][b].norm_sqr());
            let den = ps + pi + n.frames[f][b].norm_sqr();
            let mask = if den > 0.0 { ps / den } else { 0.0 };
            *bin *= mask;
        }
    }
    refs.observed.with_samples(stft.synthesize(&y))
}

/// Subtracts the mean magnitude of the first `noise_profile_frames` full
/// frames from every frame, keeping at least `floor·|Y|`, and resynthesizes
/// with the observed phase.
pub fn spectral_subtract(
    obs: &Waveform,
    noise_profile_frames: usize,
    cfg: StftConfig,
    floor: f64,
) -> Result<Waveform> {
    if !(0.0..=1.0).contains(&floor) {
        return Err(Error::param("floor", format!("must lie in [0, 1], got {floor}")));
    }
    if noise_profile_frames == 0 {
        return Err(Error::param("noise_profile_frames", "must be at least 1"));
    }
    let stft = Stft::new(cfg)?;
    let needed = (noise_profile_frames - 1) * cfg.hop + cfg.frame_len;
    let x = obs.samples();
    if x.len() < needed {
        return Err(Error::param(
            "noise_profile_frames",
            format!(
                "{noise_profile_frames} frames need {needed} samples, signal has {}",
                x.len()
            ),
        ));
    }

    let mut profile = vec![0.0; stft.num_bins()];
    for k in 0..noise_profile_frames {
        let spec = stft.frame_spectrum(x, (k * cfg.hop) as isize);
        profile.iter_mut().zip(&spec).for_each(|(p, c)| *p += c.norm());
    }
    profile.iter_mut().for_each(|p| *p /= noise_profile_frames as f64);

    let mut y: Spectrogram = stft.analyze(x);
    for frame in &mut y.frames {
        for (bin, noise) in frame.iter_mut().zip(&profile) {
            let mag = bin.norm();
            if mag == 0.0 {
                continue;
            }
            let kept = (mag - noise).max(floor * mag);
            *bin *= Complex64::new(kept / mag, 0.0);
        }
    }
    obs.with_samples(stft.synthesize(&y))
}
