//! Short-time Fourier transform with weighted overlap-add resynthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// Periodic Hann.
    #[default]
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    #[serde(default)]
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            frame_len: 1024,
            hop: 256,
            window: Window::Hann,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_multiple_of(2) {
            return Err(Error::param("frame_len", format!("must be even and >= 2, got {}", self.frame_len)));
        }
        if self.hop == 0 || self.hop >= self.frame_len {
            return Err(Error::param("hop", format!("must be in 1..{}, got {}", self.frame_len, self.hop)));
        }
        Ok(())
    }

    pub fn window(&self) -> Vec<f64> {
        let n = self.frame_len as f64;
        match self.window {
            Window::Hann => (0..self.frame_len).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n).cos()).collect(),
        }
    }

    /// Zeros prepended before framing.
    fn head_pad(&self) -> usize {
        self.frame_len - self.hop
    }
}

/// Complex spectra of the frames of one signal.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    len: usize,
}

impl Spectrogram {
    /// Length of the analyzed signal.
    pub fn signal_len(&self) -> usize {
        self.len
    }
}

#[derive(Clone)]
pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("cfg", &self.cfg).finish()
    }
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Stft {
            cfg,
            window: cfg.window(),
            forward: planner.plan_fft_forward(cfg.frame_len),
            inverse: planner.plan_fft_inverse(cfg.frame_len),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn num_bins(&self) -> usize {
        self.cfg.frame_len / 2 + 1
    }

    /// Spectrum of the windowed frame starting at `x[start]`; samples past
    /// the end of `x` read as zero.
    pub fn frame_spectrum(&self, x: &[f64], start: isize) -> Vec<Complex64> {
        let mut buf: Vec<f64> = (0..self.cfg.frame_len)
            .map(|k| {
                let i = start + k as isize;
                if i >= 0 && (i as usize) < x.len() {
                    x[i as usize] * self.window[k]
                } else {
                    0.0
                }
            })
            .collect();
        let mut out = self.forward.make_output_vec();
        self.forward.process(&mut buf, &mut out).expect("sizes come from the plan");
        out
    }

    fn num_frames(&self, len: usize) -> usize {
        // Frames continue until a full frame of padding follows the signal.
        (self.cfg.head_pad() + len + self.cfg.frame_len).div_ceil(self.cfg.hop)
    }

    pub fn analyze(&self, x: &[f64]) -> Spectrogram {
        let pad = self.cfg.head_pad() as isize;
        let frames = (0..self.num_frames(x.len()))
            .map(|k| self.frame_spectrum(x, (k * self.cfg.hop) as isize - pad))
            .collect();
        Spectrogram { frames, len: x.len() }
    }

    /// Weighted overlap-add: each frame is windowed again and the sum is
    /// divided by the accumulated squared window.
    pub fn synthesize(&self, spec: &Spectrogram) -> Vec<f64> {
        let n = self.cfg.frame_len;
        let pad = self.cfg.head_pad();
        let total = spec.frames.len() * self.cfg.hop + n;
        let mut acc = vec![0.0; total];
        let mut norm = vec![0.0; total];
        let scale = 1.0 / n as f64;
        let mut out = self.inverse.make_output_vec();
        for (k, frame) in spec.frames.iter().enumerate() {
            let mut f = frame.clone();
            let last = f.len() - 1;
            f[0].im = 0.0;
            f[last].im = 0.0;
            self.inverse.process(&mut f, &mut out).expect("sizes come from the plan");
            let start = k * self.cfg.hop;
            for j in 0..n {
                acc[start + j] += out[j] * scale * self.window[j];
                norm[start + j] += self.window[j] * self.window[j];
            }
        }
        (pad..pad + spec.len)
            .map(|i| if norm[i] > 1e-12 { acc[i] / norm[i] } else { 0.0 })
            .collect()
    }
}
