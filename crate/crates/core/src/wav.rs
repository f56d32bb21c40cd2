//! Mono RIFF/WAVE input and output.
//!
//! Reads 16-bit integer PCM (scaled by 1/32768) and 32-bit IEEE float.
//! Writes 32-bit float, so `read_wav(write_wav(x))` is exact for any `x`
//! representable in `f32`.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::Waveform;

fn wav_err(path: &Path, reason: impl ToString) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(wav_err(
            path,
            format!("expected a mono file, found {} channels", spec.channels),
        ));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (fmt, bits) => {
            return Err(wav_err(
                path,
                format!("unsupported encoding: {bits}-bit {fmt:?} (need 16-bit int or 32-bit float)"),
            ))
        }
    };
    let field = path.display().to_string();
    Waveform::named(&field, samples, spec.sample_rate)
}

/// Writes `x` as mono 32-bit float. Samples are rounded to `f32`.
pub fn write_wav(path: impl AsRef<Path>, x: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: x.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in x.samples() {
        w.write_sample(s as f32).map_err(|e| wav_err(path, e))?;
    }
    w.finalize().map_err(|e| wav_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..100).map(|k| f64::from((k as f32 * 0.37).sin() * 1.7)).collect();
        let x = Waveform::new(samples, 22050).unwrap();
        write_wav(&p, &x).unwrap();
        let y = read_wav(&p).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn int16_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for v in [i16::MIN, 0, 16384, i16::MAX] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let x = read_wav(&p).unwrap();
        assert_eq!(x.samples(), &[-1.0, 0.0, 0.5, 32767.0 / 32768.0]);
    }

    #[test]
    fn rejects_stereo_and_24_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&p).unwrap_err().to_string();
        assert!(err.contains("2 channels"), "{err}");

        let p = dir.path().join("b.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(read_wav(&p).unwrap_err().to_string().contains("unsupported"));
    }

    #[test]
    fn malformed_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.wav");
        std::fs::write(&p, b"RIFFxxxxWAVEjunk").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Wav { .. })));
    }
}
