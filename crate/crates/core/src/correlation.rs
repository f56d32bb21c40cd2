//! Frequency-domain correlation for delayed-basis least squares.
//!
//! For reference signals `x_1 … x_k` of length `T` and `L` delays, the basis
//! matrix `A` has columns `x_p^τ[t] = x_p[t − τ]` (zeros for `t < τ`), each
//! truncated to `T` samples. Everything the normal equations need reduces to
//! correlations at lags `0 … L−1`:
//!
//! * `Aᵀx` entries are plain cross-correlations,
//! * `A c` is a causal convolution truncated to `T`,
//! * each `L × L` Gram block is Toeplitz up to a tail correction, because the
//!   truncated columns lose their last `τ` samples. The correction follows the
//!   diagonals: `G(a+1, b+1) = G(a, b) − x[T−1−a]·z[T−1−b]`.
//!
//! All transforms are zero-padded to at least `T + L − 1` points, so the
//! circular correlations below never wrap for the lags we read.

use std::sync::Arc;

use nalgebra::DMatrix;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::signal::Waveform;

#[derive(Clone)]
pub struct Correlator {
    len: usize,
    fft_len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("len", &self.len)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl Correlator {
    /// Plans transforms for signals of `len` samples and lags below `max_lag`.
    pub fn new(len: usize, max_lag: usize) -> Self {
        let fft_len = (len + max_lag.max(1) - 1).max(2).next_power_of_two();
        let mut planner = RealFftPlanner::<f64>::new();
        Correlator {
            len,
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
        }
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        debug_assert!(x.len() <= self.fft_len);
        let mut buf = vec![0.0; self.fft_len];
        buf[..x.len()].copy_from_slice(x);
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes come from the plan");
        out
    }

    /// Inverse transform, scaled so that `inverse(spectrum(x)) == x`.
    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let last = spec.len() - 1;
        spec[0].im = 0.0;
        spec[last].im = 0.0;
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut spec, &mut out)
            .expect("buffer sizes come from the plan");
        let scale = 1.0 / self.fft_len as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    /// Returns `(c_ab, c_ba)` at lags `0 … lags−1`, where
    /// `c_ab[d] = Σ_u a[u]·b[u+d]`.
    pub fn cross_lags(
        &self,
        a: &[Complex64],
        b: &[Complex64],
        lags: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let prod: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
        let r = self.inverse(prod);
        let n = self.fft_len;
        let pos = r[..lags].to_vec();
        let neg = (0..lags).map(|d| r[(n - d) % n]).collect();
        (pos, neg)
    }

    /// `Σ_u a[u]·x[u+d]` for `d < lags`, with `x` given in the time domain.
    pub fn correlate_with(&self, a: &[Complex64], x_spec: &[Complex64], lags: usize) -> Vec<f64> {
        let prod: Vec<Complex64> = a.iter().zip(x_spec).map(|(p, q)| p.conj() * q).collect();
        let mut r = self.inverse(prod);
        r.truncate(lags);
        r
    }

    /// Time-domain signal for a summed spectrum, truncated to `len` samples.
    pub fn synthesize(&self, spec: Vec<Complex64>) -> Vec<f64> {
        let mut r = self.inverse(spec);
        r.truncate(self.len);
        r
    }
}

/// Spectra of the kept reference signals plus the operators `Aᵀ·` and `A·`.
#[derive(Debug, Clone)]
pub struct BasisCorrelator {
    correlator: Correlator,
    num_delays: usize,
    signals: Vec<Waveform>,
    spectra: Vec<Vec<Complex64>>,
}

impl BasisCorrelator {
    pub fn new(refs: &[&Waveform], num_delays: usize) -> Result<Self> {
        let len = check_basis_inputs(refs, num_delays)?;
        let correlator = Correlator::new(len, num_delays);
        let spectra = refs.iter().map(|r| correlator.spectrum(r.samples())).collect();
        Ok(BasisCorrelator {
            correlator,
            num_delays,
            signals: refs.iter().map(|r| (*r).clone()).collect(),
            spectra,
        })
    }

    pub fn num_families(&self) -> usize {
        self.signals.len()
    }

    pub fn num_delays(&self) -> usize {
        self.num_delays
    }

    pub fn len(&self) -> usize {
        self.correlator.len
    }

    pub fn is_empty(&self) -> bool {
        self.correlator.len == 0
    }

    /// `Aᵀx`, family-major: entry `p·L + τ` is `⟨x_p^τ, x⟩`.
    pub fn adjoint(&self, x: &[f64]) -> Vec<f64> {
        let xs = self.correlator.spectrum(x);
        let mut out = Vec::with_capacity(self.spectra.len() * self.num_delays);
        for spec in &self.spectra {
            out.extend(self.correlator.correlate_with(spec, &xs, self.num_delays));
        }
        out
    }

    /// `A c` using only the first `families` column families.
    pub fn apply(&self, coeffs: &[f64], families: usize) -> Vec<f64> {
        let l = self.num_delays;
        debug_assert!(coeffs.len() >= families * l);
        if families == 0 {
            return vec![0.0; self.len()];
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); self.correlator.fft_len / 2 + 1];
        for (p, spec) in self.spectra.iter().take(families).enumerate() {
            let cs = self.correlator.spectrum(&coeffs[p * l..(p + 1) * l]);
            acc.iter_mut()
                .zip(spec.iter().zip(&cs))
                .for_each(|(a, (s, c))| *a += s * c);
        }
        self.correlator.synthesize(acc)
    }

    /// Assembles the `kL × kL` Gram matrix `AᵀA`.
    pub fn gram(&self, exec: Execution) -> DMatrix<f64> {
        let k = self.spectra.len();
        let l = self.num_delays;
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|p| (p..k).map(move |q| (p, q))).collect();
        let blocks = par::map_collect(exec, &pairs, |&(p, q)| self.gram_block(p, q));
        let mut g = DMatrix::zeros(k * l, k * l);
        for (&(p, q), block) in pairs.iter().zip(blocks) {
            for a in 0..l {
                for b in 0..l {
                    let v = block[a * l + b];
                    g[(p * l + a, q * l + b)] = v;
                    g[(q * l + b, p * l + a)] = v;
                }
            }
        }
        g
    }

    /// Row-major `L × L` block `⟨x_p^a, x_q^b⟩`.
    fn gram_block(&self, p: usize, q: usize) -> Vec<f64> {
        let l = self.num_delays;
        let t = self.len();
        let x = self.signals[p].samples();
        let z = self.signals[q].samples();
        // First column: G(a,0) = Σ_u x[u] z[u+a]; first row: G(0,b) = Σ_u z[u] x[u+b].
        let (col0, row0) = self.correlator.cross_lags(&self.spectra[p], &self.spectra[q], l);
        let mut block = vec![0.0; l * l];
        for a in 0..l {
            block[a * l] = col0[a];
        }
        block[..l].copy_from_slice(&row0);
        // Each diagonal starts on the first row or column.
        let mut walk = |mut i: usize, mut j: usize| {
            while i + 1 < l && j + 1 < l {
                block[(i + 1) * l + j + 1] = block[i * l + j] - x[t - 1 - i] * z[t - 1 - j];
                i += 1;
                j += 1;
            }
        };
        (0..l).for_each(|b| walk(0, b));
        (1..l).for_each(|a| walk(a, 0));
        block
    }
}

fn check_basis_inputs(refs: &[&Waveform], num_delays: usize) -> Result<usize> {
    let first = refs
        .first()
        .ok_or_else(|| Error::param("refs", "at least one reference signal is required"))?;
    for (k, r) in refs.iter().enumerate().skip(1) {
        first.check_compatible(&format!("refs[{k}]"), r)?;
    }
    let len = first.len();
    if num_delays == 0 || num_delays > len {
        return Err(Error::param(
            "num_delays",
            format!("must be in 1..={len}, got {num_delays}"),
        ));
    }
    Ok(len)
}

/// Gram matrix of the delayed basis and an accessor for `Aᵀx` / `A c`.
pub fn gram_via_fft(refs: &[&Waveform], num_delays: usize) -> Result<(DMatrix<f64>, BasisCorrelator)> {
    let basis = BasisCorrelator::new(refs, num_delays)?;
    let gram = basis.gram(Execution::default());
    Ok((gram, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wf(v: Vec<f64>) -> Waveform {
        Waveform::new(v, 16000).unwrap()
    }

    fn delayed(x: &[f64], tau: usize) -> Vec<f64> {
        (0..x.len()).map(|t| if t >= tau { x[t - tau] } else { 0.0 }).collect()
    }

    /// Direct O(T·L²·k²) Gram from explicit delayed columns.
    fn direct_gram(refs: &[Vec<f64>], l: usize) -> DMatrix<f64> {
        let cols: Vec<Vec<f64>> = refs
            .iter()
            .flat_map(|r| (0..l).map(move |tau| delayed(r, tau)))
            .collect();
        let n = cols.len();
        DMatrix::from_fn(n, n, |i, j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum())
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn impulse_autocorrelation_is_identity() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let (g, _) = gram_via_fft(&[&wf(x)], 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-12, "({i},{j}) = {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn constant_signal_lag_one() {
        let t = 37;
        let (g, _) = gram_via_fft(&[&wf(vec![1.0; t])], 2).unwrap();
        assert!((g[(0, 1)] - (t as f64 - 1.0)).abs() < 1e-9);
        assert!((g[(0, 0)] - t as f64).abs() < 1e-9);
        // Truncated columns: the delayed copy has one sample fewer.
        assert!((g[(1, 1)] - (t as f64 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn matches_direct_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(t, l, k) in &[(256, 8, 3), (64, 4, 2), (33, 5, 1), (10, 10, 2)] {
            let refs: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let wfs: Vec<Waveform> = refs.iter().cloned().map(wf).collect();
            let wrefs: Vec<&Waveform> = wfs.iter().collect();
            let (g, basis) = gram_via_fft(&wrefs, l).unwrap();
            let direct = direct_gram(&refs, l);
            assert!(rel_err(&g, &direct) < 1e-9, "T={t} L={l} k={k}");

            let x: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let aty = basis.adjoint(&x);
            for (p, r) in refs.iter().enumerate() {
                for tau in 0..l {
                    let want: f64 = delayed(r, tau).iter().zip(&x).map(|(a, b)| a * b).sum();
                    assert!((aty[p * l + tau] - want).abs() < 1e-10 * (1.0 + want.abs()));
                }
            }

            let c: Vec<f64> = (0..k * l).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ac = basis.apply(&c, k);
            let mut want = vec![0.0; t];
            for (p, r) in refs.iter().enumerate() {
                for tau in 0..l {
                    for (w, d) in want.iter_mut().zip(delayed(r, tau)) {
                        *w += c[p * l + tau] * d;
                    }
                }
            }
            let err: f64 = ac.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err / norm < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_delay_count() {
        let x = wf(vec![1.0; 4]);
        assert!(gram_via_fft(&[&x], 0).is_err());
        assert!(gram_via_fft(&[&x], 5).is_err());
        assert!(gram_via_fft(&[], 1).is_err());
        let y = wf(vec![1.0; 5]);
        assert!(matches!(
            gram_via_fft(&[&x, &y], 1),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
