//! Shared helpers for integration tests: random instances and dense oracles
//! that share no code with the library's fast paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepeval::{ReferenceSet, Waveform};

pub const RATE: u32 = 16000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn noise_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn wave(samples: Vec<f64>) -> Waveform {
    Waveform::new(samples, RATE).unwrap()
}

/// Independent random references; interference present when `multi`.
pub fn random_refs(rng: &mut ChaCha8Rng, len: usize, multi: bool) -> ReferenceSet {
    let s = wave(noise_vec(rng, len));
    let i = multi.then(|| wave(noise_vec(rng, len)).scaled(rng.gen_range(0.2..1.0)).unwrap());
    let n = wave(noise_vec(rng, len)).scaled(rng.gen_range(0.1..1.0)).unwrap();
    ReferenceSet::from_components(s, i, n).unwrap()
}

/// Causal FIR filter truncated to the input length.
pub fn fir(x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| h.iter().enumerate().take(t + 1).map(|(k, c)| c * x[t - k]).sum())
        .collect()
}

/// Something an enhancer might output: filtered references plus a
/// component outside their span.
pub fn random_enhanced(rng: &mut ChaCha8Rng, refs: &ReferenceSet) -> Waveform {
    let len = refs.len();
    let taps = rng.gen_range(1..6);
    let h: Vec<f64> = (0..taps).map(|k| if k == 0 { 1.0 } else { rng.gen_range(-0.3..0.3) }).collect();
    let mut out = fir(refs.source.samples(), &h);
    let mut add = |x: &[f64], g: f64| out.iter_mut().zip(x).for_each(|(o, v)| *o += g * v);
    if let Some(i) = &refs.interference {
        add(i.samples(), rng.gen_range(0.0..0.5));
    }
    add(refs.noise.samples(), rng.gen_range(0.0..0.5));
    let art = noise_vec(rng, len);
    add(&art, rng.gen_range(0.01..0.3));
    wave(out)
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(b).max(norm(a));
    if scale == 0.0 {
        0.0
    } else {
        norm(&d) / scale
    }
}

/// Explicit `T × kL` matrix of delayed columns `x^τ[t] = x[t−τ]`.
pub fn dense_basis(refs: &[&[f64]], num_delays: usize) -> DMatrix<f64> {
    let len = refs[0].len();
    let mut a = DMatrix::zeros(len, refs.len() * num_delays);
    for (f, x) in refs.iter().enumerate() {
        for tau in 0..num_delays {
            for t in tau..len {
                a[(t, f * num_delays + tau)] = x[t - tau];
            }
        }
    }
    a
}

/// `A A⁺ x` through an SVD, dropping singular values below `1e-5·σ_max`.
pub fn oracle_project(refs: &[&[f64]], num_delays: usize, x: &[f64]) -> Vec<f64> {
    let a = dense_basis(refs, num_delays);
    let svd = a.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let xv = DVector::from_column_slice(x);
    let mut out = DVector::zeros(x.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-5 * smax {
            let col = u.column(k);
            out += col * col.dot(&xv);
        }
    }
    out.iter().copied().collect()
}

/// `[target, interf_err, noise_err, artif_err]` from dense projections.
pub fn oracle_decompose(enh: &[f64], refs: &ReferenceSet, num_delays: usize) -> [Vec<f64>; 4] {
    let s = refs.source.samples();
    let n = refs.noise.samples();
    let ps = oracle_project(&[s], num_delays, enh);
    let psi = match &refs.interference {
        Some(i) => oracle_project(&[s, i.samples()], num_delays, enh),
        None => ps.clone(),
    };
    let psin = match &refs.interference {
        Some(i) => oracle_project(&[s, i.samples(), n], num_delays, enh),
        None => oracle_project(&[s, n], num_delays, enh),
    };
    let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    [ps.clone(), sub(&psi, &ps), sub(&psin, &psi), sub(enh, &psin)]
}

/// Levenshtein distance straight from its recursive definition, memoized
/// over suffix pairs.
pub fn brute_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut [Option<usize>]) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        let slot = i * (b.len() + 1) + j;
        if let Some(v) = memo[slot] {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo[slot] = Some(v);
        v
    }
    go(a, b, 0, 0, &mut vec![None; (a.len() + 1) * (b.len() + 1)])
}

/// Every sequence over `0..symbols` of length at most `max_len`.
pub fn all_sequences(symbols: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for s in 0..symbols {
                let mut v: Vec<u8> = seq.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Central finite differences of `f` at `x`, one coordinate at a time.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + step;
            let up = f(&probe);
            probe[k] = x[k] - step;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn rms(x: &[f64]) -> f64 {
    norm(x) / (x.len() as f64).sqrt()
}
