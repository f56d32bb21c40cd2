//! Orthogonal projections onto delayed-basis subspaces and the four-way
//! decomposition of an enhanced signal.
//!
//! Projectors are never materialized as `T × T` matrices. A
//! [`ProjectionContext`] holds the Gram matrix of the delayed basis and one
//! factorization of it; `P x = A (AᵀA)⁻¹ Aᵀ x` is then two correlations and
//! two triangular solves. Because the column families are ordered
//! `s, i, n`, the Cholesky factor of the full Gram matrix also factors every
//! leading block, so `P_s`, `P_{s,i}` and `P_{s,i,n}` share one factorization.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::correlation::BasisCorrelator;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::signal::{ReferenceSet, Waveform};

/// Diagonal jitter added before the Cholesky factorization, relative to the
/// mean Gram diagonal.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Eigenvalues (and Cholesky pivots) below this fraction of the largest are
/// treated as null directions.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Delayed copies `x^0 … x^{L−1}` of one reference signal, with zeros shifted
/// in at the head and samples dropped at the tail.
#[derive(Debug, Clone)]
pub struct DelayedBasis {
    pub origin: Waveform,
    pub num_delays: usize,
}

impl DelayedBasis {
    pub fn new(origin: Waveform, num_delays: usize) -> Result<Self> {
        if num_delays == 0 || num_delays > origin.len() {
            return Err(Error::param(
                "num_delays",
                format!("must be in 1..={}, got {num_delays}", origin.len()),
            ));
        }
        Ok(DelayedBasis { origin, num_delays })
    }

    /// `x^τ[t] = x[t − τ]` for `t ≥ τ`, zero before.
    pub fn column(&self, tau: usize) -> Vec<f64> {
        let x = self.origin.samples();
        let mut col = vec![0.0; x.len()];
        if tau < x.len() {
            col[tau..].copy_from_slice(&x[..x.len() - tau]);
        }
        col
    }
}

#[derive(Debug, Clone)]
enum Solver {
    /// Lower-triangular factor of `AᵀA + εI`.
    Cholesky(DMatrix<f64>),
    /// Truncated eigendecomposition per leading block; indexed by the number
    /// of kept families in the block, minus one.
    Eigen(Vec<TruncatedEigen>),
}

#[derive(Debug, Clone)]
struct TruncatedEigen {
    vectors: DMatrix<f64>,
    inv_values: Vec<f64>,
}

impl TruncatedEigen {
    fn new(gram: DMatrix<f64>, threshold: f64) -> Self {
        let eig = SymmetricEigen::new(gram);
        let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let inv_values = eig
            .eigenvalues
            .iter()
            .map(|&v| if max > 0.0 && v > threshold * max { 1.0 / v } else { 0.0 })
            .collect();
        TruncatedEigen {
            vectors: eig.eigenvectors,
            inv_values,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut proj = vec![0.0; n];
        for (k, inv) in self.inv_values.iter().enumerate() {
            if *inv == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            let w: f64 = v.iter().zip(rhs).map(|(a, b)| a * b).sum::<f64>() * inv;
            proj.iter_mut().zip(v.iter()).for_each(|(p, a)| *p += w * a);
        }
        proj
    }
}

/// Cached state for projecting onto nested delayed-basis subspaces.
///
/// Built from an ordered list of reference signals. Zero-energy references
/// contribute no columns. Immutable after construction and `Sync`, so one
/// context can serve many concurrent projections against the same references.
#[derive(Debug, Clone)]
pub struct ProjectionContext {
    len: usize,
    sample_rate: u32,
    num_delays: usize,
    /// `kept_prefix[k]` is the number of kept families among the first `k`
    /// input references.
    kept_prefix: Vec<usize>,
    basis: Option<BasisCorrelator>,
    gram: DMatrix<f64>,
    solver: Solver,
    rank_threshold: f64,
}

impl ProjectionContext {
    pub fn new(refs: &[&Waveform], num_delays: usize) -> Result<Self> {
        Self::with_execution(refs, num_delays, Execution::default())
    }

    pub fn with_execution(refs: &[&Waveform], num_delays: usize, exec: Execution) -> Result<Self> {
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

        let mut kept_prefix = vec![0];
        let mut kept = Vec::new();
        for r in refs {
            if r.energy() > 0.0 {
                kept.push(*r);
            }
            kept_prefix.push(kept.len());
        }

        let (basis, gram) = if kept.is_empty() {
            (None, DMatrix::zeros(0, 0))
        } else {
            let basis = BasisCorrelator::new(&kept, num_delays)?;
            let gram = basis.gram(exec);
            (Some(basis), gram)
        };
        let solver = factorize(&gram, num_delays, kept.len());

        Ok(ProjectionContext {
            len,
            sample_rate: first.sample_rate(),
            num_delays,
            kept_prefix,
            basis,
            gram,
            solver,
            rank_threshold: RANK_THRESHOLD,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_delays(&self) -> usize {
        self.num_delays
    }

    pub fn num_refs(&self) -> usize {
        self.kept_prefix.len() - 1
    }

    /// `AᵀA` over the kept references.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn rank_threshold(&self) -> f64 {
        self.rank_threshold
    }

    /// True when the jittered Cholesky factorization was rejected and the
    /// truncated eigendecomposition is in use.
    pub fn uses_eigen_fallback(&self) -> bool {
        matches!(self.solver, Solver::Eigen(_))
    }

    /// `Aᵀx` over all kept references.
    pub fn adjoint(&self, x: &[f64]) -> Vec<f64> {
        match &self.basis {
            Some(b) => b.adjoint(x),
            None => Vec::new(),
        }
    }

    /// Projects onto the span of the first `refs` references (all delays)
    /// given a precomputed `Aᵀx`.
    pub fn project_leading_from_adjoint(&self, adjoint: &[f64], refs: usize) -> Vec<f64> {
        let families = self.kept_prefix[refs.min(self.num_refs())];
        let Some(basis) = &self.basis else {
            return vec![0.0; self.len];
        };
        if families == 0 {
            return vec![0.0; self.len];
        }
        let n = families * self.num_delays;
        let rhs = &adjoint[..n];
        let coeffs = match &self.solver {
            Solver::Cholesky(l) => cholesky_solve_leading(l, rhs),
            Solver::Eigen(blocks) => blocks[families - 1].solve(rhs),
        };
        basis.apply(&coeffs, families)
    }

    fn check(&self, x: &Waveform) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::LengthMismatch {
                field: "signal".into(),
                expected: self.len,
                found: x.len(),
            });
        }
        if x.sample_rate() != self.sample_rate {
            return Err(Error::SampleRateMismatch {
                field: "signal".into(),
                expected: self.sample_rate,
                found: x.sample_rate(),
            });
        }
        Ok(())
    }

    /// Projects `x` onto the span of the first `refs` references.
    pub fn project_leading(&self, x: &Waveform, refs: usize) -> Result<Waveform> {
        self.check(x)?;
        let adj = self.adjoint(x.samples());
        x.with_samples(self.project_leading_from_adjoint(&adj, refs))
    }

    /// Projects `x` onto the span of all references.
    pub fn project(&self, x: &Waveform) -> Result<Waveform> {
        self.project_leading(x, self.num_refs())
    }
}

fn factorize(gram: &DMatrix<f64>, num_delays: usize, families: usize) -> Solver {
    let n = gram.nrows();
    if n == 0 {
        return Solver::Cholesky(DMatrix::zeros(0, 0));
    }
    let diag = gram.diagonal();
    let mean = diag.sum() / n as f64;
    let max = diag.max();
    let mut jittered = gram.clone();
    for k in 0..n {
        jittered[(k, k)] += CHOLESKY_JITTER * mean;
    }
    if let Some(chol) = nalgebra::Cholesky::new(jittered) {
        let l = chol.unpack();
        let min_pivot = (0..n).map(|k| l[(k, k)] * l[(k, k)]).fold(f64::INFINITY, f64::min);
        if min_pivot > RANK_THRESHOLD * max {
            return Solver::Cholesky(l);
        }
    }
    log::debug!("Gram matrix of size {n} is near-singular, using truncated eigendecomposition");
    let blocks = (1..=families)
        .map(|f| {
            let m = f * num_delays;
            TruncatedEigen::new(gram.view((0, 0), (m, m)).into_owned(), RANK_THRESHOLD)
        })
        .collect();
    Solver::Eigen(blocks)
}

/// Solves `(L Lᵀ) c = b` using the leading `b.len()` block of `L`.
fn cholesky_solve_leading(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = b.to_vec();
    // Forward: L y = b. Column-major, so sweep columns.
    for j in 0..n {
        y[j] /= l[(j, j)];
        let yj = y[j];
        let col = l.column(j);
        for i in j + 1..n {
            y[i] -= col[i] * yj;
        }
    }
    // Backward: Lᵀ c = y; row j of Lᵀ is column j of L.
    for j in (0..n).rev() {
        let col = l.column(j);
        let s: f64 = (j + 1..n).map(|i| col[i] * y[i]).sum();
        y[j] = (y[j] - s) / l[(j, j)];
    }
    y
}

/// `P x` for the subspace spanned by `refs` delayed `0 … L−1` samples.
///
/// An all-zero reference set yields the zero waveform.
pub fn project(x: &Waveform, refs: &[&Waveform], num_delays: usize) -> Result<Waveform> {
    let ctx = ProjectionContext::new(refs, num_delays)?;
    ctx.project(x)
}

/// The nested projectors `P_s ⊆ P_{s,i} ⊆ P_{s,i,n}` for one reference set.
#[derive(Debug, Clone)]
pub struct Projectors {
    ctx: ProjectionContext,
    has_interference: bool,
}

/// Outputs of the three nested projectors applied to one signal.
#[derive(Debug, Clone)]
pub struct NestedProjections {
    pub source: Vec<f64>,
    pub source_interf: Vec<f64>,
    pub all: Vec<f64>,
}

impl Projectors {
    pub fn new(refs: &ReferenceSet, num_delays: usize) -> Result<Self> {
        Self::with_execution(refs, num_delays, Execution::default())
    }

    pub fn with_execution(refs: &ReferenceSet, num_delays: usize, exec: Execution) -> Result<Self> {
        let mut list = vec![&refs.source];
        if let Some(i) = &refs.interference {
            list.push(i);
        }
        list.push(&refs.noise);
        Ok(Projectors {
            ctx: ProjectionContext::with_execution(&list, num_delays, exec)?,
            has_interference: refs.interference.is_some(),
        })
    }

    pub fn context(&self) -> &ProjectionContext {
        &self.ctx
    }

    pub fn num_delays(&self) -> usize {
        self.ctx.num_delays
    }

    pub fn has_interference(&self) -> bool {
        self.has_interference
    }

    pub fn apply(&self, x: &[f64]) -> NestedProjections {
        let adj = self.ctx.adjoint(x);
        let source = self.ctx.project_leading_from_adjoint(&adj, 1);
        let source_interf = if self.has_interference {
            self.ctx.project_leading_from_adjoint(&adj, 2)
        } else {
            source.clone()
        };
        let all = self.ctx.project_leading_from_adjoint(&adj, self.ctx.num_refs());
        NestedProjections {
            source,
            source_interf,
            all,
        }
    }

    pub fn decompose(&self, enhanced: &Waveform) -> Result<Decomposition> {
        self.ctx.check(enhanced)?;
        let x = enhanced.samples();
        let p = self.apply(x);
        let interf: Vec<f64> = if self.has_interference {
            sub(&p.source_interf, &p.source)
        } else {
            vec![0.0; x.len()]
        };
        Ok(Decomposition {
            target: enhanced.with_samples(p.source.clone())?,
            interf_err: enhanced.with_samples(interf)?,
            noise_err: enhanced.with_samples(sub(&p.all, &p.source_interf))?,
            artif_err: enhanced.with_samples(sub(x, &p.all))?,
            num_delays: self.ctx.num_delays,
        })
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `ŝ = s_target + e_interf + e_noise + e_artif`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub target: Waveform,
    pub interf_err: Waveform,
    pub noise_err: Waveform,
    pub artif_err: Waveform,
    pub num_delays: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// `s_target + w_i·e_interf + w_n·e_noise + w_a·e_artif`.
    pub fn recombine(&self, w_interf: f64, w_noise: f64, w_artif: f64) -> Vec<f64> {
        let t = self.target.samples();
        let i = self.interf_err.samples();
        let n = self.noise_err.samples();
        let a = self.artif_err.samples();
        (0..t.len())
            .map(|k| t[k] + w_interf * i[k] + w_noise * n[k] + w_artif * a[k])
            .collect()
    }

    pub fn reassemble(&self) -> Result<Waveform> {
        self.target.with_samples(self.recombine(1.0, 1.0, 1.0))
    }

    /// The decomposition of the recombined signal: nested projectors map each
    /// scaled component onto itself, so scaling commutes with decomposition.
    pub fn rescaled(&self, w_interf: f64, w_noise: f64, w_artif: f64) -> Result<Decomposition> {
        Ok(Decomposition {
            target: self.target.clone(),
            interf_err: self.interf_err.scaled(w_interf)?,
            noise_err: self.noise_err.scaled(w_noise)?,
            artif_err: self.artif_err.scaled(w_artif)?,
            num_delays: self.num_delays,
        })
    }
}

/// Decomposes `enhanced` against `refs` with `num_delays` delays per family.
pub fn decompose(enhanced: &Waveform, refs: &ReferenceSet, num_delays: usize) -> Result<Decomposition> {
    refs.check_signal("enhanced", enhanced)?;
    Projectors::new(refs, num_delays)?.decompose(enhanced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_wf(rng: &mut ChaCha8Rng, t: usize) -> Waveform {
        Waveform::new((0..t).map(|_| rng.gen_range(-1.0..1.0)).collect(), 16000).unwrap()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let n = dot(b, b).sqrt().max(1e-300);
        d / n
    }

    #[test]
    fn member_of_span_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = rand_wf(&mut rng, 64);
        for l in [1, 3, 8] {
            let p = project(&s, &[&s], l).unwrap();
            assert!(rel(p.samples(), s.samples()) < 1e-10);
        }
    }

    #[test]
    fn orthogonal_complement_projects_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = 48;
        let l = 3;
        let s = rand_wf(&mut rng, t);
        let basis = DelayedBasis::new(s.clone(), l).unwrap();
        // Gram-Schmidt a random vector against the delayed columns.
        let mut q: Vec<Vec<f64>> = Vec::new();
        for tau in 0..l {
            let mut c = basis.column(tau);
            for b in &q {
                let k = dot(&c, b);
                c.iter_mut().zip(b).for_each(|(x, y)| *x -= k * y);
            }
            let n = dot(&c, &c).sqrt();
            c.iter_mut().for_each(|x| *x /= n);
            q.push(c);
        }
        let mut x = rand_wf(&mut rng, t).samples().to_vec();
        for _ in 0..2 {
            for b in &q {
                let k = dot(&x, b);
                x.iter_mut().zip(b).for_each(|(v, y)| *v -= k * y);
            }
        }
        let xw = Waveform::new(x.clone(), 16000).unwrap();
        let p = project(&xw, &[&s], l).unwrap();
        assert!(dot(p.samples(), p.samples()).sqrt() < 1e-10 * dot(&x, &x).sqrt());
    }

    #[test]
    fn zero_references_give_zero_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = rand_wf(&mut rng, 16);
        let z = Waveform::zeros(16, 16000).unwrap();
        let p = project(&x, &[&z, &z], 2).unwrap();
        assert!(p.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn perfect_enhancement_has_no_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = rand_wf(&mut rng, 64);
        let i = rand_wf(&mut rng, 64);
        let n = rand_wf(&mut rng, 64);
        let refs = ReferenceSet::from_components(s.clone(), Some(i), n).unwrap();
        let d = decompose(&s, &refs, 4).unwrap();
        assert!(rel(d.target.samples(), s.samples()) < 1e-10);
        for e in [&d.interf_err, &d.noise_err, &d.artif_err] {
            assert!(e.energy().sqrt() < 1e-10 * s.energy().sqrt());
        }
    }

    #[test]
    fn observed_signal_has_no_artifacts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = rand_wf(&mut rng, 64);
        let n = rand_wf(&mut rng, 64);
        let refs = ReferenceSet::from_components(s, None, n).unwrap();
        let y = refs.observed.clone();
        let d = decompose(&y, &refs, 2).unwrap();
        assert!(d.artif_err.energy().sqrt() < 1e-10 * y.energy().sqrt());
        let ps = project(&y, &[&refs.source], 2).unwrap();
        assert!(rel(d.target.samples(), ps.samples()) < 1e-10);
    }

    #[test]
    fn single_talker_interference_error_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = rand_wf(&mut rng, 40);
        let n = rand_wf(&mut rng, 40);
        let x = rand_wf(&mut rng, 40);
        let refs = ReferenceSet::from_components(s, None, n).unwrap();
        let d = decompose(&x, &refs, 4).unwrap();
        assert!(d.interf_err.samples().iter().all(|&v| v == 0.0));

        // A present but silent interferer behaves the same way.
        let z = Waveform::zeros(40, 16000).unwrap();
        let refs2 = ReferenceSet::from_components(refs.source.clone(), Some(z), refs.noise.clone()).unwrap();
        let d2 = decompose(&x, &refs2, 4).unwrap();
        assert!(d2.interf_err.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_deficient_basis_uses_fallback() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // 3 families × 8 delays = 24 columns in a 16-dimensional space.
        let s = rand_wf(&mut rng, 16);
        let i = rand_wf(&mut rng, 16);
        let n = rand_wf(&mut rng, 16);
        let refs = ReferenceSet::from_components(s, Some(i), n).unwrap();
        let proj = Projectors::new(&refs, 8).unwrap();
        assert!(proj.context().uses_eigen_fallback());
        let x = rand_wf(&mut rng, 16);
        let d = proj.decompose(&x).unwrap();
        let back = d.reassemble().unwrap();
        assert!(rel(back.samples(), x.samples()) < 1e-10);
        // The full basis spans everything, so nothing is left as artifact.
        assert!(d.artif_err.energy().sqrt() < 1e-8 * x.energy().sqrt());
    }

    #[test]
    fn decompose_rejects_mismatch_and_large_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = rand_wf(&mut rng, 8);
        let n = rand_wf(&mut rng, 8);
        let refs = ReferenceSet::from_components(s, None, n).unwrap();
        assert!(decompose(&rand_wf(&mut rng, 9), &refs, 2).is_err());
        assert!(decompose(&rand_wf(&mut rng, 8), &refs, 9).is_err());
    }
}
