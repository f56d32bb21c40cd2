//! Artifact-boosted SDR loss, the scale-dependent SNR loss, and the analytic
//! gradient of the former with respect to the enhanced signal.
//!
//! With `u = P_s x` and `v = (P_{s,i,n} − P_s)x + α(I − P_{s,i,n})x`:
//!
//! `loss(x) = −10·log10(‖u‖² / (‖v‖² + floor))`
//!
//! All projectors are self-adjoint, so with `M = (P_{s,i,n} − P_s) +
//! α(I − P_{s,i,n})` the gradient is
//!
//! `∇loss = −(20/ln 10)·(u/‖u‖² − M v/(‖v‖² + floor))`.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ZERO_ENERGY_REL;
use crate::projection::Projectors;
use crate::signal::{energy, ReferenceSet, Waveform};

/// Training-time delay counts above this tend to let a model satisfy the
/// loss with meaningless signals.
pub const LOSS_DELAY_WARNING: usize = 8;

/// `{1.0, 1.5, …, 3.5}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=5).map(|k| 1.0 + 0.5 * k as f64).collect()
}

/// Energy added to loss denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum DenomFloor {
    /// A multiple of the reference source energy `‖s‖²`.
    RelativeToSource(f64),
    Absolute(f64),
}

impl Default for DenomFloor {
    fn default() -> Self {
        DenomFloor::RelativeToSource(1e-12)
    }
}

impl DenomFloor {
    pub const NONE: DenomFloor = DenomFloor::Absolute(0.0);

    pub fn resolve(self, refs: &ReferenceSet) -> Result<f64> {
        let v = match self {
            DenomFloor::RelativeToSource(r) => r * refs.source.energy(),
            DenomFloor::Absolute(a) => a,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param("denom_floor", format!("must be finite and >= 0, got {v}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub num_delays: usize,
    #[serde(default)]
    pub denom_floor: DenomFloor,
}

impl LossConfig {
    /// `L = 2`, `α = 1.5`.
    pub fn single_talker() -> Self {
        LossConfig {
            alpha: 1.5,
            num_delays: 2,
            denom_floor: DenomFloor::default(),
        }
    }

    /// `L = 1`, `α = 2.0`.
    pub fn multi_talker() -> Self {
        LossConfig {
            alpha: 2.0,
            num_delays: 1,
            denom_floor: DenomFloor::default(),
        }
    }

    pub fn recommended_for(refs: &ReferenceSet) -> Self {
        if refs.is_single_talker() {
            Self::single_talker()
        } else {
            Self::multi_talker()
        }
    }

    /// The plain SDR loss.
    pub fn sdr(num_delays: usize) -> Self {
        LossConfig {
            alpha: 1.0,
            num_delays,
            denom_floor: DenomFloor::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::param("alpha", format!("must be finite and >= 1, got {}", self.alpha)));
        }
        if self.num_delays == 0 {
            return Err(Error::param("num_delays", "must be at least 1"));
        }
        Ok(())
    }
}

/// Projectors and resolved constants for repeated loss and gradient
/// evaluations against one reference set.
#[derive(Debug, Clone)]
pub struct AbSdrLoss {
    projectors: Projectors,
    alpha: f64,
    floor: f64,
    len: usize,
}

/// Intermediate vectors shared by the loss and its gradient.
struct Parts {
    u: Vec<f64>,
    v: Vec<f64>,
    u2: f64,
    v2: f64,
}

impl AbSdrLoss {
    pub fn new(refs: &ReferenceSet, cfg: &LossConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.num_delays > LOSS_DELAY_WARNING {
            log::warn!(
                "loss with {} delays: large delay counts leave the projections enough freedom to reward meaningless outputs",
                cfg.num_delays
            );
        }
        Ok(AbSdrLoss {
            projectors: Projectors::new(refs, cfg.num_delays)?,
            alpha: cfg.alpha,
            floor: cfg.denom_floor.resolve(refs)?,
            len: refs.len(),
        })
    }

    pub fn projectors(&self) -> &Projectors {
        &self.projectors
    }

    fn check(&self, enh: &Waveform) -> Result<()> {
        if enh.len() != self.len {
            return Err(Error::LengthMismatch {
                field: "enhanced".into(),
                expected: self.len,
                found: enh.len(),
            });
        }
        Ok(())
    }

    fn parts(&self, x: &[f64]) -> Parts {
        let p = self.projectors.apply(x);
        let a = self.alpha;
        let v: Vec<f64> = (0..x.len())
            .map(|k| (p.all[k] - p.source[k]) + a * (x[k] - p.all[k]))
            .collect();
        let mut u2 = energy(&p.source);
        if u2 <= ZERO_ENERGY_REL * energy(x) {
            u2 = 0.0;
        }
        Parts {
            v2: energy(&v),
            u: p.source,
            v,
            u2,
        }
    }

    fn value(&self, parts: &Parts) -> f64 {
        let den = parts.v2 + self.floor;
        match (parts.u2 == 0.0, den == 0.0) {
            (true, _) => {
                log::warn!("enhanced signal has no energy in the source subspace; loss is +inf");
                f64::INFINITY
            }
            (false, true) => f64::NEG_INFINITY,
            (false, false) => -10.0 * (parts.u2 / den).log10(),
        }
    }

    pub fn loss(&self, enh: &Waveform) -> Result<f64> {
        self.check(enh)?;
        Ok(self.value(&self.parts(enh.samples())))
    }

    /// Loss value and its gradient with respect to each sample of `enh`.
    pub fn loss_and_gradient(&self, enh: &Waveform) -> Result<(f64, Waveform)> {
        self.check(enh)?;
        let x = enh.samples();
        let parts = self.parts(x);
        let value = self.value(&parts);
        if !value.is_finite() {
            return Err(Error::param(
                "enhanced",
                format!("loss is {value}, gradient undefined"),
            ));
        }
        let pv = self.projectors.apply(&parts.v);
        let a = self.alpha;
        let den = parts.v2 + self.floor;
        let c = -20.0 / LN_10;
        let g = (0..x.len())
            .map(|k| {
                let mv = (pv.all[k] - pv.source[k]) + a * (parts.v[k] - pv.all[k]);
                c * (parts.u[k] / parts.u2 - mv / den)
            })
            .collect();
        Ok((value, enh.with_samples(g)?))
    }

    pub fn gradient(&self, enh: &Waveform) -> Result<Waveform> {
        Ok(self.loss_and_gradient(enh)?.1)
    }
}

/// `−10·log10(‖s_target‖² / (‖e_interf + e_noise + α·e_artif‖² + floor))`.
/// Zero target energy gives `+∞` and a logged diagnostic.
pub fn absdr_loss(enh: &Waveform, refs: &ReferenceSet, cfg: &LossConfig) -> Result<f64> {
    refs.check_signal("enhanced", enh)?;
    AbSdrLoss::new(refs, cfg)?.loss(enh)
}

pub fn absdr_gradient(enh: &Waveform, refs: &ReferenceSet, cfg: &LossConfig) -> Result<Waveform> {
    refs.check_signal("enhanced", enh)?;
    AbSdrLoss::new(refs, cfg)?.gradient(enh)
}

/// `−10·log10(‖s‖² / (‖enh − s‖² + floor))`.
pub fn snr_loss(enh: &Waveform, refs: &ReferenceSet, floor: DenomFloor) -> Result<f64> {
    refs.check_signal("enhanced", enh)?;
    let floor = floor.resolve(refs)?;
    let s = refs.source.samples();
    let err: f64 = enh.samples().iter().zip(s).map(|(e, s)| (e - s) * (e - s)).sum();
    let num = energy(s);
    let den = err + floor;
    Ok(match (num == 0.0, den == 0.0) {
        (true, _) => {
            log::warn!("reference source has no energy; SNR loss is +inf");
            f64::INFINITY
        }
        (false, true) => f64::NEG_INFINITY,
        _ => -10.0 * (num / den).log10(),
    })
}
