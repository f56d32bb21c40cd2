//! Orthogonal-projection decomposition of enhanced speech into target,
//! interference, noise and artifact components, the SDR/SIR/SNR/SAR metrics
//! built on it, and three procedures that use the decomposition:
//!
//! * direct scaling analysis ([`dsa`]): rescale each error component and
//!   re-score the synthesized signals,
//! * observation adding ([`oa`]): interpolate the enhanced and observed
//!   signals, which raises SAR whenever `⟨ŝ, y⟩ > 0`,
//! * the artifact-boosted SDR loss ([`loss`]) with its analytic gradient.
//!
//! [`mix`] and [`enhance`] provide level-controlled mixtures and two
//! reference enhancers so that the whole pipeline runs without trained models.

pub mod correlation;
pub mod dsa;
pub mod enhance;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod mix;
pub mod oa;
pub mod par;
pub mod projection;
pub mod signal;
pub mod stft;
pub mod synth;
pub mod wav;
pub mod wer;

pub use error::{Error, Result};
pub use loss::{AbSdrLoss, LossConfig};
pub use metrics::{evaluate, Db, Scenario, SxrReport};
pub use mix::{mix, MixSpec};
pub use par::Execution;
pub use projection::{decompose, project, Decomposition, ProjectionContext, Projectors};
pub use signal::{validate_set, ReferenceSet, Waveform};
