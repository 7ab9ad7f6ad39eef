//! Pilot retransmission against pilot-contamination jamming in massive MIMO
//! uplinks: channel model, MMSE training, closed-form rates, the two
//! retransmission protocols and a deterministic Monte Carlo engine.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod protocols;
pub mod rates;
pub mod rng;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use linalg::{ComplexMat, ComplexVec, HermitianEigen};
pub use model::{
    JammerKind, JammerModel, MmseMode, OptMode, PilotCodebook, PowerPolicy, RateAccounting, SystemConfig,
    ThresholdMode,
};
pub use montecarlo::{JammerScenario, MomentReport, RateSummary, Scheme, SchemeRun};
pub use protocols::{ProtocolTrace, StopReason};
pub use rates::RateReport;
pub use rng::{DrawTag, RandomStream, TrialStreams};
pub use scalar::{CompensatedSum, Real};

pub type Config = SystemConfig<f64>;
pub type CVec = ComplexVec<f64>;
pub type CMat = ComplexMat<f64>;
pub type Codebook = PilotCodebook<f64>;
pub type Jammer = JammerModel<f64>;
pub type Trace = ProtocolTrace<f64>;
pub type Rate = RateReport<f64>;
pub type Moments = MomentReport<f64>;
pub type Summary = RateSummary<f64>;
