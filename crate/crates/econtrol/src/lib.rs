//! Error-compensated communication-compressed distributed SGD.
//!
//! The crate provides:
//!
//! * contractive compressors (top-k, rand-k, identity) with uplink bit
//!   accounting ([`compressors`]);
//! * benchmark objectives with exact gradient oracles, controlled noise,
//!   and closed-form minimizers where available ([`objectives`]);
//! * a family of synchronous-round optimizers — EControl, classic error
//!   compensation, bias-corrected variants, EF21-style feedback, and plain
//!   SGD baselines — each behind a common strategy trait and selected by
//!   name at runtime ([`algorithms`]);
//! * analysis observables and output-iterate selection ([`diagnostics`]);
//! * a deterministic client/server simulator with CSV traces, parameter
//!   sweeps, and canned experiment presets ([`harness`]).

pub mod algorithms;
pub mod compressors;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod objectives;
pub mod rng;
pub mod vector;

pub use error::{Error, Result};
pub use vector::DenseVector;
