//! Adaptive target detection in heterogeneous Gaussian interference.
//!
//! The crate provides four adaptive detectors for a burst of `K` complex
//! returns whose interference power changes from pulse to pulse:
//!
//! * **GD-HE**, a likelihood-ratio test on the raw samples with parameters
//!   from a cyclic maximum-likelihood procedure ([`estimation::cyclic_ml_h1`]);
//! * **AGD**, a likelihood-ratio test on the unit-norm directions of the
//!   samples with parameters from a cyclic EM procedure
//!   ([`estimation::cyclic_em`]); it is CFAR with respect to the per-pulse
//!   interference powers;
//! * the two cross pairings **C-GD-HE** and **C-AGD**.
//!
//! Reference detectors (clairvoyant, energy, coherent, cell-averaged coherent),
//! scenario generators, and a reproducible Monte Carlo harness for threshold
//! calibration, false-alarm and detection-probability curves are included.

pub mod detectors;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod numerics;
pub mod scenario;
pub mod vec2;

pub use detectors::{Decision, DetectorKind};
pub use error::{Error, Result};
pub use estimation::{EstimationConfig, Init, ParamEstimate};
pub use montecarlo::{CalibratedThreshold, CurvePoint};
pub use scenario::{Burst, Hypothesis, InterferenceModel, InvariantBurst, ScenarioConfig};
pub use vec2::Vec2;

#[cfg(doctest)]
#[doc = include_str!("../README.md")]
struct ReadmeDoctests;
