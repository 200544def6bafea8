//! Maximum-likelihood symbol detection under random phase noise.
//!
//! The crate is organized around the receiver chain:
//!
//! * [`constellation`] builds unit-energy signal sets and converts Eb/N0.
//! * [`channel`] generates frames under i.i.d. Gaussian or Wiener phase noise.
//! * [`detectors`] computes soft metrics (EUC, FOS, VB, GAP, TSD, SOM).
//! * [`tracker`] is an EKF phase tracker with pilots and soft-symbol feedback.
//! * [`analysis`] holds the closed-form union bound and error floor of GAP.
//! * [`oracle`] provides quadrature ML and discretized-phase forward-backward
//!   reference detectors.
//! * [`harness`] runs Monte Carlo SEP experiments and writes CSV curves.

pub mod analysis;
pub mod channel;
pub mod constellation;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod phase;
pub mod rng;
pub mod tracker;

pub use constellation::{eb_n0_to_n0, Constellation, SnrSpec};
pub use detectors::{soft_decide, DecideOptions, DetectorKind, ReceivedSample, SoftDecision};
pub use error::{Error, Result};
