//! `classim` decides whether a two-time measurement-and-prepare statistics,
//! probed by invasive but informationally-complete measurements, admits a
//! classical stochastic description — and if so, builds the witnessing
//! system-plus-environment model.
//!
//! The crate has three layers:
//!
//! * [`tensor`] — dense probability vectors, conditional tables and the
//!   invasive-measurement matrix (IMM), with the normalization/positivity
//!   predicates everything else builds on.
//! * [`classicality`] and [`model`] — the decision procedure over the six
//!   consistency conditions, the hidden-level reconstruction, and both
//!   constructive directions between statistics and open-system stochastic
//!   models (construction, evaluation, contextual joint, trajectory
//!   sampling).
//! * [`quantum`] — complex linear algebra for system⊗environment states,
//!   quantum frames and rank-one IC-POVMs, Born-rule statistics of two-time
//!   quantum processes, reduced dynamical maps, and frame-positivity /
//!   frame-separability analysis.
//!
//! [`fixtures`] holds the SIC-qubit example with its reference values, wired
//! both as regression tests and as the CLI `repro` targets.

pub mod classicality;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod quantum;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tolerances;
