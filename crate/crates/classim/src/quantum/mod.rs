//! Finite-dimensional quantum machinery: system⊗environment states, quantum
//! frames, rank-one IC-POVMs, Born-rule two-time statistics, reduced
//! dynamical maps, and frame-positivity / frame-separability analysis.

pub mod channel;
pub mod density;
pub mod frame;
pub mod linalg;
pub mod povm;
pub mod scenario;
pub mod separability;

pub use channel::{check_f_positivity, reduced_map, FPositivity, ReducedMap};
pub use density::DensityOperator;
pub use frame::QuantumFrame;
pub use linalg::{CMat, CVec};
pub use povm::{imm_from_povm, imm_from_states, IcPovm};
pub use scenario::{born_statistics, QuantumScenario};
pub use separability::{
    check_f_separability_state, probe_f_separability_unitary, ProbeOutcome,
    SeparabilityCertificate, SeparabilityOutcome, SeparabilityViolation,
};
