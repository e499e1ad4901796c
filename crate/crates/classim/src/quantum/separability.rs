//! Frame-separability of joint states and a sampling probe for unitaries.
//!
//! A joint state is frame-separable (with respect to a system frame) when its
//! unique minimal-frame decomposition `sum_psi f_psi |psi><psi| ⊗ eps_psi`
//! has nonnegative weights and proper environment states. A unitary is
//! frame-separable when it preserves that set; the probe below searches for a
//! violating input by sampling — only violations are certificates, absence of
//! one at a finite budget proves nothing.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quantum::density::DensityOperator;
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{hermitian_eigenvalues, identity, is_unitary, kron, trace, CMat};
use crate::random::{dirichlet_uniform, hs_random_density};

/// Threshold below which the smallest eigenvalue of a conditional environment
/// operator counts as a genuine negativity.
const PSD_TOL: f64 = 1e-9;

/// The decomposition data of a separable state: per frame index, the weight
/// and the conditional environment state.
#[derive(Debug, Clone)]
pub struct SeparabilityCertificate {
    /// Nonnegative weights summing to one (the FDCs of the reduced system
    /// state).
    pub weights: Vec<f64>,
    /// Trace-one environment states; for vanishing weights the operator is
    /// unconstrained and reported as maximally mixed.
    pub env_states: Vec<CMat>,
}

/// How a state fails to be frame-separable.
#[derive(Debug, Clone)]
pub enum SeparabilityViolation {
    /// A system weight is negative.
    NegativeWeight { index: usize, value: f64 },
    /// A conditional environment operator has a negative eigenvalue.
    EnvNotPositive { index: usize, min_eigenvalue: f64 },
}

impl std::fmt::Display for SeparabilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeparabilityViolation::NegativeWeight { index, value } => {
                write!(f, "system weight {index} is {value:.6}")
            }
            SeparabilityViolation::EnvNotPositive { index, min_eigenvalue } => {
                write!(
                    f,
                    "environment operator {index} has eigenvalue {min_eigenvalue:.6}"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum SeparabilityOutcome {
    Separable(SeparabilityCertificate),
    Violated(SeparabilityViolation),
}

impl SeparabilityOutcome {
    pub fn is_separable(&self) -> bool {
        matches!(self, SeparabilityOutcome::Separable(_))
    }
}

/// Reusable separability checker for one pair of frames; building it sets up
/// the joint frame solve, which dominates the cost of a single check.
#[derive(Debug, Clone)]
pub struct FrameSeparability {
    frame_e: QuantumFrame,
    joint: QuantumFrame,
    d_s: usize,
    d_e: usize,
    n_s: usize,
    n_e: usize,
}

impl FrameSeparability {
    pub fn new(frame_s: &QuantumFrame, frame_e: &QuantumFrame) -> Result<Self> {
        Ok(FrameSeparability {
            frame_e: frame_e.clone(),
            joint: frame_s.tensor(frame_e)?,
            d_s: frame_s.dim(),
            d_e: frame_e.dim(),
            n_s: frame_s.len(),
            n_e: frame_e.len(),
        })
    }

    /// Decomposes a joint operator (assumed a state) and tests the weights
    /// and conditional environment operators.
    pub fn check(&self, rho: &CMat, tol: f64) -> Result<SeparabilityOutcome> {
        if rho.nrows() != self.d_s * self.d_e {
            return Err(Error::ShapeMismatch(format!(
                "state dimension {} is not {}x{}",
                rho.nrows(),
                self.d_s,
                self.d_e
            )));
        }
        let f = self.joint.fdc(rho)?;

        let mut weights = Vec::with_capacity(self.n_s);
        let mut env_ops = Vec::with_capacity(self.n_s);
        for psi in 0..self.n_s {
            let block = &f[psi * self.n_e..(psi + 1) * self.n_e];
            let g = self.frame_e.reconstruct(block)?;
            weights.push(trace(&g).re);
            env_ops.push(g);
        }

        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &w)| w < -tol) {
            return Ok(SeparabilityOutcome::Violated(
                SeparabilityViolation::NegativeWeight { index, value },
            ));
        }
        let mut env_states = Vec::with_capacity(self.n_s);
        for (index, (w, g)) in weights.iter().zip(&env_ops).enumerate() {
            if *w <= tol {
                env_states.push(identity(self.d_e) / Complex64::new(self.d_e as f64, 0.0));
                continue;
            }
            let eps = g / Complex64::new(*w, 0.0);
            let min = hermitian_eigenvalues(&eps)?[0];
            if min < -PSD_TOL {
                return Ok(SeparabilityOutcome::Violated(
                    SeparabilityViolation::EnvNotPositive { index, min_eigenvalue: min },
                ));
            }
            env_states.push(eps);
        }
        Ok(SeparabilityOutcome::Separable(SeparabilityCertificate {
            weights,
            env_states,
        }))
    }
}

/// Computes the unique minimal-frame decomposition of a joint state and tests
/// it for frame-separability.
///
/// The joint FDCs over the product frame are regrouped per system index into
/// a weight and a conditional environment operator. Weights below `tol` leave
/// their environment operator unconstrained.
pub fn check_f_separability_state(
    frame_s: &QuantumFrame,
    frame_e: &QuantumFrame,
    rho: &DensityOperator,
    tol: f64,
) -> Result<SeparabilityOutcome> {
    FrameSeparability::new(frame_s, frame_e)?.check(rho.matrix(), tol)
}

/// Result of probing a unitary for frame-separability violations.
#[derive(Debug, Clone)]
pub enum ProbeOutcome {
    /// No violation at this sampling budget. Not a proof of separability.
    NoCounterexample { samples: u64 },
    /// A separable input that the unitary maps outside the separable set.
    Counterexample {
        sample_index: u64,
        input: DensityOperator,
        violation: SeparabilityViolation,
    },
}

impl ProbeOutcome {
    pub fn found(&self) -> bool {
        matches!(self, ProbeOutcome::Counterexample { .. })
    }
}

/// Samples random frame-separable states (uniform weights on the simplex,
/// Hilbert-Schmidt-random environment states), pushes them through the
/// unitary and checks separability of the output. Deterministic under the
/// seed.
pub fn probe_f_separability_unitary(
    frame_s: &QuantumFrame,
    frame_e: &QuantumFrame,
    v: &CMat,
    samples: u64,
    seed: u64,
) -> Result<ProbeOutcome> {
    let d_s = frame_s.dim();
    let d_e = frame_e.dim();
    let d = d_s * d_e;
    if v.nrows() != d || v.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "unitary is {}x{}, expected {d}x{d}",
            v.nrows(),
            v.ncols()
        )));
    }
    if !is_unitary(v, 1e-9) {
        return Err(Error::NotUnitary("probe requires a unitary".into()));
    }
    let analyzer = FrameSeparability::new(frame_s, frame_e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    for k in 0..samples {
        let weights = dirichlet_uniform(frame_s.len(), &mut rng);
        let mut rho = CMat::zeros(d, d);
        for (i, &w) in weights.iter().enumerate() {
            let eps = hs_random_density(d_e, &mut rng);
            rho += kron(frame_s.projector(i), eps.matrix()) * Complex64::new(w, 0.0);
        }
        // separable by construction and unitarily evolved, so both are
        // density operators; revalidation is deferred to the hit case
        let evolved = v * &rho * v.adjoint();
        if let SeparabilityOutcome::Violated(violation) = analyzer.check(&evolved, tol)? {
            let input = DensityOperator::new(rho, 1e-9)?;
            return Ok(ProbeOutcome::Counterexample { sample_index: k, input, violation });
        }
    }
    Ok(ProbeOutcome::NoCounterexample { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{interaction_unitary, sic_frame};
    use nalgebra::dvector;

    #[test]
    fn product_with_frame_element_is_separable() {
        let frame = sic_frame();
        let tau = hs_random_density(2, &mut ChaCha8Rng::seed_from_u64(3));
        let rho = DensityOperator::new(
            kron(frame.projector(1), tau.matrix()),
            1e-9,
        )
        .unwrap();
        match check_f_separability_state(&frame, &frame, &rho, 1e-9).unwrap() {
            SeparabilityOutcome::Separable(cert) => {
                for (i, &w) in cert.weights.iter().enumerate() {
                    let expected = if i == 1 { 1.0 } else { 0.0 };
                    assert!((w - expected).abs() < 1e-10);
                }
                let diff = &cert.env_states[1] - tau.matrix();
                assert!(crate::quantum::linalg::max_entry_norm(&diff) < 1e-10);
            }
            SeparabilityOutcome::Violated(v) => panic!("unexpected violation: {v}"),
        }
    }

    #[test]
    fn maximally_mixed_two_qubits_is_separable() {
        let frame = sic_frame();
        let rho = DensityOperator::maximally_mixed(4);
        match check_f_separability_state(&frame, &frame, &rho, 1e-9).unwrap() {
            SeparabilityOutcome::Separable(cert) => {
                for &w in &cert.weights {
                    assert!((w - 0.25).abs() < 1e-10);
                }
                for eps in &cert.env_states {
                    let diff = eps - identity(2) * Complex64::new(0.5, 0.0);
                    assert!(crate::quantum::linalg::max_entry_norm(&diff) < 1e-10);
                }
            }
            SeparabilityOutcome::Violated(v) => panic!("unexpected violation: {v}"),
        }
    }

    #[test]
    fn bell_state_violates_separability() {
        let frame = sic_frame();
        let bell = dvector![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
        ];
        let rho = DensityOperator::pure(&bell, 1e-12).unwrap();
        match check_f_separability_state(&frame, &frame, &rho, 1e-9).unwrap() {
            SeparabilityOutcome::Violated(SeparabilityViolation::EnvNotPositive {
                min_eigenvalue,
                ..
            }) => {
                // the conditional environment operators of the Bell state
                // have spectrum {-1, 2}
                assert!((min_eigenvalue + 1.0).abs() < 1e-9);
            }
            other => panic!("expected an environment positivity violation, got {other:?}"),
        }
    }

    #[test]
    fn identity_probe_finds_nothing() {
        let frame = sic_frame();
        let outcome =
            probe_f_separability_unitary(&frame, &frame, &identity(4), 50, 11).unwrap();
        assert!(!outcome.found());
    }

    #[test]
    fn interaction_unitary_probe_finds_a_counterexample() {
        let frame = sic_frame();
        let outcome =
            probe_f_separability_unitary(&frame, &frame, &interaction_unitary(), 10_000, 11)
                .unwrap();
        match outcome {
            ProbeOutcome::Counterexample { sample_index, input, .. } => {
                // generic separable inputs are entangled by this coupling, so
                // the very first samples already violate
                assert!(sample_index < 100, "took {sample_index} samples");
                // the reported input really is separable
                assert!(check_f_separability_state(&frame, &frame, &input, 1e-9)
                    .unwrap()
                    .is_separable());
            }
            ProbeOutcome::NoCounterexample { .. } => {
                panic!("interaction unitary should break separability")
            }
        }
    }

    #[test]
    fn frame_permuting_product_unitary_stays_separable() {
        let frame = sic_frame();
        // phase unitary cycling the three equatorial frame states, tensored
        // with a random environment unitary
        let u_s = crate::fixtures::frame_cycling_unitary();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u_e = crate::random::haar_unitary(2, &mut rng);
        let v = kron(&u_s, &u_e);
        let outcome = probe_f_separability_unitary(&frame, &frame, &v, 200, 17).unwrap();
        assert!(!outcome.found());
    }
}
