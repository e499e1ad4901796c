//! Rank-one informationally complete POVMs built over a minimal frame.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{identity, max_entry_norm, CMat, CVec};
use crate::tensor::{ImmMatrix, Tolerances};

/// Smallest admissible POVM weight; anything below rejects the frame as a
/// POVM generator.
const WEIGHT_FLOOR: f64 = 1e-10;

/// A rank-one IC-POVM: effects `E_i = w_i |psi_i><psi_i|` over a minimal
/// frame, with weights solving `sum_i E_i = 1`.
#[derive(Debug, Clone)]
pub struct IcPovm {
    frame: QuantumFrame,
    weights: Vec<f64>,
}

impl IcPovm {
    /// Solves the unique weights making the frame a POVM. For a minimal frame
    /// the linear system has exactly one solution; it is accepted only if all
    /// weights are strictly positive.
    pub fn from_frame(frame: QuantumFrame) -> Result<Self> {
        let weights = frame.fdc_weights_for_identity()?;
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w < WEIGHT_FLOOR) {
            return Err(Error::SingularFrame(format!(
                "frame admits no POVM: weight {i} solves to {w:.3e}"
            )));
        }
        Ok(IcPovm { frame, weights })
    }

    /// Uses caller-supplied weights after checking completeness and
    /// positivity.
    pub fn with_weights(frame: QuantumFrame, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.len() != frame.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for a frame of {} elements",
                weights.len(),
                frame.len()
            )));
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w < WEIGHT_FLOOR) {
            return Err(Error::MalformedInput(format!(
                "POVM weight {i} is {w:.3e}; weights must be strictly positive"
            )));
        }
        let sum = frame.reconstruct(&weights)?;
        let residual = max_entry_norm(&(sum - identity(frame.dim())));
        if residual > tol {
            return Err(Error::MalformedInput(format!(
                "effects sum deviates from identity by {residual:.3e}"
            )));
        }
        Ok(IcPovm { frame, weights })
    }

    pub fn frame(&self) -> &QuantumFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Effect `E_i = w_i |psi_i><psi_i|`.
    pub fn effect(&self, i: usize) -> CMat {
        self.frame.projector(i) * Complex64::new(self.weights[i], 0.0)
    }

    /// Measurement (Kraus) operator `K_i = sqrt(w_i) |psi_i><psi_i|`, the
    /// positive root; any isometric dressing leaves the two-time statistics
    /// unchanged because the post-measurement state is rank one.
    pub fn kraus(&self, i: usize) -> CMat {
        self.frame.projector(i) * Complex64::new(self.weights[i].sqrt(), 0.0)
    }
}

impl QuantumFrame {
    /// Weights `w` with `sum_i w_i |psi_i><psi_i| = 1`; unique for a minimal
    /// frame (they are the FDCs of the identity).
    pub fn fdc_weights_for_identity(&self) -> Result<Vec<f64>> {
        self.fdc(&identity(self.dim()))
    }
}

/// The invasive-measurement matrix of rank-one effects applied to the
/// rank-one states of the same index set: `M[a][l] = w_a |<psi_a|psi_l>|²`.
///
/// No informational-completeness is assumed here; completeness of the effects
/// makes the columns sum to one.
pub fn imm_from_states(vectors: &[CVec], weights: &[f64]) -> Result<ImmMatrix> {
    if vectors.len() != weights.len() {
        return Err(Error::ShapeMismatch(
            "one weight per measurement state is required".into(),
        ));
    }
    let n = vectors.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|l| weights[a] * vectors[a].dotc(&vectors[l]).norm_sqr())
                .collect()
        })
        .collect();
    ImmMatrix::from_rows(&rows, &Tolerances::default())
}

/// IMM of an IC-POVM, inverted and ready for reconstruction; a singular
/// matrix is reported as informational incompleteness.
pub fn imm_from_povm(povm: &IcPovm) -> Result<ImmMatrix> {
    let imm = imm_from_states(povm.frame().vectors(), povm.weights())?;
    imm.inverted(Tolerances::default().imm_condition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::sic_frame;

    #[test]
    fn sic_weights_solve_to_one_half() {
        let povm = IcPovm::from_frame(sic_frame()).unwrap();
        for i in 0..4 {
            assert!((povm.weight(i) - 0.5).abs() < 1e-12);
        }
        // completeness and the Kraus/effect relation
        let mut sum = CMat::zeros(2, 2);
        for i in 0..4 {
            sum += povm.effect(i);
            let k = povm.kraus(i);
            assert!(max_entry_norm(&(k.adjoint() * &k - povm.effect(i))) < 1e-12);
        }
        assert!(max_entry_norm(&(sum - identity(2))) < 1e-12);
    }

    #[test]
    fn sic_imm_matches_closed_form() {
        let povm = IcPovm::from_frame(sic_frame()).unwrap();
        let imm = imm_from_povm(&povm).unwrap();
        for a in 0..4 {
            for l in 0..4 {
                let expected = if a == l { 0.5 } else { 1.0 / 6.0 };
                assert!((imm.entry(a, l) - expected).abs() < 1e-12, "M[{a}][{l}]");
            }
        }
    }

    #[test]
    fn orthonormal_projective_measurement_has_identity_imm() {
        // Two orthonormal projectors with weight 1 on a qubit: not a frame,
        // but the matrix construction still applies and yields the identity.
        let e0 = CVec::from_column_slice(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let e1 = CVec::from_column_slice(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let imm = imm_from_states(&[e0, e1], &[1.0, 1.0]).unwrap();
        assert_eq!(imm.entry(0, 0), 1.0);
        assert_eq!(imm.entry(0, 1), 0.0);
        assert_eq!(imm.entry(1, 0), 0.0);
        assert_eq!(imm.entry(1, 1), 1.0);
    }

    #[test]
    fn explicit_weights_are_checked_for_completeness() {
        let frame = sic_frame();
        assert!(IcPovm::with_weights(frame.clone(), vec![0.5; 4], 1e-9).is_ok());
        assert!(IcPovm::with_weights(frame.clone(), vec![0.4; 4], 1e-9).is_err());
        assert!(IcPovm::with_weights(frame, vec![0.5, 0.5, 0.5, -0.5], 1e-9).is_err());
    }
}
