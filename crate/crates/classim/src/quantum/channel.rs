//! Reduced dynamical maps and frame-positivity of their transfer matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quantum::density::DensityOperator;
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{is_unitary, kron, partial_trace_env, CMat};

/// The completely positive trace-preserving map obtained by coupling the
/// system to a reference environment state, evolving unitarily and tracing
/// the environment out.
#[derive(Debug, Clone)]
pub struct ReducedMap {
    v: CMat,
    tau: CMat,
    d_s: usize,
    d_e: usize,
}

/// Builds the reduced map of a joint unitary and an environment reference
/// state.
pub fn reduced_map(v: &CMat, tau: &DensityOperator, tol: f64) -> Result<ReducedMap> {
    let d_e = tau.dim();
    let d_total = v.nrows();
    if !v.is_square() || d_total % d_e != 0 {
        return Err(Error::ShapeMismatch(format!(
            "unitary of dimension {d_total} incompatible with environment dimension {d_e}"
        )));
    }
    if !is_unitary(v, tol) {
        return Err(Error::NotUnitary("joint evolution is not unitary".into()));
    }
    Ok(ReducedMap {
        v: v.clone(),
        tau: tau.matrix().clone(),
        d_s: d_total / d_e,
        d_e,
    })
}

impl ReducedMap {
    pub fn dim_system(&self) -> usize {
        self.d_s
    }

    /// Applies the map to a system operator.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.d_s || x.ncols() != self.d_s {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, system dimension is {}",
                x.nrows(),
                x.ncols(),
                self.d_s
            )));
        }
        let joint = &self.v * kron(x, &self.tau) * self.v.adjoint();
        Ok(partial_trace_env(&joint, self.d_s, self.d_e))
    }

    /// Transfer matrix in the frame representation: column `j` holds the FDCs
    /// of the evolved frame projector `j`. Trace preservation makes every
    /// column sum to one, i.e. the matrix is quasi-stochastic.
    pub fn transfer_matrix(&self, frame: &QuantumFrame) -> Result<DMatrix<f64>> {
        if frame.dim() != self.d_s {
            return Err(Error::ShapeMismatch(format!(
                "frame dimension {} does not match system dimension {}",
                frame.dim(),
                self.d_s
            )));
        }
        let n = frame.len();
        let mut t = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let evolved = self.apply(frame.projector(j))?;
            let f = frame.fdc(&evolved)?;
            for i in 0..n {
                t[(i, j)] = f[i];
            }
        }
        Ok(t)
    }
}

/// Result of a frame-positivity check of a transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum FPositivity {
    /// All entries nonnegative: the map sends the frame's convex hull into
    /// itself.
    Positive,
    /// Frame vertex `input` is mapped to a decomposition with a negative
    /// coefficient at `output`.
    Counterexample {
        input: usize,
        output: usize,
        value: f64,
    },
}

/// A transfer matrix is frame-positive iff it is a proper stochastic matrix;
/// a negative entry names a frame vertex leaving the convex hull.
pub fn check_f_positivity(transfer: &DMatrix<f64>, tol: f64) -> Result<FPositivity> {
    if !transfer.is_square() {
        return Err(Error::ShapeMismatch("transfer matrix must be square".into()));
    }
    for j in 0..transfer.ncols() {
        let sum: f64 = transfer.column(j).iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::MalformedInput(format!(
                "transfer column {j} sums to {sum}; not trace preserving"
            )));
        }
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for j in 0..transfer.ncols() {
        for i in 0..transfer.nrows() {
            let v = transfer[(i, j)];
            if v < -tol && worst.map_or(true, |(_, _, w)| v < w) {
                worst = Some((j, i, v));
            }
        }
    }
    Ok(match worst {
        None => FPositivity::Positive,
        Some((input, output, value)) => FPositivity::Counterexample { input, output, value },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{interaction_unitary, sic_frame, xy_contraction, z_contraction};
    use crate::quantum::linalg::{identity, max_entry_norm};
    use num_complex::Complex64;

    fn paulis() -> [CMat; 3] {
        let mut x = CMat::zeros(2, 2);
        x[(0, 1)] = Complex64::new(1.0, 0.0);
        x[(1, 0)] = Complex64::new(1.0, 0.0);
        let mut y = CMat::zeros(2, 2);
        y[(0, 1)] = Complex64::new(0.0, -1.0);
        y[(1, 0)] = Complex64::new(0.0, 1.0);
        let mut z = CMat::zeros(2, 2);
        z[(0, 0)] = Complex64::new(1.0, 0.0);
        z[(1, 1)] = Complex64::new(-1.0, 0.0);
        [x, y, z]
    }

    #[test]
    fn interaction_map_contracts_the_bloch_ball() {
        let map = reduced_map(
            &interaction_unitary(),
            &DensityOperator::maximally_mixed(2),
            1e-10,
        )
        .unwrap();
        let [x, y, z] = paulis();
        for (p, factor) in [(&x, xy_contraction()), (&y, xy_contraction()), (&z, z_contraction())] {
            let out = map.apply(p).unwrap();
            assert!(max_entry_norm(&(out - p * Complex64::new(factor, 0.0))) < 1e-10);
        }
        // trace component is untouched
        let out = map.apply(&identity(2)).unwrap();
        assert!(max_entry_norm(&(out - identity(2))) < 1e-10);
    }

    #[test]
    fn identity_unitary_gives_identity_transfer() {
        let map = reduced_map(&identity(4), &DensityOperator::maximally_mixed(2), 1e-10).unwrap();
        let t = map.transfer_matrix(&sic_frame()).unwrap();
        assert!((t - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-10);
    }

    #[test]
    fn random_reduced_map_preserves_trace() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let v = crate::random::haar_unitary(4, &mut rng);
            let tau = crate::random::hs_random_density(2, &mut rng);
            let map = reduced_map(&v, &tau, 1e-9).unwrap();
            let out = map.apply(&(identity(2) * Complex64::new(0.5, 0.0))).unwrap();
            let tr = out.diagonal().sum();
            assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_map_is_frame_positive_on_the_sic_frame() {
        let map = reduced_map(
            &interaction_unitary(),
            &DensityOperator::maximally_mixed(2),
            1e-10,
        )
        .unwrap();
        let t = map.transfer_matrix(&sic_frame()).unwrap();
        assert_eq!(check_f_positivity(&t, 1e-10).unwrap(), FPositivity::Positive);
    }

    #[test]
    fn depolarizing_transfer_is_positive() {
        let t = DMatrix::<f64>::from_element(4, 4, 0.25);
        assert_eq!(check_f_positivity(&t, 1e-12).unwrap(), FPositivity::Positive);
    }

    #[test]
    fn bit_flip_leaves_the_tetrahedron() {
        // A unitary bit flip maps the first frame state to the opposite pole,
        // whose decomposition has the coefficient -1/2 at index 0.
        let [x, _, _] = paulis();
        let map = reduced_map(&x, &DensityOperator::new(identity(1), 1e-12).unwrap(), 1e-10)
            .unwrap();
        let t = map.transfer_matrix(&sic_frame()).unwrap();
        match check_f_positivity(&t, 1e-10).unwrap() {
            FPositivity::Counterexample { input, output, value } => {
                assert_eq!(input, 0);
                assert_eq!(output, 0);
                assert!((value + 0.5).abs() < 1e-10);
            }
            FPositivity::Positive => panic!("bit flip should break frame positivity"),
        }
    }
}
