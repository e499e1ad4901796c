//! Minimal quantum frames: `d²` rank-one projectors forming a (non-orthogonal)
//! basis of the hermitian operators, together with the frame operator and its
//! inverse.
//!
//! The frame decomposition coefficients (FDCs) of a state are the unique real
//! weights expanding it over the frame projectors; they sum to the trace but
//! may be negative — that negativity is exactly what the classicality
//! analysis is probing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::linalg::{
    from_hermitian_coords, hermitian_basis, hermitian_coords, is_hermitian, kron, max_entry_norm,
    projector, CMat, CVec,
};

const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct QuantumFrame {
    dim: usize,
    vectors: Vec<CVec>,
    projectors: Vec<CMat>,
    basis: Vec<CMat>,
    /// Row `i` holds the hermitian coordinates of projector `i` (`n × d²`).
    coords: DMatrix<f64>,
    /// Frame operator in the hermitian basis (`d² × d²`, symmetric positive
    /// definite for a minimal frame).
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl QuantumFrame {
    /// Builds a minimal frame from `d²` unit vectors on dimension `d`.
    pub fn new(vectors: Vec<CVec>, tol: f64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::SingularFrame("no frame vectors given".into()));
        }
        let dim = vectors[0].len();
        if dim < 2 {
            return Err(Error::SingularFrame("frame dimension must be at least 2".into()));
        }
        let n = dim * dim;
        if vectors.len() != n {
            return Err(Error::SingularFrame(format!(
                "a minimal frame on dimension {dim} needs {n} vectors, got {}",
                vectors.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "frame vector {i} has length {}, expected {dim}",
                    v.len()
                )));
            }
            let norm = v.norm();
            if (norm - 1.0).abs() > tol {
                return Err(Error::SingularFrame(format!(
                    "frame vector {i} has norm {norm}, expected 1"
                )));
            }
        }
        let projectors: Vec<CMat> = vectors.iter().map(projector).collect();
        let basis = hermitian_basis(dim);
        let coords = DMatrix::from_fn(n, n, |i, j| {
            (basis[j].adjoint() * &projectors[i]).diagonal().sum().re
        });
        let s = coords.transpose() * &coords;
        let s_inv = s.clone().lu().try_inverse().ok_or_else(|| {
            Error::SingularFrame("frame projectors are linearly dependent".into())
        })?;
        let cond = one_norm(&s) * one_norm(&s_inv);
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(Error::SingularFrame(format!(
                "frame operator condition estimate {cond:.3e} too large; \
                 projectors are numerically dependent"
            )));
        }
        Ok(QuantumFrame { dim, vectors, projectors, basis, coords, s, s_inv })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &CVec {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn projector(&self, i: usize) -> &CMat {
        &self.projectors[i]
    }

    fn coords_of(&self, x: &CMat) -> Result<DVector<f64>> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, frame dimension is {}",
                x.nrows(),
                x.ncols(),
                self.dim
            )));
        }
        if !is_hermitian(x, 1e-9) {
            return Err(Error::MalformedInput(
                "frame decomposition requires a hermitian operator".into(),
            ));
        }
        Ok(hermitian_coords(x, &self.basis))
    }

    /// Frame decomposition coefficients of a hermitian operator: the unique
    /// weights with `sum_i f_i |psi_i><psi_i| = x`. They sum to `tr x`.
    pub fn fdc(&self, x: &CMat) -> Result<Vec<f64>> {
        let coords = self.coords_of(x)?;
        let y = &self.s_inv * coords;
        Ok((&self.coords * y).iter().cloned().collect())
    }

    /// Applies the frame operator `S(x) = sum_i tr(P_i x) P_i`.
    pub fn apply_frame_operator(&self, x: &CMat) -> Result<CMat> {
        let coords = self.coords_of(x)?;
        Ok(from_hermitian_coords(&(&self.s * coords), &self.basis))
    }

    /// Applies the inverse frame operator via the cached dense solve.
    pub fn invert_frame_operator(&self, x: &CMat) -> Result<CMat> {
        let coords = self.coords_of(x)?;
        Ok(from_hermitian_coords(&(&self.s_inv * coords), &self.basis))
    }

    /// Eigenvalues of the frame operator in the hermitian basis; diagnostic
    /// (for a minimal frame all are strictly positive).
    pub fn frame_operator_matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Reassembles `sum_i f_i |psi_i><psi_i|`.
    pub fn reconstruct(&self, fdc: &[f64]) -> Result<CMat> {
        if fdc.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a frame of {} elements",
                fdc.len(),
                self.len()
            )));
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for (f, p) in fdc.iter().zip(&self.projectors) {
            out += p * Complex64::new(*f, 0.0);
        }
        Ok(out)
    }

    /// Joint frame on `self ⊗ other`, first factor major: element
    /// `(i, j) -> i * other.len() + j` is `|psi_i ⊗ eps_j>`.
    pub fn tensor(&self, other: &QuantumFrame) -> Result<QuantumFrame> {
        let mut vectors = Vec::with_capacity(self.len() * other.len());
        for vs in &self.vectors {
            for ve in &other.vectors {
                let a = CMat::from_column_slice(vs.len(), 1, vs.as_slice());
                let b = CMat::from_column_slice(ve.len(), 1, ve.as_slice());
                let k = kron(&a, &b);
                vectors.push(CVec::from_column_slice(k.as_slice()));
            }
        }
        QuantumFrame::new(vectors, 1e-9)
    }

    /// Worst-case reconstruction error of `x` from its FDCs; diagnostic.
    pub fn reconstruction_residual(&self, x: &CMat) -> Result<f64> {
        let f = self.fdc(x)?;
        Ok(max_entry_norm(&(self.reconstruct(&f)? - x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::sic_frame;
    use crate::quantum::linalg::identity;

    #[test]
    fn sic_fdc_of_frame_elements_are_basis_vectors() {
        let frame = sic_frame();
        for i in 0..4 {
            let f = frame.fdc(frame.projector(i)).unwrap();
            for (j, &fj) in f.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((fj - expected).abs() < 1e-12, "fdc({i})[{j}] = {fj}");
            }
        }
    }

    #[test]
    fn sic_fdc_of_maximally_mixed_is_uniform() {
        let frame = sic_frame();
        let rho = identity(2) * Complex64::new(0.5, 0.0);
        let f = frame.fdc(&rho).unwrap();
        for &fi in &f {
            assert!((fi - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn sic_frame_operator_has_known_spectrum() {
        // On a qubit the frame operator acts as 2 on the identity component
        // and 2/3 on the traceless components.
        let frame = sic_frame();
        let s = frame.frame_operator_matrix();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-12);
        for i in 1..4 {
            for j in 1..4 {
                let expected = if i == j { 2.0 / 3.0 } else { 0.0 };
                assert!((s[(i, j)] - expected).abs() < 1e-12, "S[{i}][{j}]");
            }
            assert!(s[(0, i)].abs() < 1e-12);
            assert!(s[(i, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn two_projectors_are_not_a_frame() {
        let e0 = CVec::from_column_slice(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let e1 = CVec::from_column_slice(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(
            QuantumFrame::new(vec![e0, e1], 1e-9),
            Err(Error::SingularFrame(_))
        ));
    }

    #[test]
    fn dependent_projectors_are_rejected() {
        // four vectors whose projectors span only a 3-dimensional space:
        // all Bloch vectors lie in the x-z plane
        let mk = |theta: f64| {
            CVec::from_column_slice(&[
                Complex64::new((theta / 2.0).cos(), 0.0),
                Complex64::new((theta / 2.0).sin(), 0.0),
            ])
        };
        let vectors = vec![mk(0.0), mk(1.0), mk(2.0), mk(3.0)];
        assert!(matches!(
            QuantumFrame::new(vectors, 1e-9),
            Err(Error::SingularFrame(_))
        ));
    }

    #[test]
    fn frame_operator_round_trip() {
        let frame = sic_frame();
        let mut x = CMat::zeros(2, 2);
        x[(0, 0)] = Complex64::new(0.7, 0.0);
        x[(1, 1)] = Complex64::new(0.1, 0.0);
        x[(0, 1)] = Complex64::new(0.2, -0.3);
        x[(1, 0)] = Complex64::new(0.2, 0.3);
        let y = frame.invert_frame_operator(&frame.apply_frame_operator(&x).unwrap()).unwrap();
        assert!(max_entry_norm(&(y - x)) < 1e-12);
    }
}
