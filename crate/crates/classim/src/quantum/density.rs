//! Density operators with validation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::linalg::{
    hermitian_eigenvalues, identity, is_hermitian, kron, trace, CMat, CVec,
};

/// A validated density operator: hermitian, trace one, positive semi-definite
/// within tolerance.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    dim: usize,
    mat: CMat,
}

impl DensityOperator {
    pub fn new(mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotDensity("matrix is not square".into()));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotDensity("matrix has non-finite entries".into()));
        }
        if !is_hermitian(&mat, tol) {
            return Err(Error::NotDensity("matrix is not hermitian".into()));
        }
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::NotDensity(format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&mat)?[0];
        if min < -tol {
            return Err(Error::NotDensity(format!(
                "smallest eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(DensityOperator { dim: mat.nrows(), mat })
    }

    /// `|v⟩⟨v|` for a normalized vector.
    pub fn pure(v: &CVec, tol: f64) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotDensity(format!("state vector has norm {norm}")));
        }
        DensityOperator::new(v * v.adjoint(), tol)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator {
            dim: d,
            mat: identity(d) / Complex64::new(d as f64, 0.0),
        }
    }

    /// Tensor product of two density operators.
    pub fn product(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            dim: self.dim * other.dim,
            mat: kron(&self.mat, &other.mat),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.mat)?[0])
    }
}
