//! Complex dense linear algebra helpers shared by the quantum layer.
//!
//! Operators live on spaces of dimension at most ~8, so everything is dense
//! `DMatrix<Complex64>` and solves go through LU / symmetric eigensolvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Kronecker product, first factor major (index = i_a * dim_b + i_b).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let d = m.nrows();
    (m.adjoint() * m - identity(d)).iter().all(|z| z.norm() <= tol)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().sum()
}

/// Partial trace over the system (first) factor of an operator on
/// `system ⊗ environment`.
pub fn partial_trace_system(m: &CMat, d_s: usize, d_e: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d_s * d_e);
    let mut out = CMat::zeros(d_e, d_e);
    for s in 0..d_s {
        for i in 0..d_e {
            for j in 0..d_e {
                out[(i, j)] += m[(s * d_e + i, s * d_e + j)];
            }
        }
    }
    out
}

/// Partial trace over the environment (second) factor.
pub fn partial_trace_env(m: &CMat, d_s: usize, d_e: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d_s * d_e);
    let mut out = CMat::zeros(d_s, d_s);
    for e in 0..d_e {
        for i in 0..d_s {
            for j in 0..d_s {
                out[(i, j)] += m[(i * d_e + e, j * d_e + e)];
            }
        }
    }
    out
}

/// Orthonormal basis of the real vector space of hermitian `d × d` matrices
/// under the Hilbert-Schmidt inner product: the normalized identity followed
/// by the generalized Gell-Mann matrices (symmetric, antisymmetric,
/// diagonal). Length is `d²`.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(identity(d) / Complex64::new((d as f64).sqrt(), 0.0));
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMat::zeros(d, d);
            sym[(j, k)] = inv_sqrt2;
            sym[(k, j)] = inv_sqrt2;
            basis.push(sym);
            let mut asym = CMat::zeros(d, d);
            asym[(j, k)] = Complex64::new(0.0, -1.0) * inv_sqrt2;
            asym[(k, j)] = Complex64::new(0.0, 1.0) * inv_sqrt2;
            basis.push(asym);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = CMat::zeros(d, d);
        for m in 0..l {
            diag[(m, m)] = Complex64::new(norm, 0.0);
        }
        diag[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(diag);
    }
    basis
}

/// Real coordinates of a hermitian operator in [`hermitian_basis`].
pub fn hermitian_coords(x: &CMat, basis: &[CMat]) -> DVector<f64> {
    DVector::from_iterator(
        basis.len(),
        basis.iter().map(|b| (b.adjoint() * x).diagonal().sum().re),
    )
}

/// Reassembles a hermitian operator from its real coordinates.
pub fn from_hermitian_coords(coords: &DVector<f64>, basis: &[CMat]) -> CMat {
    let d = basis[0].nrows();
    let mut out = CMat::zeros(d, d);
    for (c, b) in coords.iter().zip(basis) {
        out += b * Complex64::new(*c, 0.0);
    }
    out
}

/// `exp(i * scale * H)` for hermitian `H`, via the eigendecomposition of the
/// generator; exact up to the eigensolve at these dimensions.
pub fn exp_i_hermitian(h: &CMat, scale: f64) -> Result<CMat> {
    if !is_hermitian(h, 1e-10) {
        return Err(Error::MalformedInput(
            "matrix exponential generator is not hermitian".into(),
        ));
    }
    let eig = h.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::MalformedInput("eigendecomposition failed".into()));
    }
    let d = h.nrows();
    let mut phases = CMat::zeros(d, d);
    for (i, lambda) in eig.eigenvalues.iter().enumerate() {
        phases[(i, i)] = Complex64::from_polar(1.0, scale * lambda);
    }
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

/// Eigenvalues of a hermitian operator, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    if !is_hermitian(m, 1e-8) {
        return Err(Error::MalformedInput("operator is not hermitian".into()));
    }
    // hermitize first so the eigensolver sees an exactly hermitian input
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::MalformedInput("eigendecomposition failed".into()));
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

pub fn max_entry_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Projector `|v⟩⟨v|`.
pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}
