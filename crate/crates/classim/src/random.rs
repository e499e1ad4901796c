//! Seeded random generators for states, unitaries, frames, scenarios and
//! stochastic models. Everything takes an explicit RNG so that property
//! suites and CLI runs are reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::OpenSystemModel;
use crate::quantum::density::DensityOperator;
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{CMat, CVec};
use crate::quantum::povm::IcPovm;
use crate::quantum::scenario::QuantumScenario;
use crate::tensor::{Axis, AxisLabel, CondTable, ImmMatrix, ProbVector, Tolerances};

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix: independent standard complex normal entries.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary via the QR decomposition of a Ginibre matrix,
/// with the phase convention fixed by the diagonal of R.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let qr = ginibre(d, d, rng).qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..d {
        let z = r_diag[j];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hilbert-Schmidt-random density operator `G G† / tr`.
pub fn hs_random_density<R: Rng>(d: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr: Complex64 = m.diagonal().sum();
    DensityOperator::new(m / tr, 1e-9).expect("Gram matrix is a density operator")
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng>(d: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::from_fn(d, |_, _| complex_normal(rng));
        let norm = v.norm();
        if norm > 1e-6 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Uniform sample from the probability simplex (flat Dirichlet), via
/// normalized exponentials.
pub fn dirichlet_uniform<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            -u.ln()
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

/// Random minimal frame: `d²` Haar-random pure states, resampled until their
/// projectors are well-conditioned as an operator basis.
pub fn random_minimal_frame<R: Rng>(d: usize, rng: &mut R) -> Result<QuantumFrame> {
    for _ in 0..500 {
        let vectors: Vec<CVec> = (0..d * d).map(|_| random_pure_state(d, rng)).collect();
        if let Ok(frame) = QuantumFrame::new(vectors, 1e-9) {
            return Ok(frame);
        }
    }
    Err(crate::error::Error::SingularFrame(
        "could not draw a well-conditioned frame in 500 attempts".into(),
    ))
}

/// Random IC-POVM: frames are resampled until the induced weights are all
/// strictly positive (for Haar-random qubit frames roughly one draw in eight
/// qualifies).
pub fn random_ic_povm<R: Rng>(d: usize, rng: &mut R) -> Result<IcPovm> {
    for _ in 0..5000 {
        let frame = random_minimal_frame(d, rng)?;
        if let Ok(povm) = IcPovm::from_frame(frame) {
            return Ok(povm);
        }
    }
    Err(crate::error::Error::SingularFrame(
        "could not draw a frame with positive POVM weights in 5000 attempts".into(),
    ))
}

/// Random scenario with equal system and environment dimension: HS-random
/// joint initial state, Haar unitaries, random IC-POVM.
pub fn random_scenario<R: Rng>(d: usize, rng: &mut R) -> Result<QuantumScenario> {
    let povm = random_ic_povm(d, rng)?;
    let rho0 = hs_random_density(d * d, rng);
    let v0 = haar_unitary(d * d, rng);
    let v1 = haar_unitary(d * d, rng);
    QuantumScenario::new(rho0, v0, v1, povm, None, 1e-9)
}

/// Random proper distribution over `n` symbols.
pub fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Result<ProbVector> {
    ProbVector::new(dirichlet_uniform(n, rng))
}

/// Random column-stochastic IMM, resampled until comfortably invertible.
pub fn random_imm<R: Rng>(n: usize, rng: &mut R) -> Result<ImmMatrix> {
    let tol = Tolerances::default();
    for _ in 0..500 {
        let mut rows = vec![vec![0.0; n]; n];
        for l in 0..n {
            let col = dirichlet_uniform(n, rng);
            for a in 0..n {
                rows[a][l] = col[a];
            }
        }
        // generous margin below the default threshold keeps downstream
        // reconstructions numerically clean
        if let Ok(imm) = ImmMatrix::from_rows(&rows, &tol).and_then(|m| m.inverted(1e4)) {
            return Ok(imm);
        }
    }
    Err(crate::error::Error::NotInformationallyComplete(
        "could not draw an invertible IMM in 500 attempts".into(),
    ))
}

/// Random valid open-system model with system alphabet `n` and environment
/// alphabet `n`.
pub fn random_model<R: Rng>(n: usize, rng: &mut R) -> Result<OpenSystemModel> {
    let p0 = random_distribution(n, rng)?;
    let mut t1 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::E1, n),
        Axis::outcome(AxisLabel::L1, n),
        Axis::condition(AxisLabel::L0, n),
    ])?;
    for l0 in 0..n {
        let col = dirichlet_uniform(n * n, rng);
        for e1 in 0..n {
            for l1 in 0..n {
                t1.set(&[e1, l1, l0], col[e1 * n + l1]);
            }
        }
    }
    let mut t2 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::L2, n),
        Axis::condition(AxisLabel::E1, n),
        Axis::condition(AxisLabel::S, n),
    ])?;
    for e1 in 0..n {
        for s in 0..n {
            let col = dirichlet_uniform(n, rng);
            for l2 in 0..n {
                t2.set(&[l2, e1, s], col[l2]);
            }
        }
    }
    let imm = random_imm(n, rng)?;
    OpenSystemModel::new(p0, t1, t2, imm, false)
}

/// Transfer matrix of the completely depolarizing channel in any frame.
pub fn depolarizing_transfer(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, 1.0 / n as f64)
}
