//! Two-time quantum scenarios and their Born-rule statistics.
//!
//! A scenario fixes a joint system⊗environment initial state, a unitary
//! carrying it to the first measurement time, a unitary between the two
//! measurement times, and a rank-one IC-POVM on the system. Measurement
//! updates, re-preparations and unitaries compose as maps on the joint space;
//! every observable probability is an unnormalized trace of such a
//! composition, so no intermediate renormalization (and no 0/0) ever occurs.

use crate::classicality::TwoTimeStatistics;
use crate::error::{Error, Result};
use crate::quantum::density::DensityOperator;
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{identity, is_unitary, kron, partial_trace_system, trace, CMat};
use crate::quantum::povm::{imm_from_povm, IcPovm};
use crate::tensor::{Axis, AxisLabel, CondTable, ProbVector};

#[derive(Debug, Clone)]
pub struct QuantumScenario {
    d_s: usize,
    d_e: usize,
    rho0: DensityOperator,
    v0: CMat,
    v1: CMat,
    povm: IcPovm,
    env_frame: Option<QuantumFrame>,
}

impl QuantumScenario {
    pub fn new(
        rho0: DensityOperator,
        v0: CMat,
        v1: CMat,
        povm: IcPovm,
        env_frame: Option<QuantumFrame>,
        tol: f64,
    ) -> Result<Self> {
        let d_s = povm.dim();
        let d_total = rho0.dim();
        if d_total % d_s != 0 {
            return Err(Error::ShapeMismatch(format!(
                "joint dimension {d_total} is not a multiple of the system dimension {d_s}"
            )));
        }
        let d_e = d_total / d_s;
        if d_e == 0 {
            return Err(Error::ShapeMismatch("environment dimension is zero".into()));
        }
        for (name, v) in [("first", &v0), ("second", &v1)] {
            if v.nrows() != d_total || v.ncols() != d_total {
                return Err(Error::ShapeMismatch(format!(
                    "{name} unitary is {}x{}, expected {d_total}x{d_total}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            if !is_unitary(v, tol) {
                return Err(Error::NotUnitary(format!("{name} evolution is not unitary")));
            }
        }
        if let Some(f) = &env_frame {
            if f.dim() != d_e {
                return Err(Error::ShapeMismatch(format!(
                    "environment frame dimension {} does not match environment dimension {d_e}",
                    f.dim()
                )));
            }
        }
        Ok(QuantumScenario { d_s, d_e, rho0, v0, v1, povm, env_frame })
    }

    /// Scenario with a product initial state `rho_s ⊗ tau`.
    pub fn from_product(
        rho_s: DensityOperator,
        tau: DensityOperator,
        v0: CMat,
        v1: CMat,
        povm: IcPovm,
        env_frame: Option<QuantumFrame>,
        tol: f64,
    ) -> Result<Self> {
        QuantumScenario::new(rho_s.product(&tau), v0, v1, povm, env_frame, tol)
    }

    pub fn dim_system(&self) -> usize {
        self.d_s
    }

    pub fn dim_env(&self) -> usize {
        self.d_e
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn povm(&self) -> &IcPovm {
        &self.povm
    }

    pub fn v0(&self) -> &CMat {
        &self.v0
    }

    pub fn v1(&self) -> &CMat {
        &self.v1
    }

    pub fn env_frame(&self) -> Option<&QuantumFrame> {
        self.env_frame.as_ref()
    }

    fn conjugate(v: &CMat, rho: &CMat) -> CMat {
        v * rho * v.adjoint()
    }

    /// Measurement update with outcome `a`, acting on the system factor.
    fn measure(&self, a: usize, rho: &CMat) -> CMat {
        let k = kron(&self.povm.kraus(a), &identity(self.d_e));
        &k * rho * k.adjoint()
    }

    /// Deterministic re-preparation in frame state `r`: the system factor is
    /// discarded and replaced, the environment factor is kept.
    fn reprepare(&self, r: usize, rho: &CMat) -> CMat {
        kron(
            self.povm.frame().projector(r),
            &partial_trace_system(rho, self.d_s, self.d_e),
        )
    }

    /// Trace against effect `a` on the system.
    fn prob(&self, a: usize, rho: &CMat) -> f64 {
        let e = kron(&self.povm.effect(a), &identity(self.d_e));
        trace(&(e * rho)).re
    }
}

/// Evaluates all five observable families of a scenario by composing
/// measurement updates, re-preparations and unitaries, and packages them with
/// the scenario's IMM.
pub fn born_statistics(sc: &QuantumScenario) -> Result<TwoTimeStatistics> {
    let n = sc.povm.len();
    let rho1 = QuantumScenario::conjugate(&sc.v0, sc.rho0.matrix());

    let p_a1: Vec<f64> = (0..n).map(|a1| sc.prob(a1, &rho1)).collect();
    let rho2_bare = QuantumScenario::conjugate(&sc.v1, &rho1);
    let p_a2: Vec<f64> = (0..n).map(|a2| sc.prob(a2, &rho2_bare)).collect();

    let mut p_a2_a1 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::A2, n),
        Axis::outcome(AxisLabel::A1, n),
    ])?;
    let mut p_a2_r1 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::A2, n),
        Axis::condition(AxisLabel::R1, n),
    ])?;
    let mut p_full = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::A2, n),
        Axis::outcome(AxisLabel::A1, n),
        Axis::condition(AxisLabel::R1, n),
    ])?;

    for r1 in 0..n {
        let rho_prep = QuantumScenario::conjugate(&sc.v1, &sc.reprepare(r1, &rho1));
        for a2 in 0..n {
            p_a2_r1.set(&[a2, r1], sc.prob(a2, &rho_prep));
        }
    }
    for a1 in 0..n {
        let measured = sc.measure(a1, &rho1);
        let evolved = QuantumScenario::conjugate(&sc.v1, &measured);
        for a2 in 0..n {
            p_a2_a1.set(&[a2, a1], sc.prob(a2, &evolved));
        }
        for r1 in 0..n {
            let reprep = QuantumScenario::conjugate(&sc.v1, &sc.reprepare(r1, &measured));
            for a2 in 0..n {
                p_full.set(&[a2, a1, r1], sc.prob(a2, &reprep));
            }
        }
    }

    let imm = imm_from_povm(&sc.povm)?;
    TwoTimeStatistics::new(
        ProbVector::new(clean(p_a1))?,
        ProbVector::new(clean(p_a2))?,
        clean_table(p_a2_a1),
        clean_table(p_a2_r1),
        clean_table(p_full),
        imm,
    )
}

/// Flushes the sub-epsilon negative noise a Born probability can pick up in
/// floating point. Anything beyond noise level is left alone so that genuine
/// violations surface in validation.
fn clean(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        if *x < 0.0 && *x > -1e-13 {
            *x = 0.0;
        }
    }
    v
}

fn clean_table(t: CondTable) -> CondTable {
    let axes = t.axes().to_vec();
    let data = clean(t.data().to_vec());
    CondTable::new(axes, data).expect("shape unchanged")
}

/// The reduced system state at the first measurement time; its FDCs are the
/// hidden-level one-time distribution of the scenario.
pub fn reduced_state_at_t1(sc: &QuantumScenario) -> CMat {
    let rho1 = QuantumScenario::conjugate(&sc.v0, sc.rho0.matrix());
    crate::quantum::linalg::partial_trace_env(&rho1, sc.d_s, sc.d_e)
}
