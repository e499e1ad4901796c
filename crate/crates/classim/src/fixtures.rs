//! The SIC-qubit example: a symmetric informationally-complete POVM on a
//! qubit, coupled to a qubit environment by an exchange-type interaction.
//!
//! This is the canonical demonstration that frame-positivity of the reduced
//! dynamics is not enough for classical simulability: the one-step map
//! contracts the frame tetrahedron into itself, yet the two-time statistics
//! reconstructs to a quasi-distribution with genuinely negative entries.
//!
//! The functions prefixed `repro_` recompute each reference quantity from
//! scratch and compare against its known value; they back both the regression
//! tests and the CLI `repro` subcommand.

use num_complex::Complex64;

use crate::classicality::{reconstruct_hidden, TwoTimeStatistics};
use crate::error::Result;
use crate::quantum::channel::reduced_map;
use crate::quantum::density::DensityOperator;
use crate::quantum::frame::QuantumFrame;
use crate::quantum::linalg::{exp_i_hermitian, kron, CMat, CVec};
use crate::quantum::povm::{imm_from_povm, IcPovm};
use crate::quantum::scenario::{born_statistics, QuantumScenario};
use crate::tensor::AxisLabel;

/// In-plane contraction factor of the reduced map: `cos(1)·cos(2)`.
pub fn xy_contraction() -> f64 {
    1.0_f64.cos() * 2.0_f64.cos()
}

/// Axial contraction factor of the reduced map: `cos²(1)`.
pub fn z_contraction() -> f64 {
    1.0_f64.cos().powi(2)
}

/// The SIC frame on a qubit: the pole `|0⟩` and three equatorial-tetrahedron
/// states `(1/√3)|0⟩ + √(2/3) e^{i·2kπ/3}|1⟩`, `k = 1, 2, 3`.
///
/// Index 0 is the pole; indices 1–3 follow `k`. All pairwise overlaps have
/// squared modulus 1/3.
pub fn sic_frame() -> QuantumFrame {
    let mut vectors: Vec<CVec> = Vec::with_capacity(4);
    vectors.push(CVec::from_column_slice(&[
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ]));
    let a = (1.0f64 / 3.0).sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    for k in 1..=3 {
        let phase = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
        vectors.push(CVec::from_column_slice(&[
            Complex64::new(a, 0.0),
            Complex64::from_polar(b, phase),
        ]));
    }
    QuantumFrame::new(vectors, 1e-12).expect("SIC frame is minimal")
}

/// The SIC-POVM built on [`sic_frame`]; every weight solves to 1/2.
pub fn sic_povm() -> IcPovm {
    IcPovm::from_frame(sic_frame()).expect("SIC frame induces a POVM")
}

fn pauli_xyz() -> [CMat; 3] {
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

/// The exchange-type system-environment coupling
/// `exp(-(i/2)(σx⊗σx + σy⊗σy + 2 σz⊗σz))`, computed through the
/// eigendecomposition of its hermitian generator.
pub fn interaction_unitary() -> CMat {
    let [x, y, z] = pauli_xyz();
    let h = (kron(&x, &x) + kron(&y, &y) + kron(&z, &z) * Complex64::new(2.0, 0.0))
        * Complex64::new(0.5, 0.0);
    exp_i_hermitian(&h, -1.0).expect("generator is hermitian")
}

/// Phase unitary `diag(1, e^{i2π/3})` cycling the three equatorial frame
/// states while fixing the pole: a frame-permuting unitary.
pub fn frame_cycling_unitary() -> CMat {
    let mut u = CMat::zeros(2, 2);
    u[(0, 0)] = Complex64::new(1.0, 0.0);
    u[(1, 1)] = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    u
}

/// The full two-time example: coupling unitary at both steps, maximally mixed
/// environment.
///
/// The system is prepared in the equatorial frame state `k = 1`. The system
/// preparation matters: a maximally mixed system leaves system and
/// environment uncorrelated at the first measurement time and the memory
/// effect (and every negative entry) disappears; preparing a frame state
/// exposes it and reproduces the reference table below.
#[derive(Debug, Clone)]
pub struct SicQubitFixture {
    pub povm: IcPovm,
    pub unitary: CMat,
    pub rho_s: DensityOperator,
    pub tau: DensityOperator,
}

impl Default for SicQubitFixture {
    fn default() -> Self {
        Self::new()
    }
}

impl SicQubitFixture {
    pub fn new() -> Self {
        let povm = sic_povm();
        let rho_s = DensityOperator::new(povm.frame().projector(1).clone(), 1e-12)
            .expect("frame projector is a pure state");
        SicQubitFixture {
            povm,
            unitary: interaction_unitary(),
            rho_s,
            tau: DensityOperator::maximally_mixed(2),
        }
    }

    pub fn scenario(&self) -> Result<QuantumScenario> {
        QuantumScenario::from_product(
            self.rho_s.clone(),
            self.tau.clone(),
            self.unitary.clone(),
            self.unitary.clone(),
            self.povm.clone(),
            Some(sic_frame()),
            1e-10,
        )
    }

    pub fn statistics(&self) -> Result<TwoTimeStatistics> {
        born_statistics(&self.scenario()?)
    }

    /// The reconstructed table `sum_l1 P(l2, l1 | r1)`, rows `l2`, columns
    /// `r1`.
    pub fn prob_table(&self) -> Result<[[f64; 4]; 4]> {
        let stats = self.statistics()?;
        let hidden = reconstruct_hidden(&stats)?;
        let summed = hidden.p_l2_l1_given_r1.marginalize(AxisLabel::L1)?;
        let mut out = [[0.0; 4]; 4];
        for (l2, row) in out.iter_mut().enumerate() {
            for (r1, cell) in row.iter_mut().enumerate() {
                *cell = summed.get(&[l2, r1]);
            }
        }
        Ok(out)
    }
}

/// Reference values of the reconstructed table, rounded to two decimals, rows
/// `l2`, columns `r1`. Three entries are negative — the witness that no
/// proper classical invasive model exists for this statistics.
pub const REFERENCE_PROB_TABLE: [[f64; 4]; 4] = [
    [0.34, 0.05, 0.25, -0.15],
    [0.61, 0.56, 0.78, 0.78],
    [0.18, 0.08, -0.15, 0.28],
    [-0.13, 0.31, 0.12, 0.09],
];

/// Positions (row, column) of the negative entries in the reference table.
pub const REFERENCE_NEGATIVE_CELLS: [(usize, usize); 3] = [(0, 3), (2, 2), (3, 0)];

/// The same table at full double precision, frozen from an independent
/// computation; regression companion to the rounded reference values.
pub const COMPUTED_PROB_TABLE: [[f64; 4]; 4] = [
    [
        0.34360294487841675,
        0.05167636315198787,
        0.252521095894342,
        -0.1491683695903661,
    ],
    [
        0.6090993821175884,
        0.556511512448963,
        0.7813566078151158,
        0.7813566078151157,
    ],
    [
        0.1783416802306425,
        0.07739353670919127,
        -0.14745155865696155,
        0.2782382694515452,
    ],
    [
        -0.13104400722664822,
        0.3144185876898575,
        0.11357385494750351,
        0.08957349232370473,
    ],
];

/// One compared quantity inside a reproduction report.
#[derive(Debug, Clone)]
pub struct ReproCheck {
    pub label: String,
    pub computed: f64,
    pub expectation: Expectation,
}

#[derive(Debug, Clone, Copy)]
pub enum Expectation {
    /// `|computed - expected| <= tol`.
    Within { expected: f64, tol: f64 },
    /// `computed < 0`.
    StrictlyNegative,
    /// `computed >= -tol`.
    NonNegative { tol: f64 },
}

impl ReproCheck {
    pub fn passed(&self) -> bool {
        match self.expectation {
            Expectation::Within { expected, tol } => (self.computed - expected).abs() <= tol,
            Expectation::StrictlyNegative => self.computed < 0.0,
            Expectation::NonNegative { tol } => self.computed >= -tol,
        }
    }
}

/// Result of recomputing one reference quantity.
#[derive(Debug, Clone)]
pub struct ReproReport {
    pub target: String,
    pub checks: Vec<ReproCheck>,
}

impl ReproReport {
    fn new(target: &str) -> Self {
        ReproReport { target: target.into(), checks: Vec::new() }
    }

    fn within(&mut self, label: String, computed: f64, expected: f64, tol: f64) {
        self.checks.push(ReproCheck {
            label,
            computed,
            expectation: Expectation::Within { expected, tol },
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(ReproCheck::passed)
    }

    pub fn n_passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }
}

impl std::fmt::Display for ReproReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{}: {}/{} checks passed",
            self.target,
            self.n_passed(),
            self.checks.len()
        )?;
        for c in &self.checks {
            let status = if c.passed() { "pass" } else { "FAIL" };
            match c.expectation {
                Expectation::Within { expected, tol } => writeln!(
                    f,
                    "  [{status}] {}: computed {:+.6}, expected {:+.6} (tol {:.0e})",
                    c.label, c.computed, expected, tol
                )?,
                Expectation::StrictlyNegative => writeln!(
                    f,
                    "  [{status}] {}: computed {:+.6}, expected strictly negative",
                    c.label, c.computed
                )?,
                Expectation::NonNegative { .. } => writeln!(
                    f,
                    "  [{status}] {}: computed {:+.6}, expected nonnegative",
                    c.label, c.computed
                )?,
            }
        }
        Ok(())
    }
}

/// Recomputes the SIC-POVM measurement matrix and compares it against the
/// closed form `(2I + J)/6`.
pub fn repro_m_matrix() -> Result<ReproReport> {
    let mut report = ReproReport::new("m-matrix");
    let imm = imm_from_povm(&sic_povm())?;
    for a in 0..4 {
        for l in 0..4 {
            let expected = if a == l { 0.5 } else { 1.0 / 6.0 };
            report.within(format!("M[{a}][{l}]"), imm.entry(a, l), expected, 1e-12);
        }
    }
    for l in 0..4 {
        let sum: f64 = (0..4).map(|a| imm.entry(a, l)).sum();
        report.within(format!("column {l} sum"), sum, 1.0, 1e-12);
    }
    Ok(report)
}

/// Recomputes the frame transfer matrix of the reduced map and compares each
/// entry against its closed form in the two contraction factors; also checks
/// that every entry is nonnegative (frame positivity) and that columns sum to
/// one (trace preservation).
pub fn repro_fdc_table() -> Result<ReproReport> {
    let mut report = ReproReport::new("fdc-table");
    let map = reduced_map(&interaction_unitary(), &DensityOperator::maximally_mixed(2), 1e-10)?;
    let transfer = map.transfer_matrix(&sic_frame())?;
    let a = xy_contraction();
    let b = z_contraction();
    for row in 0..4 {
        for col in 0..4 {
            let expected = if row == 0 && col == 0 {
                (1.0 + 3.0 * b) / 4.0
            } else if row == 0 || col == 0 {
                (1.0 - b) / 4.0
            } else if row == col {
                (3.0 + 8.0 * a + b) / 12.0
            } else {
                (3.0 - 4.0 * a + b) / 12.0
            };
            report.within(
                format!("f[{row}] of evolved frame state {col}"),
                transfer[(row, col)],
                expected,
                1e-10,
            );
        }
    }
    let min = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| transfer[(i, j)])
        .fold(f64::INFINITY, f64::min);
    report.checks.push(ReproCheck {
        label: "smallest entry (frame positivity)".into(),
        computed: min,
        expectation: Expectation::NonNegative { tol: 1e-12 },
    });
    for col in 0..4 {
        let sum: f64 = (0..4).map(|row| transfer[(row, col)]).sum();
        report.within(format!("column {col} sum"), sum, 1.0, 1e-10);
    }
    Ok(report)
}

/// Recomputes the reconstructed two-time table of the fixture and compares
/// all 16 entries against the reference values at the printed rounding
/// (±0.005), asserting the three negative cells are strictly negative.
///
/// Fifteen entries and all three signs reproduce; the cell (3, 2) computes to
/// 0.113574 against a reference 0.12 and fails the rounding comparison — see
/// the regression test pinning the full-precision table.
pub fn repro_prob_table() -> Result<ReproReport> {
    let mut report = ReproReport::new("prob-table");
    let table = SicQubitFixture::new().prob_table()?;
    for l2 in 0..4 {
        for r1 in 0..4 {
            report.within(
                format!("table[l2={l2}][r1={r1}]"),
                table[l2][r1],
                REFERENCE_PROB_TABLE[l2][r1],
                0.005,
            );
        }
    }
    for (l2, r1) in REFERENCE_NEGATIVE_CELLS {
        report.checks.push(ReproCheck {
            label: format!("sign of table[l2={l2}][r1={r1}]"),
            computed: table[l2][r1],
            expectation: Expectation::StrictlyNegative,
        });
    }
    Ok(report)
}

/// Recomputes the Bloch contraction factors of the reduced map from its
/// action on the Pauli operators.
pub fn repro_bloch_contraction() -> Result<ReproReport> {
    let mut report = ReproReport::new("bloch");
    let map = reduced_map(&interaction_unitary(), &DensityOperator::maximally_mixed(2), 1e-10)?;
    let [x, y, z] = pauli_xyz();
    let factor = |p: &CMat| -> Result<f64> {
        let out = map.apply(p)?;
        Ok((p.adjoint() * out).diagonal().sum().re / 2.0)
    };
    report.within("x contraction".into(), factor(&x)?, xy_contraction(), 1e-10);
    report.within("y contraction".into(), factor(&y)?, xy_contraction(), 1e-10);
    report.within("z contraction".into(), factor(&z)?, z_contraction(), 1e-10);
    let id = crate::quantum::linalg::identity(2);
    let trace_factor = (map.apply(&id)?).diagonal().sum().re / 2.0;
    report.within("trace component".into(), trace_factor, 1.0, 1e-10);
    Ok(report)
}

/// Runs every reproduction target.
pub fn repro_all() -> Result<Vec<ReproReport>> {
    Ok(vec![
        repro_m_matrix()?,
        repro_fdc_table()?,
        repro_prob_table()?,
        repro_bloch_contraction()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classicality::{check_conditions, Classification};
    use crate::quantum::linalg::{is_unitary, max_entry_norm};

    #[test]
    fn frame_projectors_resolve_the_identity() {
        let frame = sic_frame();
        let mut sum = CMat::zeros(2, 2);
        for i in 0..4 {
            sum += frame.projector(i);
        }
        // sum of the four projectors is twice the identity
        let diff = sum - crate::quantum::linalg::identity(2) * Complex64::new(2.0, 0.0);
        assert!(max_entry_norm(&diff) < 1e-12);
    }

    #[test]
    fn interaction_unitary_is_unitary() {
        assert!(is_unitary(&interaction_unitary(), 1e-12));
    }

    #[test]
    fn cycling_unitary_permutes_the_frame() {
        let frame = sic_frame();
        let u = frame_cycling_unitary();
        let perm = [0usize, 2, 3, 1]; // pole fixed, equatorial states cycled
        for i in 0..4 {
            let moved = &u * frame.projector(i) * u.adjoint();
            assert!(max_entry_norm(&(moved - frame.projector(perm[i]))) < 1e-12);
        }
    }

    #[test]
    fn m_matrix_reproduces() {
        let report = repro_m_matrix().unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn fdc_table_reproduces() {
        let report = repro_fdc_table().unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn bloch_contraction_reproduces() {
        let report = repro_bloch_contraction().unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn prob_table_matches_frozen_full_precision_values() {
        let table = SicQubitFixture::new().prob_table().unwrap();
        for l2 in 0..4 {
            for r1 in 0..4 {
                assert!(
                    (table[l2][r1] - COMPUTED_PROB_TABLE[l2][r1]).abs() < 1e-9,
                    "entry ({l2},{r1}): {} vs {}",
                    table[l2][r1],
                    COMPUTED_PROB_TABLE[l2][r1]
                );
            }
        }
    }

    #[test]
    fn prob_table_repro_status() {
        // 15 of the 16 rounded comparisons and all three sign checks pass;
        // cell (3, 2) computes to 0.113574 against the reference 0.12.
        let report = repro_prob_table().unwrap();
        assert_eq!(report.n_passed(), report.checks.len() - 1, "{report}");
        let failing: Vec<&ReproCheck> =
            report.checks.iter().filter(|c| !c.passed()).collect();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].label, "table[l2=3][r1=2]");
        assert!((failing[0].computed - 0.11357385494750351).abs() < 1e-9);
    }

    #[test]
    fn fixture_statistics_are_quasi_classical() {
        let stats = SicQubitFixture::new().statistics().unwrap();
        let verdict = check_conditions(&stats, 1e-9).unwrap();
        assert_eq!(verdict.classification, Classification::QuasiClassical);
        assert!(verdict.residuals.max_equality_residual() < 1e-10);
        // worst negativity is the -0.149... cell of the full reconstruction
        assert!(verdict.worst_negative < -0.14);
    }

    #[test]
    fn fixture_one_time_distribution() {
        let stats = SicQubitFixture::new().statistics().unwrap();
        let expected = [
            0.2256727848561309,
            0.20814349496658902,
            0.28309186008864,
            0.28309186008864,
        ];
        for (a, &e) in expected.iter().enumerate() {
            assert!((stats.p_a1().get(a) - e).abs() < 1e-12, "P(a1={a})");
        }
    }
}
