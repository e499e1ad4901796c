//! The decision procedure: given a two-time measurement-and-prepare
//! statistics, reconstruct the hidden-level quasi-distributions and check the
//! six consistency conditions that characterise classical invasive processes.
//!
//! Condition numbering used throughout (and in verdict reports):
//!
//! 1. the reconstructed one-time distribution `P(l1)` is proper,
//! 2. the reconstructed two-time table `P(l2,l1|r1)` is proper,
//! 3. `P(a2|r1) = sum_a1 P(a2;a1|r1)`,
//! 4. `P(a2) = sum_{a1,r1} (M^-1)[r1,a1] P(a2;a1|r1)`,
//! 5. `sum_l2 P(l2,l1|r1) = P(l1)` for every `r1` (causality),
//! 6. `P(a2;a1) = P(a2;a1|r1=a1)` (re-preparing in the measured symbol is
//!    indistinguishable from not re-preparing).
//!
//! Conditions 3–6 are equalities between observable quantities; 1 and 2 add
//! positivity of the reconstructions. A statistics that satisfies the
//! equalities but not positivity is still consistent as a quasi-probability
//! model — it is reported as quasi-classical.

use crate::error::{Error, Result};
use crate::tensor::{
    validate_distribution, Axis, AxisLabel, CondTable, ImmMatrix, ProbVector, Tolerances,
    ValidationMode,
};

/// All observable probability families of a two-time experiment with one
/// invasive measurement and an optional re-preparation at the first time.
///
/// Every stored family is a proper probability distribution over its outcome
/// axes for each conditioning value; negativity can only appear in the
/// hidden-level reconstruction.
#[derive(Debug, Clone)]
pub struct TwoTimeStatistics {
    n: usize,
    p_a1: ProbVector,
    p_a2: ProbVector,
    /// Joint `[a2][a1]`, measured but not re-prepared.
    p_a2_a1: CondTable,
    /// `[a2][r1]`, re-prepared without measuring.
    p_a2_given_r1: CondTable,
    /// `[a2][a1][r1]`, measured and re-prepared.
    p_a2_a1_given_r1: CondTable,
    imm: ImmMatrix,
}

impl TwoTimeStatistics {
    /// Validates shapes and properness of all families and caches the IMM
    /// inverse. The IMM may arrive already inverted.
    pub fn new(
        p_a1: ProbVector,
        p_a2: ProbVector,
        p_a2_a1: CondTable,
        p_a2_given_r1: CondTable,
        p_a2_a1_given_r1: CondTable,
        imm: ImmMatrix,
    ) -> Result<Self> {
        let tol = Tolerances::default();
        let n = p_a1.len();
        if p_a2.len() != n || imm.n() != n {
            return Err(Error::ShapeMismatch(
                "alphabet sizes of p_a1, p_a2 and the IMM disagree".into(),
            ));
        }
        check_axes(&p_a2_a1, &[(AxisLabel::A2, n), (AxisLabel::A1, n)], 2)?;
        check_axes(&p_a2_given_r1, &[(AxisLabel::A2, n), (AxisLabel::R1, n)], 1)?;
        check_axes(
            &p_a2_a1_given_r1,
            &[(AxisLabel::A2, n), (AxisLabel::A1, n), (AxisLabel::R1, n)],
            2,
        )?;
        for (name, p) in [("p_a1", &p_a1), ("p_a2", &p_a2)] {
            let report = validate_distribution(p, ValidationMode::Proper, tol.eq);
            if !report.passed {
                return Err(Error::MalformedInput(format!(
                    "{name} is not a proper distribution (residual {:.3e}, min {:.3e})",
                    report.normalization_residual, report.most_negative
                )));
            }
        }
        p_a2_a1
            .validate(ValidationMode::Proper, tol.eq)
            .map_err(|e| Error::MalformedInput(format!("p_a2_a1: {e}")))?;
        p_a2_given_r1
            .validate(ValidationMode::Proper, tol.eq)
            .map_err(|e| Error::MalformedInput(format!("p_a2_given_r1: {e}")))?;
        p_a2_a1_given_r1
            .validate(ValidationMode::Proper, tol.eq)
            .map_err(|e| Error::MalformedInput(format!("p_a2_a1_given_r1: {e}")))?;
        let imm = if imm.is_inverted() {
            imm
        } else {
            imm.inverted(tol.imm_condition)?
        };
        Ok(TwoTimeStatistics {
            n,
            p_a1,
            p_a2,
            p_a2_a1,
            p_a2_given_r1,
            p_a2_a1_given_r1,
            imm,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_a1(&self) -> &ProbVector {
        &self.p_a1
    }

    pub fn p_a2(&self) -> &ProbVector {
        &self.p_a2
    }

    pub fn p_a2_a1(&self) -> &CondTable {
        &self.p_a2_a1
    }

    pub fn p_a2_given_r1(&self) -> &CondTable {
        &self.p_a2_given_r1
    }

    pub fn p_a2_a1_given_r1(&self) -> &CondTable {
        &self.p_a2_a1_given_r1
    }

    pub fn imm(&self) -> &ImmMatrix {
        &self.imm
    }

    /// Max-norm distance between all corresponding families.
    pub fn max_abs_diff(&self, other: &TwoTimeStatistics) -> f64 {
        self.p_a1
            .max_abs_diff(&other.p_a1)
            .max(self.p_a2.max_abs_diff(&other.p_a2))
            .max(self.p_a2_a1.max_abs_diff(&other.p_a2_a1))
            .max(self.p_a2_given_r1.max_abs_diff(&other.p_a2_given_r1))
            .max(self.p_a2_a1_given_r1.max_abs_diff(&other.p_a2_a1_given_r1))
    }
}

fn check_axes(t: &CondTable, expected: &[(AxisLabel, usize)], n_outcomes: usize) -> Result<()> {
    if t.axes().len() != expected.len() {
        return Err(Error::ShapeMismatch(format!(
            "table has {} axes, expected {}",
            t.axes().len(),
            expected.len()
        )));
    }
    for (i, (ax, &(label, len))) in t.axes().iter().zip(expected).enumerate() {
        if ax.label != label || ax.len != len {
            return Err(Error::ShapeMismatch(format!(
                "axis {i} is {}({}), expected {label}({len})",
                ax.label, ax.len
            )));
        }
        let want_outcome = i < n_outcomes;
        if (ax.kind == crate::tensor::AxisKind::Outcome) != want_outcome {
            return Err(Error::ShapeMismatch(format!(
                "axis {label} has the wrong role (outcome/condition)"
            )));
        }
    }
    Ok(())
}

/// Hidden-level quasi-distributions obtained by contracting the observable
/// families with the inverse IMM.
#[derive(Debug, Clone)]
pub struct HiddenReconstruction {
    /// `P(l1) = sum_a1 (M^-1)[l1,a1] P(a1)`; normalized, possibly negative.
    pub p_l1: ProbVector,
    /// `P(l2,l1|r1)`, outcome axes `[l2][l1]`, conditioned on `r1`.
    pub p_l2_l1_given_r1: CondTable,
}

/// Contracts the invasive statistics back to the hidden level.
pub fn reconstruct_hidden(s: &TwoTimeStatistics) -> Result<HiddenReconstruction> {
    let n = s.n();
    let inv = s.imm().inverse()?;
    let p_l1 = s.imm().apply_inverse(s.p_a1())?;

    let axes = vec![
        Axis::outcome(AxisLabel::L2, n),
        Axis::outcome(AxisLabel::L1, n),
        Axis::condition(AxisLabel::R1, n),
    ];
    let mut table = CondTable::zeros(axes)?;
    for l2 in 0..n {
        for l1 in 0..n {
            for r1 in 0..n {
                let mut acc = 0.0;
                for a2 in 0..n {
                    let w2 = inv[(l2, a2)];
                    if w2 == 0.0 {
                        continue;
                    }
                    for a1 in 0..n {
                        acc += w2 * inv[(l1, a1)] * s.p_a2_a1_given_r1().get(&[a2, a1, r1]);
                    }
                }
                table.set(&[l2, l1, r1], acc);
            }
        }
    }

    let tol = Tolerances::default().eq;
    let p_l1_report = validate_distribution(&p_l1, ValidationMode::Quasi, tol);
    if !p_l1_report.passed {
        return Err(Error::Inconsistency(format!(
            "reconstructed P(l1) does not normalize (residual {:.3e})",
            p_l1_report.normalization_residual
        )));
    }
    table
        .validate(ValidationMode::Quasi, tol)
        .map_err(|e| Error::Inconsistency(format!("reconstructed P(l2,l1|r1): {e}")))?;

    Ok(HiddenReconstruction { p_l1, p_l2_l1_given_r1: table })
}

/// Overall classification of a statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// All six conditions hold with proper positivity: a classical invasive
    /// model exists.
    Classical,
    /// The equality conditions hold but a reconstruction is negative: only a
    /// quasi-stochastic model exists.
    QuasiClassical,
    /// An equality condition (or a normalization) fails: no model of this
    /// form exists at all.
    Inconsistent,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Classical => "classical",
            Classification::QuasiClassical => "quasi-classical",
            Classification::Inconsistent => "inconsistent",
        })
    }
}

/// Per-condition residuals; equalities are reported in max norm because every
/// condition is a for-all statement.
#[derive(Debug, Clone, Copy)]
pub struct ConditionResiduals {
    /// Normalization residual of `P(l1)`.
    pub cond1_normalization: f64,
    /// Most negative entry of `P(l1)` (0 if none).
    pub cond1_negativity: f64,
    /// Worst normalization residual of `P(l2,l1|r1)` over `r1`.
    pub cond2_normalization: f64,
    /// Most negative entry of `P(l2,l1|r1)` (0 if none).
    pub cond2_negativity: f64,
    /// Max-norm residual of condition 3.
    pub cond3: f64,
    /// Max-norm residual of condition 4.
    pub cond4: f64,
    /// Max-norm residual of condition 5 (causality).
    pub cond5: f64,
    /// Max-norm residual of condition 6 (re-preparation consistency).
    pub cond6: f64,
}

impl ConditionResiduals {
    /// Largest equality/normalization residual (ignores negativity).
    pub fn max_equality_residual(&self) -> f64 {
        self.cond1_normalization
            .max(self.cond2_normalization)
            .max(self.cond3)
            .max(self.cond4)
            .max(self.cond5)
            .max(self.cond6)
    }
}

/// Structured verdict of the six-condition check.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub classification: Classification,
    pub residuals: ConditionResiduals,
    /// Most negative entry across both reconstructions (0 if none).
    pub worst_negative: f64,
    pub notes: Vec<String>,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "classification: {}", self.classification)?;
        let r = &self.residuals;
        writeln!(
            f,
            "  cond 1 (P(l1) proper):        normalization {:.3e}, negativity {:.3e}",
            r.cond1_normalization, r.cond1_negativity
        )?;
        writeln!(
            f,
            "  cond 2 (P(l2,l1|r1) proper):  normalization {:.3e}, negativity {:.3e}",
            r.cond2_normalization, r.cond2_negativity
        )?;
        writeln!(f, "  cond 3 (marginal over a1):    {:.3e}", r.cond3)?;
        writeln!(f, "  cond 4 (M^-1 contraction):    {:.3e}", r.cond4)?;
        writeln!(f, "  cond 5 (causality):           {:.3e}", r.cond5)?;
        writeln!(f, "  cond 6 (re-prep consistency): {:.3e}", r.cond6)?;
        writeln!(f, "  worst negative entry: {:.6}", self.worst_negative)?;
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

/// Evaluates all six conditions with residuals and classifies the statistics.
///
/// Classification precedence: any equality or normalization failure makes the
/// statistics inconsistent; if only positivity of the reconstructions fails,
/// it is quasi-classical; otherwise classical.
pub fn check_conditions(s: &TwoTimeStatistics, tol: f64) -> Result<Verdict> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = s.n();
    let hidden = reconstruct_hidden(s)?;
    let inv = s.imm().inverse()?;

    let cond1 = validate_distribution(&hidden.p_l1, ValidationMode::Proper, tol);
    let cond2_normalization = hidden.p_l2_l1_given_r1.max_normalization_residual();
    let cond2_negativity = hidden.p_l2_l1_given_r1.most_negative_entry();

    // cond 5: sum_l2 P(l2,l1|r1) = P(l1) for every r1.
    let mut cond5 = 0.0f64;
    let summed = hidden.p_l2_l1_given_r1.marginalize(AxisLabel::L2)?;
    for l1 in 0..n {
        for r1 in 0..n {
            cond5 = cond5.max((summed.get(&[l1, r1]) - hidden.p_l1.get(l1)).abs());
        }
    }

    // cond 3: P(a2|r1) = sum_a1 P(a2;a1|r1).
    let mut cond3 = 0.0f64;
    let marg = s.p_a2_a1_given_r1().marginalize(AxisLabel::A1)?;
    for a2 in 0..n {
        for r1 in 0..n {
            cond3 = cond3.max((marg.get(&[a2, r1]) - s.p_a2_given_r1().get(&[a2, r1])).abs());
        }
    }

    // cond 4: P(a2) = sum_{a1,r1} (M^-1)[r1,a1] P(a2;a1|r1).
    let mut cond4 = 0.0f64;
    for a2 in 0..n {
        let mut acc = 0.0;
        for a1 in 0..n {
            for r1 in 0..n {
                acc += inv[(r1, a1)] * s.p_a2_a1_given_r1().get(&[a2, a1, r1]);
            }
        }
        cond4 = cond4.max((acc - s.p_a2().get(a2)).abs());
    }

    // cond 6: P(a2;a1) = P(a2;a1|r1=a1).
    let mut cond6 = 0.0f64;
    for a2 in 0..n {
        for a1 in 0..n {
            cond6 = cond6
                .max((s.p_a2_a1().get(&[a2, a1]) - s.p_a2_a1_given_r1().get(&[a2, a1, a1])).abs());
        }
    }

    let residuals = ConditionResiduals {
        cond1_normalization: cond1.normalization_residual,
        cond1_negativity: cond1.most_negative,
        cond2_normalization,
        cond2_negativity,
        cond3,
        cond4,
        cond5,
        cond6,
    };
    let worst_negative = cond1.most_negative.min(cond2_negativity);

    let equality_ok = residuals.max_equality_residual() <= tol;
    let positivity_ok = cond1.most_negative >= -tol && cond2_negativity >= -tol;

    let mut notes = Vec::new();
    let classification = if !equality_ok {
        let mut failing = Vec::new();
        if residuals.cond1_normalization > tol {
            failing.push("cond 1 normalization");
        }
        if residuals.cond2_normalization > tol {
            failing.push("cond 2 normalization");
        }
        if residuals.cond3 > tol {
            failing.push("cond 3");
        }
        if residuals.cond4 > tol {
            failing.push("cond 4");
        }
        if residuals.cond5 > tol {
            failing.push("cond 5");
        }
        if residuals.cond6 > tol {
            failing.push("cond 6");
        }
        notes.push(format!("failing equalities: {}", failing.join(", ")));
        Classification::Inconsistent
    } else if !positivity_ok {
        notes.push(format!(
            "equalities hold; hidden-level reconstruction is negative ({worst_negative:.6})"
        ));
        Classification::QuasiClassical
    } else {
        Classification::Classical
    };

    Ok(Verdict { classification, residuals, worst_negative, notes })
}

/// Assembles an IMM from per-prepared-symbol outcome frequencies: preparing
/// the hidden symbol `l` and registering invasive outcomes estimates column
/// `l` of the matrix.
pub fn imm_from_preparation_data(counts: &[Vec<f64>], tol: &Tolerances) -> Result<ImmMatrix> {
    let n = counts.len();
    if n < 2 {
        return Err(Error::MalformedInput(
            "need a frequency vector per prepared symbol (at least 2)".into(),
        ));
    }
    for (l, column) in counts.iter().enumerate() {
        if column.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "frequency vector for symbol {l} has length {}, expected {n}",
                column.len()
            )));
        }
        let sum: f64 = column.iter().sum();
        if (sum - 1.0).abs() > tol.eq {
            return Err(Error::MalformedInput(format!(
                "frequencies for prepared symbol {l} sum to {sum}, expected 1"
            )));
        }
    }
    // counts[l][a] is the a-outcome frequency for preparation l: column l.
    let rows: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|l| counts[l][a]).collect()).collect();
    ImmMatrix::from_rows(&rows, tol)?.inverted(tol.imm_condition)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::tensor::AxisKind;

    /// Statistics of a two-symbol Markov chain probed non-invasively
    /// (identity IMM): initial distribution `pi`, transition matrix `t`.
    pub(crate) fn markov_chain_statistics(pi: [f64; 2], t: [[f64; 2]; 2]) -> TwoTimeStatistics {
        let n = 2;
        let p_a1 = ProbVector::new(pi.to_vec()).unwrap();
        let p_a2 = ProbVector::new(
            (0..n).map(|a2| (0..n).map(|a1| t[a2][a1] * pi[a1]).sum()).collect(),
        )
        .unwrap();
        let mut p_a2_a1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::A2, n),
            Axis::outcome(AxisLabel::A1, n),
        ])
        .unwrap();
        let mut p_a2_r1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::A2, n),
            Axis::condition(AxisLabel::R1, n),
        ])
        .unwrap();
        let mut p_full = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::A2, n),
            Axis::outcome(AxisLabel::A1, n),
            Axis::condition(AxisLabel::R1, n),
        ])
        .unwrap();
        for a2 in 0..n {
            for a1 in 0..n {
                p_a2_a1.set(&[a2, a1], t[a2][a1] * pi[a1]);
            }
            for r1 in 0..n {
                p_a2_r1.set(&[a2, r1], t[a2][r1]);
                for a1 in 0..n {
                    p_full.set(&[a2, a1, r1], pi[a1] * t[a2][r1]);
                }
            }
        }
        TwoTimeStatistics::new(
            p_a1,
            p_a2,
            p_a2_a1,
            p_a2_r1,
            p_full,
            ImmMatrix::identity(n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_imm_reconstruction_is_the_statistics_itself() {
        let s = markov_chain_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let hidden = reconstruct_hidden(&s).unwrap();
        assert_eq!(hidden.p_l1.as_slice(), s.p_a1().as_slice());
        for l2 in 0..2 {
            for l1 in 0..2 {
                for r1 in 0..2 {
                    assert!(
                        (hidden.p_l2_l1_given_r1.get(&[l2, l1, r1])
                            - s.p_a2_a1_given_r1().get(&[l2, l1, r1]))
                        .abs()
                            < 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn markov_chain_is_classical() {
        let s = markov_chain_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let verdict = check_conditions(&s, 1e-9).unwrap();
        assert_eq!(verdict.classification, Classification::Classical);
        assert!(verdict.residuals.max_equality_residual() < 1e-12);
    }

    #[test]
    fn violating_reprep_consistency_is_inconsistent() {
        // Tamper with the no-re-preparation family so that condition 6 fails.
        let s = markov_chain_statistics([0.5, 0.5], [[0.7, 0.4], [0.3, 0.6]]);
        let mut bad = s.p_a2_a1().clone();
        let delta = 0.05;
        bad.set(&[0, 0], bad.get(&[0, 0]) + delta);
        bad.set(&[1, 0], bad.get(&[1, 0]) - delta);
        let s2 = TwoTimeStatistics::new(
            s.p_a1().clone(),
            s.p_a2().clone(),
            bad,
            s.p_a2_given_r1().clone(),
            s.p_a2_a1_given_r1().clone(),
            ImmMatrix::identity(2).unwrap(),
        )
        .unwrap();
        let verdict = check_conditions(&s2, 1e-9).unwrap();
        assert_eq!(verdict.classification, Classification::Inconsistent);
        assert!((verdict.residuals.cond6 - delta).abs() < 1e-12);
        assert!(verdict.notes[0].contains("cond 6"));
    }

    #[test]
    fn kcc_violation_with_identity_imm_fails_condition_4() {
        // With an identity IMM condition 4 degenerates to the plain
        // Kolmogorov consistency sum over the diagonal r1 = a1.
        let s = markov_chain_statistics([0.4, 0.6], [[0.8, 0.3], [0.2, 0.7]]);
        let p_a2_bad = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let s2 = TwoTimeStatistics::new(
            s.p_a1().clone(),
            p_a2_bad,
            s.p_a2_a1().clone(),
            s.p_a2_given_r1().clone(),
            s.p_a2_a1_given_r1().clone(),
            ImmMatrix::identity(2).unwrap(),
        )
        .unwrap();
        let verdict = check_conditions(&s2, 1e-9).unwrap();
        assert_eq!(verdict.classification, Classification::Inconsistent);
        // residual equals |sum_a1 P(a2, a1) - P(a2)| for the tampered vector
        let expected: f64 = (0..2)
            .map(|a2| {
                let sum: f64 = (0..2).map(|a1| s.p_a2_a1().get(&[a2, a1])).sum();
                (sum - s2.p_a2().get(a2)).abs()
            })
            .fold(0.0, f64::max);
        assert!((verdict.residuals.cond4 - expected).abs() < 1e-12);
    }

    #[test]
    fn verdict_stable_under_tolerance_doubling() {
        let s = markov_chain_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let a = check_conditions(&s, 1e-9).unwrap().classification;
        let b = check_conditions(&s, 2e-9).unwrap().classification;
        assert_eq!(a, b);
    }

    #[test]
    fn preparation_data_deterministic_outcomes_give_identity() {
        let counts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let imm = imm_from_preparation_data(&counts, &Tolerances::default()).unwrap();
        assert_eq!(imm.entry(0, 0), 1.0);
        assert_eq!(imm.entry(1, 0), 0.0);
        assert!(imm.is_inverted());
    }

    #[test]
    fn preparation_data_rejects_unnormalized_columns() {
        let counts = vec![vec![0.9, 0.0], vec![0.0, 1.0]];
        assert!(imm_from_preparation_data(&counts, &Tolerances::default()).is_err());
    }

    #[test]
    fn statistics_constructor_checks_roles() {
        let s = markov_chain_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        // wrong axis role for p_a2_a1 (a1 as condition instead of outcome)
        let bad = CondTable::new(
            vec![
                Axis { label: AxisLabel::A2, kind: AxisKind::Outcome, len: 2 },
                Axis { label: AxisLabel::A1, kind: AxisKind::Condition, len: 2 },
            ],
            vec![0.5, 0.5, 0.5, 0.5],
        )
        .unwrap();
        assert!(TwoTimeStatistics::new(
            s.p_a1().clone(),
            s.p_a2().clone(),
            bad,
            s.p_a2_given_r1().clone(),
            s.p_a2_a1_given_r1().clone(),
            ImmMatrix::identity(2).unwrap(),
        )
        .is_err());
    }
}
