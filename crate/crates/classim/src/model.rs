//! Open-system stochastic models: a hidden system symbol coupled to an
//! environment symbol, evolved by two stochastic maps and probed through the
//! IMM.
//!
//! This module implements both constructive directions of the equivalence:
//! from a statistics passing the consistency check to the canonical model
//! ([`construct_model`]), and from any model back to its statistics
//! ([`evaluate_model`]). [`build_contextual_joint`] assembles the underlying
//! joint distribution over hidden and observed symbols whose marginals
//! reproduce every observable family, and [`sample_trajectories`] runs the
//! model as a Monte Carlo process.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classicality::{check_conditions, reconstruct_hidden, Classification, TwoTimeStatistics};
use crate::error::{Error, Result};
use crate::tensor::{
    Axis, AxisLabel, CondTable, ImmMatrix, ProbVector, Tolerances, ValidationMode,
};

/// Denominators at or below this trigger the unreachable-state convention
/// (the corresponding evolution column is set to uniform).
pub const DENOM_FLOOR: f64 = 1e-12;
/// A numerator above this sitting on a vanishing denominator is a genuine
/// contradiction, not an unreachable state.
const NUMERATOR_GUARD: f64 = 1e-9;

/// Stochastic model of a system (alphabet `n`) and an environment (alphabet
/// `n_env`): initial hidden distribution `p0` over `l0`, first evolution
/// `t1[(e1,l1); l0]`, second evolution `t2[l2; (e1,s)]`, and the IMM relating
/// hidden symbols to invasive outcomes.
///
/// The symbol `s` fed into the second evolution depends on the context: the
/// re-preparation choice `r1`, the measured outcome `a1`, or the untouched
/// hidden symbol `l1`.
#[derive(Debug, Clone)]
pub struct OpenSystemModel {
    n: usize,
    n_env: usize,
    n0: usize,
    p0: ProbVector,
    /// Outcome axes `[e1][l1]`, conditioned on `l0`; columns over the joint
    /// `(e1, l1)` index sum to one.
    t1: CondTable,
    /// Outcome axis `[l2]`, conditioned on `(e1, s)`.
    t2: CondTable,
    imm: ImmMatrix,
    quasi: bool,
}

impl OpenSystemModel {
    /// Validates shapes and stochasticity. In quasi mode only normalization
    /// is enforced; entries may be negative.
    pub fn new(
        p0: ProbVector,
        t1: CondTable,
        t2: CondTable,
        imm: ImmMatrix,
        quasi: bool,
    ) -> Result<Self> {
        let n = imm.n();
        let n0 = p0.len();
        let expect = |t: &CondTable, spec: &[(AxisLabel, bool)]| -> Result<Vec<usize>> {
            if t.axes().len() != spec.len() {
                return Err(Error::ShapeMismatch(format!(
                    "evolution table has {} axes, expected {}",
                    t.axes().len(),
                    spec.len()
                )));
            }
            let mut lens = Vec::new();
            for (ax, &(label, outcome)) in t.axes().iter().zip(spec) {
                if ax.label != label {
                    return Err(Error::ShapeMismatch(format!(
                        "axis {} found where {label} was expected",
                        ax.label
                    )));
                }
                let is_outcome = ax.kind == crate::tensor::AxisKind::Outcome;
                if is_outcome != outcome {
                    return Err(Error::ShapeMismatch(format!(
                        "axis {label} has the wrong role"
                    )));
                }
                lens.push(ax.len);
            }
            Ok(lens)
        };
        let t1_lens = expect(
            &t1,
            &[(AxisLabel::E1, true), (AxisLabel::L1, true), (AxisLabel::L0, false)],
        )?;
        let t2_lens = expect(
            &t2,
            &[(AxisLabel::L2, true), (AxisLabel::E1, false), (AxisLabel::S, false)],
        )?;
        let n_env = t1_lens[0];
        if t1_lens[1] != n || t1_lens[2] != n0 {
            return Err(Error::ShapeMismatch(format!(
                "t1 has shape [{}][{}][{}], expected [n_env][{n}][{n0}]",
                t1_lens[0], t1_lens[1], t1_lens[2]
            )));
        }
        if t2_lens != [n, n_env, n] {
            return Err(Error::ShapeMismatch(format!(
                "t2 has shape [{}][{}][{}], expected [{n}][{n_env}][{n}]",
                t2_lens[0], t2_lens[1], t2_lens[2]
            )));
        }
        let mode = if quasi { ValidationMode::Quasi } else { ValidationMode::Proper };
        let tol = Tolerances::default();
        let p0_report = p0.validate(mode, tol.eq);
        if !p0_report.passed {
            return Err(Error::MalformedInput(format!(
                "p0 is not a valid initial distribution (residual {:.3e}, min {:.3e})",
                p0_report.normalization_residual, p0_report.most_negative
            )));
        }
        t1.validate(mode, tol.eq)
            .map_err(|e| Error::MalformedInput(format!("t1: {e}")))?;
        t2.validate(mode, tol.eq)
            .map_err(|e| Error::MalformedInput(format!("t2: {e}")))?;
        let imm = if imm.is_inverted() { imm } else { imm.inverted(tol.imm_condition)? };
        Ok(OpenSystemModel { n, n_env, n0, p0, t1, t2, imm, quasi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn p0(&self) -> &ProbVector {
        &self.p0
    }

    pub fn t1(&self) -> &CondTable {
        &self.t1
    }

    pub fn t2(&self) -> &CondTable {
        &self.t2
    }

    pub fn imm(&self) -> &ImmMatrix {
        &self.imm
    }

    pub fn is_quasi(&self) -> bool {
        self.quasi
    }

    /// True if every ingredient is nonnegative, i.e. trajectories can
    /// actually be sampled.
    pub fn is_proper(&self) -> bool {
        let tol = Tolerances::default().pos;
        self.p0.as_slice().iter().all(|&x| x >= -tol)
            && self.t1.most_negative_entry() >= -tol
            && self.t2.most_negative_entry() >= -tol
    }

    /// Joint distribution `w1[e1][l1]` of environment and hidden symbol just
    /// before the first measurement.
    fn joint_at_t1(&self) -> Vec<Vec<f64>> {
        let mut w1 = vec![vec![0.0; self.n]; self.n_env];
        for e1 in 0..self.n_env {
            for l1 in 0..self.n {
                let mut acc = 0.0;
                for l0 in 0..self.n0 {
                    acc += self.t1.get(&[e1, l1, l0]) * self.p0.get(l0);
                }
                w1[e1][l1] = acc;
            }
        }
        w1
    }
}

/// Builds the canonical model witnessing a statistics that passed the
/// consistency check: the hidden symbol is drawn from `P(a1)`, copied into
/// the environment, and the second evolution is the conditional
/// `P(l2, l1=e1 | r1) / P(l1=e1)`.
///
/// Vanishing `P(l1=e1)` marks an unreachable hidden state; its evolution
/// column is set to uniform. A non-vanishing numerator over a vanishing
/// denominator is reported as an inconsistency instead of being patched.
pub fn construct_model(s: &TwoTimeStatistics, tol: f64, quasi: bool) -> Result<OpenSystemModel> {
    let verdict = check_conditions(s, tol)?;
    match verdict.classification {
        Classification::Classical => {}
        Classification::QuasiClassical if quasi => {}
        Classification::QuasiClassical => {
            return Err(Error::NotSimulable(format!(
                "statistics is only quasi-classical (worst negative entry {:.6}); \
                 pass quasi mode to build a quasi-stochastic model",
                verdict.worst_negative
            )));
        }
        Classification::Inconsistent => {
            return Err(Error::NotSimulable(
                verdict
                    .notes
                    .first()
                    .cloned()
                    .unwrap_or_else(|| "statistics is inconsistent".into()),
            ));
        }
    }

    let n = s.n();
    let hidden = reconstruct_hidden(s)?;

    let p0 = s.p_a1().clone();

    // t1 copies the initial symbol into both the environment and the system.
    let mut t1 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::E1, n),
        Axis::outcome(AxisLabel::L1, n),
        Axis::condition(AxisLabel::L0, n),
    ])?;
    for l0 in 0..n {
        t1.set(&[l0, l0, l0], 1.0);
    }

    let mut t2 = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::L2, n),
        Axis::condition(AxisLabel::E1, n),
        Axis::condition(AxisLabel::S, n),
    ])?;
    for e1 in 0..n {
        let denom = hidden.p_l1.get(e1);
        for r1 in 0..n {
            if denom.abs() <= DENOM_FLOOR {
                for l2 in 0..n {
                    let numer = hidden.p_l2_l1_given_r1.get(&[l2, e1, r1]);
                    if numer.abs() > NUMERATOR_GUARD {
                        return Err(Error::Inconsistency(format!(
                            "hidden state l1={e1} has probability {denom:.3e} but \
                             P(l2={l2}, l1={e1} | r1={r1}) = {numer:.3e}"
                        )));
                    }
                    t2.set(&[l2, e1, r1], 1.0 / n as f64);
                }
            } else {
                for l2 in 0..n {
                    t2.set(&[l2, e1, r1], hidden.p_l2_l1_given_r1.get(&[l2, e1, r1]) / denom);
                }
            }
        }
    }

    OpenSystemModel::new(p0, t1, t2, s.imm().clone(), quasi)
}

/// Evaluates a model into the five observable families by direct tensor
/// contraction. The context rule is encoded by which symbol feeds the second
/// evolution: `r1` when re-prepared, `a1` when measured but not re-prepared,
/// `l1` when untouched.
pub fn evaluate_model(m: &OpenSystemModel) -> Result<TwoTimeStatistics> {
    let n = m.n();
    let w1 = m.joint_at_t1();
    let imm = m.imm();

    let mut p_a1 = vec![0.0; n];
    for a1 in 0..n {
        for e1 in 0..m.n_env {
            for l1 in 0..n {
                p_a1[a1] += imm.entry(a1, l1) * w1[e1][l1];
            }
        }
    }

    // chained second step: q[l2 | s-slot fed with symbol s] given weights
    let mut p_a2 = vec![0.0; n];
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

    for e1 in 0..m.n_env {
        for l1 in 0..n {
            let w = w1[e1][l1];
            if w == 0.0 {
                continue;
            }
            for l2 in 0..n {
                // untouched: the hidden symbol itself drives the evolution
                let t_bare = m.t2.get(&[l2, e1, l1]);
                for a2 in 0..n {
                    p_a2[a2] += imm.entry(a2, l2) * t_bare * w;
                }
                for s in 0..n {
                    let t_s = m.t2.get(&[l2, e1, s]);
                    if t_s == 0.0 {
                        continue;
                    }
                    for a2 in 0..n {
                        let base = imm.entry(a2, l2) * t_s * w;
                        if base == 0.0 {
                            continue;
                        }
                        // measured, not re-prepared: s plays the role of a1
                        p_a2_a1.add(&[a2, s], base * imm.entry(s, l1));
                        // re-prepared without measurement: s is r1
                        p_a2_r1.add(&[a2, s], base);
                        // measured and re-prepared: s is r1, any a1
                        for a1 in 0..n {
                            p_full.add(&[a2, a1, s], base * imm.entry(a1, l1));
                        }
                    }
                }
            }
        }
    }

    TwoTimeStatistics::new(
        ProbVector::new(p_a1)?,
        ProbVector::new(p_a2)?,
        p_a2_a1,
        p_a2_r1,
        p_full,
        imm.clone(),
    )
}

/// The joint distribution over `(a2, l2, a1, l1)` conditioned on `r1` that
/// underlies a model: every observable family is one of its marginals.
#[derive(Debug, Clone)]
pub struct ContextualJoint {
    n: usize,
    /// Outcome axes `[a2][l2][a1][l1]`, conditioned on `r1`.
    pub joint: CondTable,
}

impl ContextualJoint {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Marginal over the hidden symbols: `P(a2; a1 | r1)`.
    pub fn marginal_a2_a1_r1(&self) -> Result<CondTable> {
        self.joint.marginalize(AxisLabel::L2)?.marginalize(AxisLabel::L1)
    }

    /// Marginal over hidden symbols and `a1`: `P(a2 | r1)`.
    pub fn marginal_a2_r1(&self) -> Result<CondTable> {
        self.marginal_a2_a1_r1()?.marginalize(AxisLabel::A1)
    }

    /// Diagonal `r1 = a1` slice of the `(a2, a1)` marginal: `P(a2; a1)`.
    pub fn diagonal_a2_a1(&self) -> Result<CondTable> {
        let m = self.marginal_a2_a1_r1()?;
        let mut out = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::A2, self.n),
            Axis::outcome(AxisLabel::A1, self.n),
        ])?;
        for a2 in 0..self.n {
            for a1 in 0..self.n {
                out.set(&[a2, a1], m.get(&[a2, a1, a1]));
            }
        }
        Ok(out)
    }

    /// Contraction with the inverse IMM over `(a1, r1)`: `P(a2)`.
    pub fn marginal_a2(&self, imm: &ImmMatrix) -> Result<ProbVector> {
        let inv = imm.inverse()?;
        let m = self.marginal_a2_a1_r1()?;
        let mut out = vec![0.0; self.n];
        for a2 in 0..self.n {
            for a1 in 0..self.n {
                for r1 in 0..self.n {
                    out[a2] += inv[(r1, a1)] * m.get(&[a2, a1, r1]);
                }
            }
        }
        ProbVector::new(out)
    }

    /// Marginal over everything at the second time: `P(a1)`, independent of
    /// the re-preparation (causality).
    pub fn marginal_a1(&self, r1: usize) -> Result<ProbVector> {
        let m = self
            .joint
            .marginalize(AxisLabel::A2)?
            .marginalize(AxisLabel::L2)?
            .marginalize(AxisLabel::L1)?;
        ProbVector::new((0..self.n).map(|a1| m.get(&[a1, r1])).collect())
    }
}

/// Assembles the contextual joint of a model.
pub fn build_contextual_joint(m: &OpenSystemModel) -> Result<ContextualJoint> {
    let n = m.n();
    let w1 = m.joint_at_t1();
    let imm = m.imm();
    let mut joint = CondTable::zeros(vec![
        Axis::outcome(AxisLabel::A2, n),
        Axis::outcome(AxisLabel::L2, n),
        Axis::outcome(AxisLabel::A1, n),
        Axis::outcome(AxisLabel::L1, n),
        Axis::condition(AxisLabel::R1, n),
    ])?;
    for e1 in 0..m.n_env {
        for l1 in 0..n {
            let w = w1[e1][l1];
            if w == 0.0 {
                continue;
            }
            for r1 in 0..n {
                for l2 in 0..n {
                    let t = m.t2.get(&[l2, e1, r1]) * w;
                    if t == 0.0 {
                        continue;
                    }
                    for a2 in 0..n {
                        let base = imm.entry(a2, l2) * t;
                        if base == 0.0 {
                            continue;
                        }
                        for a1 in 0..n {
                            joint.add(&[a2, l2, a1, l1, r1], base * imm.entry(a1, l1));
                        }
                    }
                }
            }
        }
    }
    Ok(ContextualJoint { n, joint })
}

/// Which interventions are performed at the first time when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingContext {
    /// No measurement, no re-preparation: estimates `P(a2)`.
    Bare,
    /// Invasive measurement only: estimates `P(a1)` and the joint `P(a2; a1)`.
    Measure,
    /// Measurement followed by re-preparation in the given symbol: estimates
    /// `P(a2; a1 | r1)` for that `r1`.
    MeasureReprepare(usize),
}

/// Empirical frequencies from a trajectory run, with per-cell standard errors
/// and the comparison against the analytic model probabilities.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub context: SamplingContext,
    pub shots: u64,
    pub seed: u64,
    /// Flat counts; shape is `[a2]` for the bare context and `[a2][a1]`
    /// (row-major) otherwise.
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Binomial standard error per cell, computed from the analytic value.
    pub std_errors: Vec<f64>,
    /// Analytic probabilities from evaluating the model.
    pub analytic: Vec<f64>,
    /// Largest `|frequency - analytic| / stderr` over cells with nonzero
    /// standard error (cells with zero analytic variance must match exactly).
    pub max_z_score: f64,
    pub n: usize,
}

impl std::fmt::Display for SampleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "context {:?}, {} shots, seed {}",
            self.context, self.shots, self.seed
        )?;
        let is_joint = self.counts.len() == self.n * self.n;
        for (i, &c) in self.counts.iter().enumerate() {
            let label = if is_joint {
                format!("a2={} a1={}", i / self.n, i % self.n)
            } else {
                format!("a2={i}")
            };
            writeln!(
                f,
                "  {label}: freq {:.6} (count {c}), analytic {:.6}, stderr {:.2e}",
                self.frequencies[i], self.analytic[i], self.std_errors[i]
            )?;
        }
        writeln!(f, "  max |z| = {:.3}", self.max_z_score)
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>, len: usize) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    len - 1
}

/// Runs the model as a seeded Monte Carlo process and tabulates outcome
/// frequencies for the requested context.
pub fn sample_trajectories(
    m: &OpenSystemModel,
    context: SamplingContext,
    shots: u64,
    seed: u64,
) -> Result<SampleReport> {
    if shots == 0 {
        return Err(Error::MalformedInput("need at least one shot".into()));
    }
    if !m.is_proper() {
        return Err(Error::Unsamplable(
            "model has negative weights; frequencies cannot realise a quasi-stochastic model"
                .into(),
        ));
    }
    let n = m.n();
    if let SamplingContext::MeasureReprepare(r1) = context {
        if r1 >= n {
            return Err(Error::MalformedInput(format!(
                "re-preparation symbol {r1} outside alphabet 0..{n}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint_cells = match context {
        SamplingContext::Bare => n,
        _ => n * n,
    };
    let mut counts = vec![0u64; joint_cells];

    for _ in 0..shots {
        let l0 = draw(&mut rng, m.p0.as_slice().iter().cloned(), m.n0);
        let joint = draw(
            &mut rng,
            (0..m.n_env * n).map(|i| m.t1.get(&[i / n, i % n, l0])),
            m.n_env * n,
        );
        let (e1, l1) = (joint / n, joint % n);
        match context {
            SamplingContext::Bare => {
                let l2 = draw(&mut rng, (0..n).map(|l2| m.t2.get(&[l2, e1, l1])), n);
                let a2 = draw(&mut rng, (0..n).map(|a2| m.imm.entry(a2, l2)), n);
                counts[a2] += 1;
            }
            SamplingContext::Measure => {
                let a1 = draw(&mut rng, (0..n).map(|a1| m.imm.entry(a1, l1)), n);
                let l2 = draw(&mut rng, (0..n).map(|l2| m.t2.get(&[l2, e1, a1])), n);
                let a2 = draw(&mut rng, (0..n).map(|a2| m.imm.entry(a2, l2)), n);
                counts[a2 * n + a1] += 1;
            }
            SamplingContext::MeasureReprepare(r1) => {
                let a1 = draw(&mut rng, (0..n).map(|a1| m.imm.entry(a1, l1)), n);
                let l2 = draw(&mut rng, (0..n).map(|l2| m.t2.get(&[l2, e1, r1])), n);
                let a2 = draw(&mut rng, (0..n).map(|a2| m.imm.entry(a2, l2)), n);
                counts[a2 * n + a1] += 1;
            }
        }
    }

    let stats = evaluate_model(m)?;
    let analytic: Vec<f64> = match context {
        SamplingContext::Bare => stats.p_a2().as_slice().to_vec(),
        SamplingContext::Measure => {
            let mut v = vec![0.0; n * n];
            for a2 in 0..n {
                for a1 in 0..n {
                    v[a2 * n + a1] = stats.p_a2_a1().get(&[a2, a1]);
                }
            }
            v
        }
        SamplingContext::MeasureReprepare(r1) => {
            let mut v = vec![0.0; n * n];
            for a2 in 0..n {
                for a1 in 0..n {
                    v[a2 * n + a1] = stats.p_a2_a1_given_r1().get(&[a2, a1, r1]);
                }
            }
            v
        }
    };

    let shots_f = shots as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / shots_f).collect();
    let std_errors: Vec<f64> = analytic
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / shots_f).sqrt())
        .collect();
    let mut max_z: f64 = 0.0;
    for i in 0..frequencies.len() {
        let diff = (frequencies[i] - analytic[i]).abs();
        if std_errors[i] > 0.0 {
            max_z = max_z.max(diff / std_errors[i]);
        } else if diff > 0.0 {
            max_z = f64::INFINITY;
        }
    }

    Ok(SampleReport {
        context,
        shots,
        seed,
        counts,
        frequencies,
        std_errors,
        analytic,
        max_z_score: max_z,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn markov_statistics(pi: [f64; 2], t: [[f64; 2]; 2]) -> TwoTimeStatistics {
        crate::classicality::tests::markov_chain_statistics(pi, t)
    }

    #[test]
    fn markov_chain_model_recovers_the_chain() {
        let t = [[0.9, 0.2], [0.1, 0.8]];
        let s = markov_statistics([0.3, 0.7], t);
        let m = construct_model(&s, 1e-9, false).unwrap();
        // the second evolution equals the chain matrix, independent of e1
        for l2 in 0..2 {
            for e1 in 0..2 {
                for r1 in 0..2 {
                    assert!(
                        (m.t2().get(&[l2, e1, r1]) - t[l2][r1]).abs() < 1e-12,
                        "t2[{l2}][{e1}][{r1}]"
                    );
                }
            }
        }
        assert_eq!(m.p0().as_slice(), s.p_a1().as_slice());
    }

    #[test]
    fn uniform_statistics_give_uniform_evolution() {
        let s = markov_statistics([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        for l2 in 0..2 {
            for e1 in 0..2 {
                for r1 in 0..2 {
                    assert!((m.t2().get(&[l2, e1, r1]) - 0.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_reproduces_statistics() {
        let s = markov_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        let s2 = evaluate_model(&m).unwrap();
        assert!(s.max_abs_diff(&s2) < 1e-12);
    }

    #[test]
    fn unreachable_hidden_state_gets_uniform_column() {
        // pi has a zero entry: hidden state 1 is never populated, so the
        // canonical construction falls back to the uniform column for it.
        let s = markov_statistics([1.0, 0.0], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        for l2 in 0..2 {
            for r1 in 0..2 {
                assert!((m.t2().get(&[l2, 1, r1]) - 0.5).abs() < 1e-12);
            }
        }
        let s2 = evaluate_model(&m).unwrap();
        assert!(s.max_abs_diff(&s2) < 1e-12);
    }

    #[test]
    fn memoryless_evolution_factorizes() {
        // t2 independent of its (e1, s) slot implies P(a2; a1) = P(a2) P(a1).
        let n = 2;
        let p0 = ProbVector::new(vec![0.4, 0.6]).unwrap();
        let mut t1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::E1, n),
            Axis::outcome(AxisLabel::L1, n),
            Axis::condition(AxisLabel::L0, n),
        ])
        .unwrap();
        // correlated first step (copy), memoryless second step
        for l0 in 0..n {
            t1.set(&[l0, l0, l0], 1.0);
        }
        let mut t2 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::L2, n),
            Axis::condition(AxisLabel::E1, n),
            Axis::condition(AxisLabel::S, n),
        ])
        .unwrap();
        for e1 in 0..n {
            for s in 0..n {
                t2.set(&[0, e1, s], 0.7);
                t2.set(&[1, e1, s], 0.3);
            }
        }
        let imm = ImmMatrix::from_rows(
            &[vec![0.8, 0.3], vec![0.2, 0.7]],
            &Tolerances::default(),
        )
        .unwrap();
        let m = OpenSystemModel::new(p0, t1, t2, imm, false).unwrap();
        let s = evaluate_model(&m).unwrap();
        for a2 in 0..n {
            for a1 in 0..n {
                let product = s.p_a2().get(a2) * s.p_a1().get(a1);
                assert!((s.p_a2_a1().get(&[a2, a1]) - product).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_permutation_model_gives_point_masses() {
        // identity IMM, t1 copies, t2 swaps the symbol regardless of e1
        let n = 2;
        let p0 = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let mut t1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::E1, n),
            Axis::outcome(AxisLabel::L1, n),
            Axis::condition(AxisLabel::L0, n),
        ])
        .unwrap();
        for l0 in 0..n {
            t1.set(&[l0, l0, l0], 1.0);
        }
        let mut t2 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::L2, n),
            Axis::condition(AxisLabel::E1, n),
            Axis::condition(AxisLabel::S, n),
        ])
        .unwrap();
        for e1 in 0..n {
            for s in 0..n {
                t2.set(&[1 - s, e1, s], 1.0);
            }
        }
        let m = OpenSystemModel::new(p0, t1, t2, ImmMatrix::identity(n).unwrap(), false).unwrap();
        let s = evaluate_model(&m).unwrap();
        assert_eq!(s.p_a1().as_slice(), &[1.0, 0.0]);
        assert_eq!(s.p_a2().as_slice(), &[0.0, 1.0]);
        assert_eq!(s.p_a2_a1().get(&[1, 0]), 1.0);
        // re-preparing in 1 sends the second outcome to 0
        assert_eq!(s.p_a2_given_r1().get(&[0, 1]), 1.0);
    }

    #[test]
    fn contextual_joint_marginals_match_families() {
        let s = markov_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        let joint = build_contextual_joint(&m).unwrap();
        let stats = evaluate_model(&m).unwrap();

        let m3 = joint.marginal_a2_a1_r1().unwrap();
        assert!(m3.max_abs_diff(stats.p_a2_a1_given_r1()) < 1e-12);
        let m2 = joint.marginal_a2_r1().unwrap();
        assert!(m2.max_abs_diff(stats.p_a2_given_r1()) < 1e-12);
        let diag = joint.diagonal_a2_a1().unwrap();
        assert!(diag.max_abs_diff(stats.p_a2_a1()) < 1e-12);
        let p_a2 = joint.marginal_a2(m.imm()).unwrap();
        assert!(p_a2.max_abs_diff(stats.p_a2()) < 1e-12);
        for r1 in 0..2 {
            let p_a1 = joint.marginal_a1(r1).unwrap();
            assert!(p_a1.max_abs_diff(stats.p_a1()) < 1e-12);
        }
    }

    #[test]
    fn identity_imm_joint_is_supported_on_the_diagonal() {
        let s = markov_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        let joint = build_contextual_joint(&m).unwrap();
        for a2 in 0..2 {
            for l2 in 0..2 {
                for a1 in 0..2 {
                    for l1 in 0..2 {
                        for r1 in 0..2 {
                            let v = joint.joint.get(&[a2, l2, a1, l1, r1]);
                            if a2 != l2 || a1 != l1 {
                                assert_eq!(v, 0.0);
                            } else {
                                assert!(v >= 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_model_samples_exactly() {
        let n = 2;
        let p0 = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let mut t1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::E1, n),
            Axis::outcome(AxisLabel::L1, n),
            Axis::condition(AxisLabel::L0, n),
        ])
        .unwrap();
        for l0 in 0..n {
            t1.set(&[l0, l0, l0], 1.0);
        }
        let mut t2 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::L2, n),
            Axis::condition(AxisLabel::E1, n),
            Axis::condition(AxisLabel::S, n),
        ])
        .unwrap();
        for e1 in 0..n {
            for s in 0..n {
                t2.set(&[s, e1, s], 1.0);
            }
        }
        let m = OpenSystemModel::new(p0, t1, t2, ImmMatrix::identity(n).unwrap(), false).unwrap();
        let report = sample_trajectories(&m, SamplingContext::Measure, 1000, 7).unwrap();
        assert_eq!(report.counts[0], 1000); // (a2=0, a1=0) with certainty
        assert_eq!(report.max_z_score, 0.0);
    }

    #[test]
    fn sampling_is_reproducible_under_seed() {
        let s = markov_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        let a = sample_trajectories(&m, SamplingContext::MeasureReprepare(1), 5000, 42).unwrap();
        let b = sample_trajectories(&m, SamplingContext::MeasureReprepare(1), 5000, 42).unwrap();
        assert_eq!(a.counts, b.counts);
        let c = sample_trajectories(&m, SamplingContext::MeasureReprepare(1), 5000, 43).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn sampled_frequencies_stay_within_clt_band() {
        let s = markov_statistics([0.3, 0.7], [[0.9, 0.2], [0.1, 0.8]]);
        let m = construct_model(&s, 1e-9, false).unwrap();
        for context in [
            SamplingContext::Bare,
            SamplingContext::Measure,
            SamplingContext::MeasureReprepare(0),
        ] {
            let report = sample_trajectories(&m, context, 100_000, 12345).unwrap();
            assert!(
                report.max_z_score < 4.0,
                "{context:?}: max z {}",
                report.max_z_score
            );
        }
    }

    #[test]
    fn quasi_model_refuses_to_sample() {
        let n = 2;
        let p0 = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let mut t1 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::E1, n),
            Axis::outcome(AxisLabel::L1, n),
            Axis::condition(AxisLabel::L0, n),
        ])
        .unwrap();
        for l0 in 0..n {
            t1.set(&[l0, l0, l0], 1.0);
        }
        let mut t2 = CondTable::zeros(vec![
            Axis::outcome(AxisLabel::L2, n),
            Axis::condition(AxisLabel::E1, n),
            Axis::condition(AxisLabel::S, n),
        ])
        .unwrap();
        for e1 in 0..n {
            for s in 0..n {
                t2.set(&[0, e1, s], 1.2);
                t2.set(&[1, e1, s], -0.2);
            }
        }
        let m = OpenSystemModel::new(p0, t1, t2, ImmMatrix::identity(n).unwrap(), true).unwrap();
        assert!(matches!(
            sample_trajectories(&m, SamplingContext::Bare, 10, 1),
            Err(Error::Unsamplable(_))
        ));
    }
}
