//! Dense real tensors for probability vectors, conditional tables and
//! (quasi-)stochastic matrices.
//!
//! Alphabets are tiny (a handful of symbols), so everything is stored dense.
//! Conditional tables carry axis labels as metadata; the labels are what keep
//! index order honest when tables are contracted against each other.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default numerical tolerances used across the crate.
///
/// Double-precision solves on alphabets of at most a few dozen symbols stay
/// orders of magnitude below these.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Tolerance for equality residuals (normalization, condition checks).
    pub eq: f64,
    /// Slack allowed below zero before an entry counts as negative.
    pub pos: f64,
    /// Largest acceptable condition estimate when inverting an IMM.
    pub imm_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq: 1e-9,
            pos: 1e-12,
            imm_condition: 1e8,
        }
    }
}

/// Whether a distribution must be nonnegative or merely normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Proper probability distribution: normalized and nonnegative.
    Proper,
    /// Quasi-distribution: normalized, but entries may be negative.
    Quasi,
}

/// Outcome of validating a single distribution.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub tol: f64,
    /// `|sum - 1|`.
    pub normalization_residual: f64,
    /// Most negative entry, or 0.0 if all entries are nonnegative.
    pub most_negative: f64,
    pub passed: bool,
}

/// A vector of (quasi-)probabilities over an outcome alphabet `0..n`.
///
/// Construction only checks structure (length, finiteness); whether the
/// entries form a proper or quasi distribution is decided by
/// [`validate_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::MalformedInput(format!(
                "probability vector needs an alphabet of at least 2, got {}",
                entries.len()
            )));
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::MalformedInput(format!(
                "probability vector contains non-finite entry {x}"
            )));
        }
        Ok(ProbVector { entries })
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self> {
        ProbVector::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn validate(&self, mode: ValidationMode, tol: f64) -> ValidationReport {
        validate_distribution(self, mode, tol)
    }

    pub fn max_abs_diff(&self, other: &ProbVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Checks normalization and (for proper mode) positivity of a distribution.
///
/// Passes iff `|sum - 1| <= tol` and, in proper mode, `min >= -tol`.
pub fn validate_distribution(v: &ProbVector, mode: ValidationMode, tol: f64) -> ValidationReport {
    assert!(tol > 0.0, "tolerance must be positive");
    let normalization_residual = (v.sum() - 1.0).abs();
    let min = v.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let most_negative = min.min(0.0);
    let passed = normalization_residual <= tol
        && (mode == ValidationMode::Quasi || min >= -tol);
    ValidationReport {
        mode,
        tol,
        normalization_residual,
        most_negative,
        passed,
    }
}

/// Symbols that can label a tensor axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisLabel {
    /// Invasive outcome at the first time.
    A1,
    /// Invasive outcome at the second time.
    A2,
    /// Re-preparation choice after the first measurement.
    R1,
    /// Hidden system symbol before the first evolution.
    L0,
    /// Hidden (non-invasive) outcome at the first time.
    L1,
    /// Hidden (non-invasive) outcome at the second time.
    L2,
    /// Environment symbol after the first evolution.
    E1,
    /// System symbol fed into the second evolution (r1, a1 or l1 by context).
    S,
}

impl std::fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AxisLabel::A1 => "a1",
            AxisLabel::A2 => "a2",
            AxisLabel::R1 => "r1",
            AxisLabel::L0 => "l0",
            AxisLabel::L1 => "l1",
            AxisLabel::L2 => "l2",
            AxisLabel::E1 => "e1",
            AxisLabel::S => "s",
        };
        f.write_str(s)
    }
}

/// Role of an axis within a conditional table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// The table is a distribution over this axis.
    Outcome,
    /// The table is conditioned on this axis.
    Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub label: AxisLabel,
    pub kind: AxisKind,
    pub len: usize,
}

impl Axis {
    pub fn outcome(label: AxisLabel, len: usize) -> Self {
        Axis { label, kind: AxisKind::Outcome, len }
    }

    pub fn condition(label: AxisLabel, len: usize) -> Self {
        Axis { label, kind: AxisKind::Condition, len }
    }
}

/// Dense labelled tensor holding a family of conditional distributions.
///
/// Outcome axes come first, conditioning axes last; storage is row-major in
/// the listed axis order. For each combination of conditioning indices the
/// outcome block is one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CondTable {
    axes: Vec<Axis>,
    data: Vec<f64>,
}

impl CondTable {
    pub fn new(axes: Vec<Axis>, data: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::MalformedInput("table needs at least one axis".into()));
        }
        let mut seen_condition = false;
        for ax in &axes {
            if ax.len == 0 {
                return Err(Error::MalformedInput(format!("axis {} has length 0", ax.label)));
            }
            match ax.kind {
                AxisKind::Condition => seen_condition = true,
                AxisKind::Outcome if seen_condition => {
                    return Err(Error::MalformedInput(
                        "outcome axes must precede conditioning axes".into(),
                    ));
                }
                AxisKind::Outcome => {}
            }
        }
        if axes.iter().all(|ax| ax.kind == AxisKind::Condition) {
            return Err(Error::MalformedInput("table has no outcome axis".into()));
        }
        let expected: usize = axes.iter().map(|ax| ax.len).product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "table data has {} entries, axes require {}",
                data.len(),
                expected
            )));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::MalformedInput(format!("table contains non-finite entry {x}")));
        }
        Ok(CondTable { axes, data })
    }

    /// Table with all entries zero; useful as an accumulation target.
    pub fn zeros(axes: Vec<Axis>) -> Result<Self> {
        let len = axes.iter().map(|ax| ax.len).product();
        CondTable::new(axes, vec![0.0; len])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn axis(&self, label: AxisLabel) -> Option<&Axis> {
        self.axes.iter().find(|ax| ax.label == label)
    }

    fn axis_index(&self, label: AxisLabel) -> Result<usize> {
        self.axes
            .iter()
            .position(|ax| ax.label == label)
            .ok_or_else(|| Error::AxisUsage(format!("table has no axis {label}")))
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.axes.len()];
        for i in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].len;
        }
        strides
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let strides = self.strides();
        idx.iter()
            .zip(&strides)
            .zip(&self.axes)
            .map(|((&i, &s), ax)| {
                debug_assert!(i < ax.len, "index {i} out of bounds for axis {}", ax.label);
                i * s
            })
            .sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let flat = self.flat_index(idx);
        self.data[flat] = value;
    }

    pub fn add(&mut self, idx: &[usize], value: f64) {
        let flat = self.flat_index(idx);
        self.data[flat] += value;
    }

    /// Sums out one outcome axis, preserving the conditioning structure.
    pub fn marginalize(&self, label: AxisLabel) -> Result<CondTable> {
        let pos = self.axis_index(label)?;
        if self.axes[pos].kind != AxisKind::Outcome {
            return Err(Error::AxisUsage(format!(
                "cannot marginalize conditioning axis {label}"
            )));
        }
        if self.axes.len() == 1 {
            return Err(Error::AxisUsage(
                "marginalizing the only axis would leave an empty table".into(),
            ));
        }
        let mut out_axes = self.axes.clone();
        out_axes.remove(pos);
        let mut out = CondTable::zeros(out_axes)?;
        let mut idx = vec![0usize; self.axes.len()];
        for (flat, &v) in self.data.iter().enumerate() {
            self.unflatten(flat, &mut idx);
            let mut out_idx = idx.clone();
            out_idx.remove(pos);
            out.add(&out_idx, v);
        }
        Ok(out)
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for (i, ax) in self.axes.iter().enumerate().rev() {
            idx[i] = flat % ax.len;
            flat /= ax.len;
        }
    }

    /// Converts a single-axis table into a probability vector.
    pub fn into_prob_vector(self) -> Result<ProbVector> {
        if self.axes.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "expected a single axis, table has {}",
                self.axes.len()
            )));
        }
        ProbVector::new(self.data)
    }

    /// Iterates over all combinations of conditioning indices, yielding the
    /// outcome block of each as a slice-sum report `(cond_idx, sum, min)`.
    fn conditional_slices(&self) -> Vec<(Vec<usize>, f64, f64)> {
        let cond_axes: Vec<usize> = self
            .axes
            .iter()
            .enumerate()
            .filter(|(_, ax)| ax.kind == AxisKind::Condition)
            .map(|(i, _)| i)
            .collect();
        let n_combos: usize = cond_axes.iter().map(|&i| self.axes[i].len).product();
        let mut acc = vec![(Vec::new(), 0.0f64, f64::INFINITY); n_combos];
        let mut idx = vec![0usize; self.axes.len()];
        for (flat, &v) in self.data.iter().enumerate() {
            self.unflatten(flat, &mut idx);
            let mut combo = 0usize;
            for &i in &cond_axes {
                combo = combo * self.axes[i].len + idx[i];
            }
            let entry = &mut acc[combo];
            if entry.0.is_empty() && !cond_axes.is_empty() {
                entry.0 = cond_axes.iter().map(|&i| idx[i]).collect();
            }
            entry.1 += v;
            entry.2 = entry.2.min(v);
        }
        acc
    }

    /// Largest `|slice sum - 1|` over all conditioning combinations.
    pub fn max_normalization_residual(&self) -> f64 {
        self.conditional_slices()
            .iter()
            .map(|(_, sum, _)| (sum - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Most negative entry in the table, or 0.0 if none.
    pub fn most_negative_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::min)
    }

    /// Checks that every conditional slice is a distribution in the given mode.
    pub fn validate(&self, mode: ValidationMode, tol: f64) -> Result<()> {
        for (cond_idx, sum, min) in self.conditional_slices() {
            if (sum - 1.0).abs() > tol {
                return Err(Error::MalformedInput(format!(
                    "conditional slice {cond_idx:?} sums to {sum}, expected 1"
                )));
            }
            if mode == ValidationMode::Proper && min < -tol {
                return Err(Error::MalformedInput(format!(
                    "conditional slice {cond_idx:?} has negative entry {min}"
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &CondTable) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Invasive-measurement matrix: column-stochastic, row index `a` (invasive
/// outcome), column index `l` (hypothetical non-invasive outcome).
///
/// The inverse of a column-stochastic matrix is quasi-stochastic (its columns
/// still sum to one but may contain negative entries); it is cached here
/// because every hidden-level reconstruction contracts against it.
#[derive(Debug, Clone)]
pub struct ImmMatrix {
    m: DMatrix<f64>,
    m_inv: Option<DMatrix<f64>>,
    condition_estimate: Option<f64>,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl ImmMatrix {
    /// Builds an IMM from rows, validating that it is column-stochastic.
    pub fn from_rows(rows: &[Vec<f64>], tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::MalformedInput(format!(
                "IMM needs at least a 2x2 alphabet, got {n} rows"
            )));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("IMM must be square".into()));
        }
        let m = DMatrix::from_fn(n, n, |a, l| rows[a][l]);
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::MalformedInput("IMM contains non-finite entries".into()));
        }
        for l in 0..n {
            let col = m.column(l);
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > tol.eq {
                return Err(Error::MalformedInput(format!(
                    "IMM column {l} sums to {sum}, expected 1"
                )));
            }
            if col.iter().any(|&x| !(-tol.pos..=1.0 + tol.pos).contains(&x)) {
                return Err(Error::MalformedInput(format!(
                    "IMM column {l} has entries outside [0, 1]"
                )));
            }
        }
        Ok(ImmMatrix { m, m_inv: None, condition_estimate: None })
    }

    /// The identity IMM (non-invasive limit).
    pub fn identity(n: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|l| if a == l { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut imm = ImmMatrix::from_rows(&rows, &Tolerances::default())?;
        imm.m_inv = Some(DMatrix::identity(n, n));
        imm.condition_estimate = Some(1.0);
        Ok(imm)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, a: usize, l: usize) -> f64 {
        self.m[(a, l)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn is_inverted(&self) -> bool {
        self.m_inv.is_some()
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.condition_estimate
    }

    /// Computes and caches the inverse by a dense LU solve.
    ///
    /// Fails if the matrix is singular or its one-norm condition estimate
    /// exceeds `cond_threshold` — either way the measurement cannot be
    /// informationally complete.
    pub fn inverted(mut self, cond_threshold: f64) -> Result<Self> {
        let n = self.n();
        let inv = self
            .m
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::NotInformationallyComplete("IMM is singular".into()))?;
        let cond = one_norm(&self.m) * one_norm(&inv);
        if !cond.is_finite() || cond > cond_threshold {
            return Err(Error::NotInformationallyComplete(format!(
                "IMM condition estimate {cond:.3e} exceeds threshold {cond_threshold:.3e}"
            )));
        }
        // Columns of the inverse of a stochastic matrix sum to one; a large
        // violation here means the solve itself went numerically bad.
        let tol = Tolerances::default().eq;
        for l in 0..n {
            let sum: f64 = inv.column(l).iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotInformationallyComplete(format!(
                    "inverse column {l} sums to {sum}; solve is unreliable"
                )));
            }
        }
        let residual = (&self.m * &inv - DMatrix::<f64>::identity(n, n)).abs().max();
        if residual > tol {
            return Err(Error::NotInformationallyComplete(format!(
                "M * M^-1 deviates from identity by {residual:.3e}"
            )));
        }
        self.condition_estimate = Some(cond);
        self.m_inv = Some(inv);
        Ok(self)
    }

    /// Cached inverse; call [`ImmMatrix::inverted`] first.
    pub fn inverse(&self) -> Result<&DMatrix<f64>> {
        self.m_inv.as_ref().ok_or_else(|| {
            Error::NotInformationallyComplete("IMM inverse has not been computed".into())
        })
    }

    /// Applies the cached inverse to a distribution over invasive outcomes,
    /// reconstructing the hidden-level (quasi-)distribution.
    pub fn apply_inverse(&self, p: &ProbVector) -> Result<ProbVector> {
        let inv = self.inverse()?;
        if p.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "IMM alphabet {} vs vector length {}",
                self.n(),
                p.len()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(p.as_slice());
        ProbVector::new((inv * v).iter().cloned().collect())
    }
}

/// Inverts an IMM, recording its condition estimate.
pub fn invert_imm(m: ImmMatrix, cond_threshold: f64) -> Result<ImmMatrix> {
    m.inverted(cond_threshold)
}
