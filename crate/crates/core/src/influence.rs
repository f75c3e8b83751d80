//! Lag-matrix families: the weights each agent puts on opinions from the
//! current step and from earlier steps.
//!
//! Every two-lag use case splits a stochastic `W` and a second stochastic
//! matrix `W~` (the "past" influence) with per-agent memory weights `beta`:
//!
//! ```text
//! W1 = (I - diag(beta)) W,    W2 = diag(beta) W~
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::netgen::{binary_adjacency, StochasticMatrix};

/// Tolerance on the row sums of `W1 + ... + WL`.
pub const FAMILY_ROW_SUM_TOL: f64 = 1e-10;

/// Per-agent weight on past opinions, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryWeights(Vec<f64>);

impl MemoryWeights {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some((i, b)) = beta
            .iter()
            .enumerate()
            .find(|(_, b)| !(0.0..=1.0).contains(*b))
        {
            return invalid(format!("beta[{i}] = {b} is outside [0, 1]"));
        }
        Ok(Self(beta))
    }

    pub fn uniform(n: usize, beta0: f64) -> Result<Self> {
        Self::new(vec![beta0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Some(b)` when every agent uses the same weight.
    pub fn homogeneous(&self) -> Option<f64> {
        let first = *self.0.first()?;
        self.0.iter().all(|&b| b == first).then_some(first)
    }

    fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.0))
    }
}

/// Convex weights for `W~ = alpha1 W + alpha2 I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendCoefficients {
    alpha1: f64,
    alpha2: f64,
}

impl BlendCoefficients {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(alpha1 >= 0.0 && alpha2 >= 0.0) || (alpha1 + alpha2 - 1.0).abs() > 1e-12 {
            return invalid(format!(
                "blend coefficients must be nonnegative and sum to 1, got ({alpha1}, {alpha2})"
            ));
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn from_alpha1(alpha1: f64) -> Result<Self> {
        Self::new(alpha1, 1.0 - alpha1)
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
}

/// Which matrix plays the role of past influence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UseCase {
    /// Secondary neighbors weighted by walk products: `W~ = W^2`.
    TwoHop,
    /// Secondary neighbors weighted uniformly through each relay: `W~ = D^-1 W B`.
    TwoHopAlt,
    /// Social inertia: `W~ = I`.
    Inertia,
    /// Recent memory of neighbors: `W~ = W`.
    Memory,
    /// `W~ = alpha1 W + alpha2 I`.
    Blend,
    /// Own opinion current, everyone else's one step late.
    LaggedComm,
}

impl UseCase {
    pub const ALL: [UseCase; 6] = [
        UseCase::TwoHop,
        UseCase::TwoHopAlt,
        UseCase::Inertia,
        UseCase::Memory,
        UseCase::Blend,
        UseCase::LaggedComm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            UseCase::TwoHop => "two-hop",
            UseCase::TwoHopAlt => "two-hop-alt",
            UseCase::Inertia => "inertia",
            UseCase::Memory => "memory",
            UseCase::Blend => "blend",
            UseCase::LaggedComm => "lagged-comm",
        }
    }
}

impl fmt::Display for UseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for UseCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UseCase::ALL
            .into_iter()
            .find(|uc| uc.tag() == s)
            .ok_or_else(|| {
                let names: Vec<_> = UseCase::ALL.iter().map(|u| u.tag()).collect();
                Error::Parse(format!("unknown use case `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Lag matrices `W1..WL`, where `W(l)` multiplies `x(t - l + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrixFamily {
    lags: Vec<DMatrix<f64>>,
}

impl LagMatrixFamily {
    /// Builds a family and rejects it unless [`validate_family`] passes.
    pub fn new(lags: Vec<DMatrix<f64>>) -> Result<Self> {
        let family = Self::new_unchecked(lags)?;
        let report = validate_family(&family);
        if !report.passed {
            return Err(Error::Validation(report.to_string()));
        }
        Ok(family)
    }

    /// Only checks shapes. Use [`validate_family`] to inspect the weights.
    pub fn new_unchecked(lags: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = lags.first() else {
            return invalid("a lag family needs at least one matrix");
        };
        let n = first.nrows();
        if let Some(l) = lags.iter().position(|m| m.nrows() != n || m.ncols() != n) {
            return invalid(format!("lag matrix {} is not {n}x{n}", l + 1));
        }
        Ok(Self { lags })
    }

    /// The memoryless family `(W)`.
    pub fn single(w: &StochasticMatrix) -> Self {
        Self {
            lags: vec![w.matrix().clone()],
        }
    }

    pub fn depth(&self) -> usize {
        self.lags.len()
    }

    pub fn n(&self) -> usize {
        self.lags[0].nrows()
    }

    /// `W(lag)` with `lag` counted from 1.
    pub fn lag(&self, lag: usize) -> &DMatrix<f64> {
        &self.lags[lag - 1]
    }

    pub fn lags(&self) -> &[DMatrix<f64>] {
        &self.lags
    }

    pub fn sum(&self) -> DMatrix<f64> {
        let mut acc = self.lags[0].clone();
        for m in &self.lags[1..] {
            acc += m;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub passed: bool,
    pub max_row_sum_deviation: f64,
    pub worst_row: usize,
    pub min_entry: f64,
    /// `(lag, i, j)` of the smallest entry, lag counted from 1.
    pub min_entry_at: (usize, usize, usize),
}

impl fmt::Display for FamilyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, i, j) = self.min_entry_at;
        write!(
            f,
            "{}: max row-sum deviation {:.3e} (row {}), min entry {:.3e} at lag {l} ({i}, {j})",
            if self.passed { "pass" } else { "fail" },
            self.max_row_sum_deviation,
            self.worst_row,
            self.min_entry,
        )
    }
}

pub fn validate_family(family: &LagMatrixFamily) -> FamilyReport {
    let mut min_entry = f64::INFINITY;
    let mut min_entry_at = (1, 0, 0);
    for (l, m) in family.lags.iter().enumerate() {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                // the first NaN counts as the worst entry
                if v < min_entry || (v.is_nan() && !min_entry.is_nan()) {
                    min_entry = v;
                    min_entry_at = (l + 1, i, j);
                }
            }
        }
    }
    let sum = family.sum();
    let (worst_row, max_row_sum_deviation) = (0..sum.nrows())
        .map(|i| (i, (sum.row(i).sum() - 1.0).abs()))
        .fold((0, 0.0), |acc, (i, d)| if !(d <= acc.1) { (i, d) } else { acc });
    let passed = min_entry >= 0.0 && max_row_sum_deviation <= FAMILY_ROW_SUM_TOL;
    FamilyReport {
        passed,
        max_row_sum_deviation,
        worst_row,
        min_entry,
        min_entry_at,
    }
}

/// The past-influence matrix `W~` for a two-lag use case.
pub fn past_influence(
    use_case: UseCase,
    w: &StochasticMatrix,
    blend: Option<BlendCoefficients>,
) -> Result<DMatrix<f64>> {
    let m = w.matrix();
    let n = w.n();
    Ok(match use_case {
        UseCase::TwoHop => m * m,
        UseCase::TwoHopAlt => {
            let wb = m * binary_adjacency(w).matrix();
            let mut out = wb.clone();
            for i in 0..n {
                let d = wb.row(i).sum();
                assert!(d > 0.0, "row {i} of W*B sums to {d}; W is malformed");
                out.row_mut(i).iter_mut().for_each(|v| *v /= d);
            }
            out
        }
        UseCase::Inertia => DMatrix::identity(n, n),
        UseCase::Memory => m.clone(),
        UseCase::Blend => {
            let b = blend.ok_or_else(|| {
                Error::InvalidParameter("the blend use case needs (alpha1, alpha2)".into())
            })?;
            m * b.alpha1 + DMatrix::<f64>::identity(n, n) * b.alpha2
        }
        UseCase::LaggedComm => {
            return invalid("lagged-comm is not a past-influence split; use lagged_communication_pair")
        }
    })
}

/// `(W1, W2) = ((I - diag(beta)) W, diag(beta) W~)` for the given use case.
pub fn use_case_pair(
    use_case: UseCase,
    w: &StochasticMatrix,
    beta: &MemoryWeights,
    blend: Option<BlendCoefficients>,
) -> Result<LagMatrixFamily> {
    if beta.len() != w.n() {
        return invalid(format!(
            "beta has length {}, expected {}",
            beta.len(),
            w.n()
        ));
    }
    let past = past_influence(use_case, w, blend)?;
    split_with_past(w, &past, beta)
}

/// `(W1, W2) = ((I - diag(beta)) W, diag(beta) past)` for an arbitrary
/// past-influence matrix.
pub fn split_with_past(
    w: &StochasticMatrix,
    past: &DMatrix<f64>,
    beta: &MemoryWeights,
) -> Result<LagMatrixFamily> {
    if beta.len() != w.n() || past.shape() != (w.n(), w.n()) {
        return invalid(format!(
            "dimension mismatch: W is {0}x{0}, past is {1}x{2}, beta has {3}",
            w.n(),
            past.nrows(),
            past.ncols(),
            beta.len()
        ));
    }
    let b = beta.diag();
    let keep = DMatrix::<f64>::identity(w.n(), w.n()) - &b;
    LagMatrixFamily::new(vec![keep * w.matrix(), b * past])
}

/// Diagonal of `W` as the current-step weights, the off-diagonal part lagged.
pub fn lagged_communication_pair(w: &StochasticMatrix) -> LagMatrixFamily {
    let m = w.matrix();
    let own = DMatrix::from_diagonal(&m.diagonal());
    let mut others = m.clone();
    others.fill_diagonal(0.0);
    LagMatrixFamily {
        lags: vec![own, others],
    }
}

/// Any use case by tag. `beta` is ignored for `lagged-comm`.
pub fn build_family(
    use_case: UseCase,
    w: &StochasticMatrix,
    beta: &MemoryWeights,
    blend: Option<BlendCoefficients>,
) -> Result<LagMatrixFamily> {
    match use_case {
        UseCase::LaggedComm => Ok(lagged_communication_pair(w)),
        other => use_case_pair(other, w, beta, blend),
    }
}
