//! The opinion recursion with memory,
//!
//! ```text
//! x(t+1) = Λ (W1 x(t) + W2 x(t-1) + ... + WL x(t-L+1)) + (I - Λ) s,
//! ```
//!
//! its memoryless comparison recursion `x(t+1) = Ā x(t) + (I - Λ) s` with
//! `Ā = Λ (W1 + ... + WL)`, and their shared equilibrium.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::influence::LagMatrixFamily;
use crate::netgen::StochasticMatrix;
use crate::spectral;

/// Step cap used when only a stopping tolerance is given.
pub const DEFAULT_MAX_HORIZON: usize = 1_000_000;

/// Slack allowed on the nested-hull monotonicity.
pub const HULL_SLACK: f64 = 1e-12;

/// Diagonal susceptibilities `λ_ii ∈ [0, 1]`; 0 is a totally stubborn agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Susceptibility(Vec<f64>);

impl Susceptibility {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some((i, l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(0.0..=1.0).contains(*l))
        {
            return invalid(format!("lambda[{i}] = {l} is outside [0, 1]"));
        }
        Ok(Self(lambda))
    }

    pub fn uniform(n: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; n])
    }

    /// `λ = 0` on `stubborn`, `rest` everywhere else.
    pub fn with_stubborn(n: usize, stubborn: &BTreeSet<usize>, rest: f64) -> Result<Self> {
        if let Some(&i) = stubborn.iter().find(|&&i| i >= n) {
            return invalid(format!("stubborn node {i} outside 0..{n}"));
        }
        Self::new((0..n).map(|i| if stubborn.contains(&i) { 0.0 } else { rest }).collect())
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

    /// `Some(σ)` when `Λ = σ I`.
    pub fn homogeneous(&self) -> Option<f64> {
        let first = *self.0.first()?;
        self.0.iter().all(|&l| l == first).then_some(first)
    }

    /// Agents that are at least partly anchored to their innate opinion.
    pub fn stubborn_set(&self) -> BTreeSet<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] < 1.0).collect()
    }

    pub fn diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.0))
    }
}

#[derive(Debug, Clone)]
pub struct FjmmModel {
    family: LagMatrixFamily,
    susceptibility: Susceptibility,
    innate: DVector<f64>,
}

impl FjmmModel {
    pub fn new(
        family: LagMatrixFamily,
        susceptibility: Susceptibility,
        innate: DVector<f64>,
    ) -> Result<Self> {
        let n = family.n();
        if susceptibility.len() != n || innate.len() != n {
            return invalid(format!(
                "dimension mismatch: family is {n}x{n}, lambda has {}, s has {}",
                susceptibility.len(),
                innate.len()
            ));
        }
        if let Some(i) = innate.iter().position(|v| !v.is_finite()) {
            return invalid(format!("innate opinion s[{i}] is not finite"));
        }
        Ok(Self {
            family,
            susceptibility,
            innate,
        })
    }

    /// The memoryless model `x(t+1) = Λ W x(t) + (I - Λ) s`.
    pub fn classical(
        w: &StochasticMatrix,
        susceptibility: Susceptibility,
        innate: DVector<f64>,
    ) -> Result<Self> {
        Self::new(LagMatrixFamily::single(w), susceptibility, innate)
    }

    /// Same susceptibilities and innate opinions, different lag family.
    pub fn with_family(&self, family: LagMatrixFamily) -> Result<Self> {
        Self::new(family, self.susceptibility.clone(), self.innate.clone())
    }

    pub fn n(&self) -> usize {
        self.innate.len()
    }

    pub fn depth(&self) -> usize {
        self.family.depth()
    }

    pub fn family(&self) -> &LagMatrixFamily {
        &self.family
    }

    pub fn susceptibility(&self) -> &Susceptibility {
        &self.susceptibility
    }

    pub fn innate(&self) -> &DVector<f64> {
        &self.innate
    }

    /// `Ā = Λ (W1 + ... + WL)`.
    pub fn comparison_matrix(&self) -> DMatrix<f64> {
        scale_rows(self.family.sum(), self.susceptibility.as_slice())
    }

    /// `(I - Λ) s`.
    pub fn anchor(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.susceptibility
                .as_slice()
                .iter()
                .zip(self.innate.iter())
                .map(|(l, s)| (1.0 - l) * s),
        )
    }
}

pub(crate) fn scale_rows(mut m: DMatrix<f64>, factors: &[f64]) -> DMatrix<f64> {
    for (i, &f) in factors.iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|v| *v *= f);
    }
    m
}

fn apply_update<'a>(
    model: &FjmmModel,
    newest_first: impl Iterator<Item = &'a DVector<f64>>,
) -> DVector<f64> {
    let mut social = DVector::zeros(model.n());
    for (w, x) in model.family.lags().iter().zip(newest_first) {
        social.gemv(1.0, w, x, 1.0);
    }
    for (i, (&l, &s)) in model
        .susceptibility
        .as_slice()
        .iter()
        .zip(model.innate.iter())
        .enumerate()
    {
        social[i] = l * social[i] + (1.0 - l) * s;
    }
    social
}

/// One update. `history` holds the last `L` opinion vectors, newest first.
pub fn step(model: &FjmmModel, history: &[DVector<f64>]) -> Result<DVector<f64>> {
    if history.len() != model.depth() {
        return Err(Error::InvalidState(format!(
            "history has {} vectors, memory depth is {}",
            history.len(),
            model.depth()
        )));
    }
    if let Some(k) = history.iter().position(|x| x.len() != model.n()) {
        return Err(Error::InvalidState(format!(
            "history vector {k} has length {}, expected {}",
            history[k].len(),
            model.n()
        )));
    }
    Ok(apply_update(model, history.iter()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `x(-L+1) = ... = x(0) = s`.
    Innate,
    /// Explicit history, oldest first. Shorter histories are padded at the
    /// old end with their oldest vector.
    History(Vec<DVector<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulationOptions {
    pub horizon: Option<usize>,
    pub stop_tol: Option<f64>,
}

impl SimulationOptions {
    pub fn horizon(t: usize) -> Self {
        Self {
            horizon: Some(t),
            stop_tol: None,
        }
    }

    pub fn until(stop_tol: f64, horizon: usize) -> Self {
        Self {
            horizon: Some(horizon),
            stop_tol: Some(stop_tol),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    Tolerance,
}

/// Opinion vectors `x(-L+1), ..., x(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    depth: usize,
    states: Vec<DVector<f64>>,
    stop: StopReason,
}

impl Trajectory {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    /// Earliest stored time, `-(L-1)`.
    pub fn first_time(&self) -> isize {
        1 - self.depth as isize
    }

    /// `T`, the last simulated step.
    pub fn horizon(&self) -> usize {
        self.states.len() - self.depth
    }

    pub fn at(&self, t: isize) -> &DVector<f64> {
        &self.states[(t - self.first_time()) as usize]
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectories are never empty")
    }

    /// All stored vectors with their time index.
    pub fn iter(&self) -> impl Iterator<Item = (isize, &DVector<f64>)> {
        let t0 = self.first_time();
        self.states.iter().enumerate().map(move |(k, x)| (t0 + k as isize, x))
    }

    /// Vectors for `t = 0..=T`.
    pub fn from_zero(&self) -> &[DVector<f64>] {
        &self.states[self.depth - 1..]
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    /// CSV with header `t,x_1,...,x_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let n = self.states[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        wtr.write_record(&header).map_err(csv_err)?;
        for (t, x) in self.iter() {
            let mut rec = vec![t.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn initial_history(model: &FjmmModel, init: &InitialCondition, depth: usize) -> Result<Vec<DVector<f64>>> {
    match init {
        InitialCondition::Innate => Ok(vec![model.innate.clone(); depth]),
        InitialCondition::History(h) => {
            if h.is_empty() || h.len() > depth {
                return Err(Error::InvalidState(format!(
                    "initial history has {} vectors, expected 1..={depth}",
                    h.len()
                )));
            }
            if let Some(k) = h.iter().position(|x| x.len() != model.n()) {
                return Err(Error::InvalidState(format!(
                    "initial vector {k} has length {}, expected {}",
                    h[k].len(),
                    model.n()
                )));
            }
            let mut out = vec![h[0].clone(); depth - h.len()];
            out.extend(h.iter().cloned());
            Ok(out)
        }
    }
}

fn run(
    depth: usize,
    mut states: Vec<DVector<f64>>,
    opts: SimulationOptions,
    mut next: impl FnMut(&[DVector<f64>]) -> DVector<f64>,
) -> Result<Trajectory> {
    let horizon = match (opts.horizon, opts.stop_tol) {
        (Some(t), _) if t >= 1 => t,
        (None, Some(_)) => DEFAULT_MAX_HORIZON,
        _ => return invalid("simulation needs a horizon >= 1 or a stopping tolerance"),
    };
    let mut quiet_steps = 0;
    let mut stop = StopReason::Horizon;
    states.reserve(horizon);
    for t in 0..horizon {
        let x = next(&states);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure { step: t + 1 });
        }
        let change = (&x - states.last().unwrap()).amax();
        states.push(x);
        if let Some(tol) = opts.stop_tol {
            quiet_steps = if change < tol { quiet_steps + 1 } else { 0 };
            if quiet_steps >= depth {
                stop = StopReason::Tolerance;
                break;
            }
        }
    }
    Ok(Trajectory {
        depth,
        states,
        stop,
    })
}

/// Iterates the memory recursion. With a stopping tolerance the run ends
/// once `L` consecutive steps each move less than it in max-norm.
pub fn simulate(model: &FjmmModel, init: &InitialCondition, opts: SimulationOptions) -> Result<Trajectory> {
    let depth = model.depth();
    let states = initial_history(model, init, depth)?;
    run(depth, states, opts, |states| {
        apply_update(model, states.iter().rev().take(depth))
    })
}

/// Iterates the memoryless comparison recursion from the newest vector of `init`.
pub fn simulate_comparison(
    model: &FjmmModel,
    init: &InitialCondition,
    opts: SimulationOptions,
) -> Result<Trajectory> {
    let start = initial_history(model, init, model.depth())?
        .pop()
        .expect("history is non-empty");
    let a_bar = model.comparison_matrix();
    let anchor = model.anchor();
    run(1, vec![start], opts, |states| {
        let mut x = anchor.clone();
        x.gemv(1.0, &a_bar, states.last().unwrap(), 1.0);
        x
    })
}

/// Threshold on the 1-norm condition number of `I - Ā` (`1/sqrt(eps)`).
pub fn condition_threshold() -> f64 {
    1.0 / f64::EPSILON.sqrt()
}

fn solve_operator(model: &FjmmModel) -> Result<DMatrix<f64>> {
    if !spectral::graph_criterion(model)? {
        return Err(Error::Unstable {
            reason: "the anchored agents are not globally reachable in the union influence graph"
                .into(),
        });
    }
    let n = model.n();
    let op = DMatrix::<f64>::identity(n, n) - model.comparison_matrix();
    let inv = op.clone().lu().try_inverse().ok_or_else(|| Error::Unstable {
        reason: "I - Ā is singular".into(),
    })?;
    let cond = norm1(&op) * norm1(&inv);
    if !(cond <= condition_threshold()) {
        return Err(Error::Unstable {
            reason: format!("I - Ā has condition number {cond:.3e}"),
        });
    }
    Ok(inv)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// The common fixed point `x̄ = (I - Ā)^-1 (I - Λ) s` of both recursions.
pub fn equilibrium(model: &FjmmModel) -> Result<DVector<f64>> {
    solve_operator(model)?;
    let n = model.n();
    let op = DMatrix::<f64>::identity(n, n) - model.comparison_matrix();
    let rhs = model.anchor();
    let x = op.clone().lu().solve(&rhs).ok_or_else(|| Error::Unstable {
        reason: "I - Ā is singular".into(),
    })?;
    let residual = (&op * &x - &rhs).amax();
    if residual > 1e-10 * n as f64 {
        return Err(Error::Unstable {
            reason: format!("equilibrium residual {residual:.3e} exceeds tolerance"),
        });
    }
    Ok(x)
}

/// `(I - Ā)^-1 (I - Λ)`: row `i` gives the weights of the innate opinions
/// in agent `i`'s final opinion.
pub fn control_matrix(model: &FjmmModel) -> Result<DMatrix<f64>> {
    let inv = solve_operator(model)?;
    let keep: Vec<f64> = model
        .susceptibility
        .as_slice()
        .iter()
        .map(|l| 1.0 - l)
        .collect();
    let mut out = inv;
    for (j, k) in keep.iter().enumerate() {
        out.column_mut(j).iter_mut().for_each(|v| *v *= k);
    }
    Ok(out)
}

/// Running lower/upper envelopes over the last `L` vectors and `s`, for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullEnvelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn hull_envelope(traj: &Trajectory, innate: &DVector<f64>) -> Result<HullEnvelope> {
    let depth = traj.depth();
    let s_min = innate.min();
    let s_max = innate.max();
    let states = traj.states();
    let mut lower = Vec::with_capacity(traj.horizon() + 1);
    let mut upper = Vec::with_capacity(traj.horizon() + 1);
    for end in depth..=states.len() {
        let window = &states[end - depth..end];
        lower.push(window.iter().map(|x| x.min()).fold(s_min, f64::min));
        upper.push(window.iter().map(|x| x.max()).fold(s_max, f64::max));
    }
    for t in 1..lower.len() {
        if lower[t] < lower[t - 1] - HULL_SLACK {
            return Err(Error::InvariantViolation(format!(
                "lower hull decreased at t={t}: {} -> {}",
                lower[t - 1],
                lower[t]
            )));
        }
        if upper[t] > upper[t - 1] + HULL_SLACK {
            return Err(Error::InvariantViolation(format!(
                "upper hull increased at t={t}: {} -> {}",
                upper[t - 1],
                upper[t]
            )));
        }
    }
    Ok(HullEnvelope { lower, upper })
}
