//! Outcome measures: polarization of an equilibrium, mean opinion over
//! time, and how fast a trajectory settles.

use nalgebra::DVector;
use serde::Serialize;

use crate::dynamics::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationReport {
    /// Mean squared deviation from the average opinion.
    pub index: f64,
    pub mean: f64,
    pub equilibrium: Vec<f64>,
}

/// `P = (x - x*)ᵀ(x - x*) / n` with `x*` the arithmetic mean of `x`.
pub fn polarization_index(x: &DVector<f64>) -> PolarizationReport {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let index = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    PolarizationReport {
        index,
        mean,
        equilibrium: x.iter().copied().collect(),
    }
}

/// Mean opinion for every stored step, initial history included.
pub fn mean_trajectory(traj: &Trajectory) -> Vec<f64> {
    traj.states().iter().map(|x| x.mean()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum ConvergenceTime {
    Converged { steps: usize },
    NotConverged { final_error: f64 },
}

impl ConvergenceTime {
    pub fn steps(&self) -> Option<usize> {
        match *self {
            ConvergenceTime::Converged { steps } => Some(steps),
            ConvergenceTime::NotConverged { .. } => None,
        }
    }
}

/// First `t >= 0` from which every `x(t')`, `t' >= t`, is within `tol` of
/// `target` in max-norm.
pub fn convergence_time(traj: &Trajectory, target: &DVector<f64>, tol: f64) -> ConvergenceTime {
    let errors: Vec<f64> = traj.from_zero().iter().map(|x| (x - target).amax()).collect();
    let last_bad = errors.iter().rposition(|&e| e > tol);
    match last_bad {
        None => ConvergenceTime::Converged { steps: 0 },
        Some(t) if t + 1 < errors.len() => ConvergenceTime::Converged { steps: t + 1 },
        Some(_) => ConvergenceTime::NotConverged {
            final_error: *errors.last().expect("trajectory has x(0)"),
        },
    }
}

/// Average ratio of successive max-norm errors over the last 20 steps.
/// Steps whose error has reached round-off level are skipped. A diagnostic
/// only; stability is decided elsewhere.
pub fn estimate_rate(traj: &Trajectory, target: &DVector<f64>) -> Option<f64> {
    let errors: Vec<f64> = traj.from_zero().iter().map(|x| (x - target).amax()).collect();
    let floor = 1e3 * f64::EPSILON * target.amax().max(1.0);
    let usable: Vec<f64> = errors.into_iter().take_while(|&e| e > floor).collect();
    if usable.len() < 2 {
        return None;
    }
    let start = usable.len().saturating_sub(21);
    let ratios: Vec<f64> = usable[start..].windows(2).map(|w| w[1] / w[0]).collect();
    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
}
