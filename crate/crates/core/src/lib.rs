//! Friedkin–Johnsen opinion dynamics extended with memory and multi-hop
//! influence.
//!
//! Agents update by mixing their innate opinion with a weighted average of
//! current *and past* opinions, weighted by a family of lag matrices whose sum
//! is stochastic. This crate builds the influence networks and lag families,
//! simulates trajectories, certifies stability, computes equilibria and
//! convergence rates, and regenerates the reference numerical experiments.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod influence;
pub mod io;
pub mod metrics;
pub mod netgen;
pub mod spectral;

pub use dynamics::{
    control_matrix, equilibrium, hull_envelope, simulate, simulate_comparison, step, FjmmModel,
    InitialCondition, SimulationOptions, StopReason, Susceptibility, Trajectory,
};
pub use error::{Error, Result};
pub use influence::{
    build_family, lagged_communication_pair, use_case_pair, validate_family, BlendCoefficients,
    LagMatrixFamily, MemoryWeights, UseCase,
};
pub use metrics::{convergence_time, mean_trajectory, polarization_index, ConvergenceTime};
pub use netgen::{
    barbell, binary_adjacency, complete, cycle, erdos_renyi, reaches_set, row_stochastic,
    watts_strogatz, GraphSpec, InfluenceGraph, StochasticMatrix,
};
pub use spectral::{
    augmented, closed_form_rho_homogeneous, spectral_radius, stability_report, AugmentedSystem,
    RadiusOptions, StabilityReport,
};

/// Crate version recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
