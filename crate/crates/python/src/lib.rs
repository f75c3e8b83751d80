//! Python bindings: graphs, models, simulation, stability and the reference
//! experiments. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use fjmm::experiments::{run_named, RunParameters};
use fjmm::influence::{build_family, BlendCoefficients, LagMatrixFamily, MemoryWeights, UseCase};
use fjmm::netgen::{GraphSpec, InfluenceGraph};
use fjmm::{
    control_matrix, equilibrium, row_stochastic, simulate, simulate_comparison, stability_report,
    FjmmModel, InitialCondition, SimulationOptions, StabilityReport, StochasticMatrix,
    Susceptibility,
};
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyfjmm, UnstableModelError, PyValueError);

fn to_py(e: fjmm::Error) -> PyErr {
    match e {
        fjmm::Error::Unstable { .. } => UnstableModelError::new_err(e.to_string()),
        fjmm::Error::NotConverged { .. } | fjmm::Error::NumericalFailure { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(k) = rows.iter().position(|r| r.len() != m) {
        return Err(PyValueError::new_err(format!("row {k} has {} entries, expected {m}", rows[k].len())));
    }
    Ok(DMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A number applied to every agent, or one value per agent.
#[derive(FromPyObject)]
enum PerNode {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerNode {
    fn expand(self, n: usize, what: &str) -> PyResult<Vec<f64>> {
        match self {
            PerNode::Scalar(v) => Ok(vec![v; n]),
            PerNode::List(v) if v.len() == n => Ok(v),
            PerNode::List(v) => Err(PyValueError::new_err(format!(
                "{what} has {} values, expected {n}",
                v.len()
            ))),
        }
    }
}

#[pyclass(name = "Graph", module = "pyfjmm", frozen)]
struct PyGraph {
    inner: InfluenceGraph,
}

#[pymethods]
impl PyGraph {
    /// Build from a spec such as `barbell:3` or `ws:200:120:0.7`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 42))]
    fn from_spec(spec: &str, seed: u64) -> PyResult<Self> {
        let spec: GraphSpec = spec.parse().map_err(to_py)?;
        Ok(Self {
            inner: spec.build(seed).map_err(to_py)?,
        })
    }

    /// Arcs `(i, j, weight)` with 0-based nodes.
    #[staticmethod]
    #[pyo3(signature = (n, edges, directed = true))]
    fn from_edges(n: usize, edges: Vec<(usize, usize, f64)>, directed: bool) -> PyResult<Self> {
        let mut g = InfluenceGraph::new(n, directed).map_err(to_py)?;
        for (i, j, w) in edges {
            g.add_edge(i, j, w).map_err(to_py)?;
        }
        Ok(Self { inner: g })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.arcs().collect()
    }

    /// Row-stochastic influence matrix, uniform over out-neighbors.
    fn weight_matrix(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows_of(row_stochastic(&self.inner).map_err(to_py)?.matrix()))
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

#[pyclass(name = "Model", module = "pyfjmm", frozen)]
struct PyModel {
    inner: FjmmModel,
}

fn report_dict<'py>(py: Python<'py>, r: &StabilityReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rho_comparison", r.rho_comparison)?;
    d.set_item("rho_augmented", r.rho_augmented)?;
    d.set_item("stubborn_set", r.stubborn_set.iter().copied().collect::<Vec<_>>())?;
    d.set_item("globally_reachable", r.globally_reachable)?;
    d.set_item("stable", r.stable)?;
    d.set_item("criteria_agree", r.criteria_agree)?;
    Ok(d)
}

#[pymethods]
impl PyModel {
    /// Model on `graph`. Without `use_case` it is memoryless; otherwise
    /// `beta` weighs the past and `alpha1` sets the blend use case.
    #[new]
    #[pyo3(signature = (graph, susceptibility, innate, use_case = None, beta = PerNode::Scalar(0.0), alpha1 = None))]
    fn new(
        graph: &PyGraph,
        susceptibility: PerNode,
        innate: Vec<f64>,
        use_case: Option<&str>,
        beta: PerNode,
        alpha1: Option<f64>,
    ) -> PyResult<Self> {
        let w = row_stochastic(&graph.inner).map_err(to_py)?;
        let n = w.n();
        let family = match use_case {
            None => LagMatrixFamily::single(&w),
            Some(tag) => {
                let uc: UseCase = tag.parse().map_err(to_py)?;
                let beta = MemoryWeights::new(beta.expand(n, "beta")?).map_err(to_py)?;
                let blend = alpha1.map(BlendCoefficients::from_alpha1).transpose().map_err(to_py)?;
                build_family(uc, &w, &beta, blend).map_err(to_py)?
            }
        };
        Self::assemble(family, susceptibility, innate)
    }

    /// Model from explicit lag matrices `[W1, ..., WL]` whose sum is stochastic.
    #[staticmethod]
    fn from_lags(lags: Vec<Vec<Vec<f64>>>, susceptibility: PerNode, innate: Vec<f64>) -> PyResult<Self> {
        let lags = lags.into_iter().map(matrix_from_rows).collect::<PyResult<Vec<_>>>()?;
        let family = LagMatrixFamily::new(lags).map_err(to_py)?;
        Self::assemble(family, susceptibility, innate)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn lags(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.family().lags().iter().map(rows_of).collect()
    }

    fn comparison_matrix(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.comparison_matrix())
    }

    /// States `x(-L+1), ..., x(T)`. `history` is oldest first; default is
    /// the innate opinions.
    #[pyo3(signature = (horizon, tol = None, history = None, comparison = false))]
    fn simulate(
        &self,
        horizon: usize,
        tol: Option<f64>,
        history: Option<Vec<Vec<f64>>>,
        comparison: bool,
    ) -> PyResult<Vec<Vec<f64>>> {
        let init = match history {
            None => InitialCondition::Innate,
            Some(h) => InitialCondition::History(h.into_iter().map(DVector::from_vec).collect()),
        };
        let opts = match tol {
            Some(t) => SimulationOptions::until(t, horizon),
            None => SimulationOptions::horizon(horizon),
        };
        let traj = if comparison {
            simulate_comparison(&self.inner, &init, opts)
        } else {
            simulate(&self.inner, &init, opts)
        }
        .map_err(to_py)?;
        Ok(traj.states().iter().map(|x| x.iter().copied().collect()).collect())
    }

    /// Raises `UnstableModelError` when the model is not stable.
    fn equilibrium(&self) -> PyResult<Vec<f64>> {
        Ok(equilibrium(&self.inner).map_err(to_py)?.iter().copied().collect())
    }

    fn control_matrix(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows_of(&control_matrix(&self.inner).map_err(to_py)?))
    }

    /// All stability criteria; `stubborn_set` holds 0-based nodes.
    fn stability<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &stability_report(&self.inner).map_err(to_py)?)
    }

    fn augmented_matrix(&self) -> Vec<Vec<f64>> {
        rows_of(fjmm::augmented(&self.inner).matrix())
    }
}

impl PyModel {
    fn assemble(family: LagMatrixFamily, susceptibility: PerNode, innate: Vec<f64>) -> PyResult<Self> {
        let n = family.n();
        let lambda = Susceptibility::new(susceptibility.expand(n, "susceptibility")?).map_err(to_py)?;
        let inner = FjmmModel::new(family, lambda, DVector::from_vec(innate)).map_err(to_py)?;
        Ok(Self { inner })
    }
}

/// Spectral radius of a nonnegative matrix.
#[pyfunction]
#[pyo3(signature = (matrix, tol = 1e-12))]
fn spectral_radius(matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<f64> {
    fjmm::spectral::radius(&matrix_from_rows(matrix)?, tol).map_err(to_py)
}

/// Mean squared deviation from the average opinion.
#[pyfunction]
fn polarization_index(x: Vec<f64>) -> f64 {
    fjmm::polarization_index(&DVector::from_vec(x)).index
}

/// Convergence rate of the two-lag model with uniform `σ` and `β₀`.
#[pyfunction]
fn closed_form_rho(sigma: f64, beta0: f64) -> PyResult<f64> {
    fjmm::closed_form_rho_homogeneous(sigma, beta0).map_err(to_py)
}

/// `ρ(σW)` for a stochastic `W`.
#[pyfunction]
fn homogeneous_radius(sigma: f64, w: Vec<Vec<f64>>) -> PyResult<f64> {
    let w = StochasticMatrix::new(matrix_from_rows(w)?).map_err(to_py)?;
    fjmm::spectral::homogeneous_radius(sigma, &w).map_err(to_py)
}

/// Runs a named experiment and writes its files to `out_dir`.
#[pyfunction]
#[pyo3(signature = (name, out_dir, seed = None))]
fn run_experiment(name: &str, out_dir: PathBuf, seed: Option<u64>) -> PyResult<Vec<PathBuf>> {
    let params = RunParameters {
        seed,
        ..Default::default()
    };
    run_named(name, &params)
        .and_then(|r| r.write(&out_dir))
        .map_err(to_py)
}

#[pymodule]
pub fn pyfjmm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", fjmm::VERSION)?;
    m.add("UnstableModelError", m.py().get_type::<UnstableModelError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(polarization_index, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_rho, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_radius, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
