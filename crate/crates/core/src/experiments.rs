//! Seeded reproductions of the reference numerical studies.
//!
//! Each run returns a typed outcome for programmatic checks and can be turned
//! into an [`ExperimentResult`]: one or more CSV tables plus a JSON metadata
//! record. Output is byte-identical for identical parameters and seed.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{
    csv_err, equilibrium, simulate, simulate_comparison, FjmmModel, InitialCondition,
    SimulationOptions, Susceptibility, Trajectory,
};
use crate::error::{invalid, Error, Result};
use crate::influence::{
    build_family, split_with_past, BlendCoefficients, LagMatrixFamily, MemoryWeights, UseCase,
};
use crate::metrics::{convergence_time, mean_trajectory, polarization_index, ConvergenceTime};
use crate::netgen::{barbell, row_stochastic, GraphSpec, StochasticMatrix, RNG_ALGORITHM};
use crate::spectral::{augmented, radius, stability_report, StabilityReport};

pub const DEFAULT_SEED: u64 = 42;

/// Names accepted by [`run_named`].
pub const EXPERIMENT_NAMES: [&str; 6] = [
    "example1",
    "example2",
    "example3",
    "fig2",
    "homogeneous-sweep",
    "heterogeneous-sweep",
];

const RADIUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            wtr.write_record(row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn node_columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn one_based(set: &BTreeSet<usize>) -> Vec<usize> {
    set.iter().map(|i| i + 1).collect()
}

/// Tables and parameters of one run. The first table is written as
/// `<name>.csv`, the rest as `<name>_<suffix>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub tables: Vec<(String, Table)>,
}

#[derive(Serialize)]
struct Meta<'a> {
    name: &'a str,
    parameters: &'a Value,
    seed: Option<u64>,
    rng: &'static str,
    version: &'static str,
    files: Vec<String>,
}

impl ExperimentResult {
    pub fn file_names(&self) -> Vec<String> {
        self.tables
            .iter()
            .enumerate()
            .map(|(k, (suffix, _))| {
                if k == 0 {
                    format!("{}.csv", self.name)
                } else {
                    format!("{}_{suffix}.csv", self.name)
                }
            })
            .collect()
    }

    pub fn table(&self, suffix: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == suffix).map(|(_, t)| t)
    }

    pub fn meta_json(&self) -> String {
        let meta = Meta {
            name: &self.name,
            parameters: &self.parameters,
            seed: self.seed,
            rng: RNG_ALGORITHM,
            version: crate::VERSION,
            files: self.file_names(),
        };
        serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"
    }

    /// Writes every table and `<name>.meta.json` into `dir`, creating it if
    /// needed. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (file, (_, table)) in self.file_names().into_iter().zip(&self.tables) {
            let path = dir.join(file);
            table.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
        let meta = dir.join(format!("{}.meta.json", self.name));
        fs::write(&meta, self.meta_json())?;
        written.push(meta);
        Ok(written)
    }
}

/// `s = (0, ..., 0, 1, ..., 1)` with the first half at 0.
pub fn polarized(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| if i < n / 2 { 0.0 } else { 1.0 })
}

fn stubborn_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // graphs built from the same seed use stream 0
    rng.set_stream(1);
    rng
}

/// `round(fraction * n)` distinct nodes, at least one.
pub fn random_stubborn(n: usize, fraction: f64, seed: u64) -> Result<BTreeSet<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return invalid(format!("stubborn fraction must lie in (0, 1], got {fraction}"));
    }
    let count = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = stubborn_rng(seed);
    Ok(sample(&mut rng, n, count).into_iter().collect())
}

fn uc1_model(w: &StochasticMatrix, lambda: Susceptibility, s: DVector<f64>, beta0: f64) -> Result<FjmmModel> {
    let beta = MemoryWeights::uniform(w.n(), beta0)?;
    let family = build_family(UseCase::TwoHop, w, &beta, None)?;
    FjmmModel::new(family, lambda, s)
}

// ---------------------------------------------------------------- example 1

#[derive(Debug, Clone)]
pub struct Example1 {
    pub fj_equilibrium: DVector<f64>,
    pub fjmm_equilibrium: DVector<f64>,
    pub fj_stability: StabilityReport,
    pub fjmm_stability: StabilityReport,
}

pub const EXAMPLE1_BETA: f64 = 0.8;

/// Barbell on 6 nodes, bridge endpoints fully stubborn, polarized innate
/// opinions; memoryless model against two-hop memory with `β = 0.8`.
pub fn example1() -> Result<Example1> {
    let w = row_stochastic(&barbell(3)?)?;
    let lambda = Susceptibility::new(vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0])?;
    let s = polarized(6);
    let fj = FjmmModel::classical(&w, lambda.clone(), s.clone())?;
    let fjmm = uc1_model(&w, lambda, s, EXAMPLE1_BETA)?;
    Ok(Example1 {
        fj_equilibrium: equilibrium(&fj)?,
        fjmm_equilibrium: equilibrium(&fjmm)?,
        fj_stability: stability_report(&fj)?,
        fjmm_stability: stability_report(&fjmm)?,
    })
}

impl Example1 {
    pub fn result(&self) -> ExperimentResult {
        let n = self.fj_equilibrium.len();
        let mut table = Table::new(
            ["model", "beta0"]
                .into_iter()
                .map(String::from)
                .chain(node_columns("x_", n))
                .chain(["polarization", "stable"].map(String::from)),
        );
        for (model, beta0, x, report) in [
            ("fj", 0.0, &self.fj_equilibrium, &self.fj_stability),
            ("fjmm", EXAMPLE1_BETA, &self.fjmm_equilibrium, &self.fjmm_stability),
        ] {
            let mut row = vec![model.to_string(), num(beta0)];
            row.extend(x.iter().map(|&v| num(v)));
            row.push(num(polarization_index(x).index));
            row.push(report.stable.to_string());
            table.push(row);
        }
        ExperimentResult {
            name: "example1".into(),
            parameters: json!({
                "graph": "barbell:3",
                "use_case": UseCase::TwoHop.tag(),
                "beta0": EXAMPLE1_BETA,
                "lambda": [1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
                "innate": "polarized",
            }),
            seed: None,
            tables: vec![(String::new(), table)],
        }
    }
}

// ---------------------------------------------------------------- example 2

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Point {
    pub beta0: f64,
    pub polarization: f64,
    pub stable: bool,
    pub rho_augmented: f64,
    pub equilibrium: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2 {
    pub points: Vec<Example2Point>,
}

pub fn example2_default_grid() -> Vec<f64> {
    (0..10).map(|k| k as f64 / 10.0).collect()
}

/// Polarization of the two-hop memory equilibrium on a 10-node barbell with
/// stubborn bridge endpoints, as a function of `β₀`.
pub fn example2(grid: &[f64]) -> Result<Example2> {
    if let Some(b) = grid.iter().find(|b| !(0.0..1.0).contains(*b)) {
        return invalid(format!("example 2 grid values must lie in [0, 1), got {b}"));
    }
    let k = 5;
    let w = row_stochastic(&barbell(k)?)?;
    let n = w.n();
    let lambda = Susceptibility::with_stubborn(n, &BTreeSet::from([k - 1, k]), 1.0)?;
    let s = polarized(n);
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(grid.len());
    for beta0 in grid {
        let model = uc1_model(&w, lambda.clone(), s.clone(), beta0)?;
        let report = stability_report(&model)?;
        let x = equilibrium(&model)?;
        points.push(Example2Point {
            beta0,
            polarization: polarization_index(&x).index,
            stable: report.stable,
            rho_augmented: report.rho_augmented,
            equilibrium: x,
        });
    }
    Ok(Example2 { points })
}

impl Example2 {
    pub fn result(&self) -> ExperimentResult {
        let n = self.points.first().map_or(0, |p| p.equilibrium.len());
        let mut table = Table::new(
            ["beta0", "polarization", "stable", "rho_augmented"]
                .into_iter()
                .map(String::from)
                .chain(node_columns("x_", n)),
        );
        for p in &self.points {
            let mut row = vec![
                num(p.beta0),
                num(p.polarization),
                p.stable.to_string(),
                num(p.rho_augmented),
            ];
            row.extend(p.equilibrium.iter().map(|&v| num(v)));
            table.push(row);
        }
        ExperimentResult {
            name: "example2".into(),
            parameters: json!({
                "graph": "barbell:5",
                "use_case": UseCase::TwoHop.tag(),
                "stubborn": [5, 6],
                "innate": "polarized",
                "grid": self.points.iter().map(|p| p.beta0).collect::<Vec<_>>(),
            }),
            seed: None,
            tables: vec![(String::new(), table)],
        }
    }
}

// ---------------------------------------------------------------- example 3

pub const EXAMPLE3_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Example3 {
    pub seed: u64,
    pub stubborn: BTreeSet<usize>,
    pub fj: Trajectory,
    pub fjmm: Trajectory,
    pub comparison: Trajectory,
    pub fj_equilibrium: DVector<f64>,
    pub fjmm_equilibrium: DVector<f64>,
    pub fj_time: ConvergenceTime,
    pub fjmm_time: ConvergenceTime,
    pub comparison_time: ConvergenceTime,
    pub fj_rho: f64,
    pub fjmm_rho: f64,
    pub comparison_rho: f64,
}

/// Bridge endpoints plus one seeded node from the interior of each clique.
pub fn example3_stubborn(k: usize, seed: u64) -> BTreeSet<usize> {
    let mut rng = stubborn_rng(seed);
    let left = rng.random_range(0..k - 1);
    let right = rng.random_range(k + 1..2 * k);
    BTreeSet::from([k - 1, k, left, right])
}

/// Mean-opinion dynamics of the memoryless model, the two-hop memory model
/// (`β = 0.8`) and its comparison model on a 16-node barbell.
pub fn example3(seed: u64) -> Result<Example3> {
    let k = 8;
    let w = row_stochastic(&barbell(k)?)?;
    let n = w.n();
    let stubborn = example3_stubborn(k, seed);
    let lambda = Susceptibility::with_stubborn(n, &stubborn, 1.0)?;
    let s = polarized(n);
    let fj_model = FjmmModel::classical(&w, lambda.clone(), s.clone())?;
    let fjmm_model = uc1_model(&w, lambda, s, 0.8)?;
    let init = InitialCondition::Innate;

    // common horizon: long enough for all three runs to settle
    let settle = SimulationOptions::until(1e-14, 1_000_000);
    let horizon = [
        simulate(&fj_model, &init, settle)?.horizon(),
        simulate(&fjmm_model, &init, settle)?.horizon(),
        simulate_comparison(&fjmm_model, &init, settle)?.horizon(),
    ]
    .into_iter()
    .max()
    .expect("three runs");
    let opts = SimulationOptions::horizon(horizon);
    let fj = simulate(&fj_model, &init, opts)?;
    let fjmm = simulate(&fjmm_model, &init, opts)?;
    let comparison = simulate_comparison(&fjmm_model, &init, opts)?;

    let fj_equilibrium = equilibrium(&fj_model)?;
    let fjmm_equilibrium = equilibrium(&fjmm_model)?;
    Ok(Example3 {
        seed,
        stubborn,
        fj_time: convergence_time(&fj, &fj_equilibrium, EXAMPLE3_TOL),
        fjmm_time: convergence_time(&fjmm, &fjmm_equilibrium, EXAMPLE3_TOL),
        comparison_time: convergence_time(&comparison, &fjmm_equilibrium, EXAMPLE3_TOL),
        fj_rho: radius(&fj_model.comparison_matrix(), RADIUS_TOL)?,
        fjmm_rho: radius(augmented(&fjmm_model).matrix(), RADIUS_TOL)?,
        comparison_rho: radius(&fjmm_model.comparison_matrix(), RADIUS_TOL)?,
        fj,
        fjmm,
        comparison,
        fj_equilibrium,
        fjmm_equilibrium,
    })
}

fn time_cell(t: ConvergenceTime) -> String {
    t.steps().map_or_else(|| "not-converged".into(), |s| s.to_string())
}

impl Example3 {
    pub fn result(&self) -> ExperimentResult {
        let mut means = Table::new(["t", "mean_fj", "mean_fjmm", "mean_comparison"]);
        let fj = mean_trajectory(&self.fj);
        let fjmm = mean_trajectory(&self.fjmm);
        let cmp = mean_trajectory(&self.comparison);
        // drop the pre-history so every column starts at t = 0
        let fjmm = &fjmm[fjmm.len() - cmp.len()..];
        for (t, ((a, b), c)) in fj.iter().zip(fjmm).zip(&cmp).enumerate() {
            means.push(vec![t.to_string(), num(*a), num(*b), num(*c)]);
        }

        let mut finals = Table::new(["node", "stubborn", "fj", "fjmm", "comparison"]);
        for i in 0..self.fj_equilibrium.len() {
            finals.push(vec![
                (i + 1).to_string(),
                self.stubborn.contains(&i).to_string(),
                num(self.fj.last()[i]),
                num(self.fjmm.last()[i]),
                num(self.comparison.last()[i]),
            ]);
        }

        let mut summary = Table::new(["model", "rho", "convergence_time", "polarization"]);
        for (model, rho, time, x) in [
            ("fj", self.fj_rho, self.fj_time, &self.fj_equilibrium),
            ("fjmm", self.fjmm_rho, self.fjmm_time, &self.fjmm_equilibrium),
            ("comparison", self.comparison_rho, self.comparison_time, &self.fjmm_equilibrium),
        ] {
            summary.push(vec![
                model.into(),
                num(rho),
                time_cell(time),
                num(polarization_index(x).index),
            ]);
        }

        ExperimentResult {
            name: "example3".into(),
            parameters: json!({
                "graph": "barbell:8",
                "use_case": UseCase::TwoHop.tag(),
                "beta0": 0.8,
                "stubborn": one_based(&self.stubborn),
                "innate": "polarized",
                "tol": EXAMPLE3_TOL,
                "horizon": self.fj.horizon(),
            }),
            seed: Some(self.seed),
            tables: vec![
                (String::new(), means),
                ("final".into(), finals),
                ("summary".into(), summary),
            ],
        }
    }
}

// ------------------------------------------------------- homogeneous sweep

/// The four reference topologies for the homogeneous study.
pub fn homogeneous_graphs() -> [GraphSpec; 4] {
    [
        GraphSpec::Cycle { n: 20 },
        GraphSpec::ErdosRenyi { n: 150, p: 0.4 },
        GraphSpec::WattsStrogatz {
            n: 200,
            k: 120,
            p_rewire: 0.7,
        },
        GraphSpec::Complete { n: 50 },
    ]
}

pub fn sweep_default_grid() -> Vec<f64> {
    (1..10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoint {
    pub graph: GraphSpec,
    pub beta0: f64,
    pub rho_augmented: f64,
    pub rho_comparison: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSweep {
    pub sigma: f64,
    pub use_case: UseCase,
    pub blend: Option<BlendCoefficients>,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub points: Vec<HomogeneousPoint>,
}

/// `ρ(Ā_d)` with `Λ = σI` and `β = β₀1` on every reference topology,
/// alongside the closed form and the comparison radius.
pub fn homogeneous_sweep(
    sigma: f64,
    grid: &[f64],
    use_case: UseCase,
    blend: Option<BlendCoefficients>,
    seed: u64,
) -> Result<HomogeneousSweep> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return invalid(format!("sigma must lie in (0, 1), got {sigma}"));
    }
    if let Some(b) = grid.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
        return invalid(format!("homogeneous sweep grid values must lie in (0, 1), got {b}"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    for spec in homogeneous_graphs() {
        let w = row_stochastic(&spec.build(seed)?)?;
        let n = w.n();
        let lambda = Susceptibility::uniform(n, sigma)?;
        for &beta0 in &grid {
            let beta = MemoryWeights::uniform(n, beta0)?;
            let family = build_family(use_case, &w, &beta, blend)?;
            let model = FjmmModel::new(family, lambda.clone(), DVector::zeros(n))?;
            points.push(HomogeneousPoint {
                graph: spec.clone(),
                beta0,
                rho_augmented: radius(augmented(&model).matrix(), RADIUS_TOL)?,
                rho_comparison: radius(&model.comparison_matrix(), RADIUS_TOL)?,
                closed_form: crate::spectral::closed_form_rho_homogeneous(sigma, beta0)?,
            });
        }
    }
    Ok(HomogeneousSweep {
        sigma,
        use_case,
        blend,
        seed,
        grid,
        points,
    })
}

impl HomogeneousSweep {
    pub fn result(&self) -> ExperimentResult {
        let mut table = Table::new([
            "graph",
            "beta0",
            "rho_augmented",
            "rho_closed_form",
            "rho_comparison",
            "sigma",
        ]);
        for p in &self.points {
            table.push(vec![
                p.graph.to_string(),
                num(p.beta0),
                num(p.rho_augmented),
                num(p.closed_form),
                num(p.rho_comparison),
                num(self.sigma),
            ]);
        }
        ExperimentResult {
            name: "homogeneous-sweep".into(),
            parameters: json!({
                "sigma": self.sigma,
                "use_case": self.use_case.tag(),
                "blend": self.blend.map(|b| [b.alpha1(), b.alpha2()]),
                "graphs": homogeneous_graphs().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "graph_sampling": GRAPH_SAMPLING,
                "grid": self.grid,
            }),
            seed: Some(self.seed),
            tables: vec![(String::new(), table)],
        }
    }
}

/// Recorded in sweep metadata.
const GRAPH_SAMPLING: &str =
    "Erdos-Renyi graphs are redrawn until no node is isolated; Watts-Strogatz rewiring keeps every node at degree >= k/2";

// ----------------------------------------------------- heterogeneous sweep

#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousPoint {
    pub beta0: f64,
    pub rho_augmented: f64,
    pub rho_comparison: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousSweep {
    pub graph: GraphSpec,
    pub fraction: f64,
    pub use_case: UseCase,
    pub blend: Option<BlendCoefficients>,
    pub seed: u64,
    pub stubborn: BTreeSet<usize>,
    /// `ρ(ΛW)` of the memoryless model.
    pub rho_fj: f64,
    pub points: Vec<HeterogeneousPoint>,
}

impl HeterogeneousSweep {
    pub fn gap_at(&self, beta0: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.beta0 - beta0).abs() < 1e-12)
            .map(|p| p.rho_augmented - p.rho_comparison)
    }
}

pub fn heterogeneous_default_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

/// A seeded fraction of agents fully stubborn, the rest fully susceptible;
/// radii of the memoryless, memory and comparison models per `β₀`.
pub fn heterogeneous_sweep(
    graph: &GraphSpec,
    fraction: f64,
    grid: &[f64],
    use_case: UseCase,
    blend: Option<BlendCoefficients>,
    seed: u64,
) -> Result<HeterogeneousSweep> {
    if let Some(b) = grid.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return invalid(format!("heterogeneous sweep grid values must lie in [0, 1], got {b}"));
    }
    let w = row_stochastic(&graph.build(seed)?)?;
    let n = w.n();
    let stubborn = random_stubborn(n, fraction, seed)?;
    let lambda = Susceptibility::with_stubborn(n, &stubborn, 1.0)?;
    let fj = FjmmModel::classical(&w, lambda.clone(), DVector::zeros(n))?;
    let rho_fj = radius(&fj.comparison_matrix(), RADIUS_TOL)?;
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(grid.len());
    for beta0 in grid {
        let beta = MemoryWeights::uniform(n, beta0)?;
        let model = fj.with_family(build_family(use_case, &w, &beta, blend)?)?;
        let report = stability_report(&model)?;
        points.push(HeterogeneousPoint {
            beta0,
            rho_augmented: report.rho_augmented,
            rho_comparison: report.rho_comparison,
            stable: report.stable,
        });
    }
    Ok(HeterogeneousSweep {
        graph: graph.clone(),
        fraction,
        use_case,
        blend,
        seed,
        stubborn,
        rho_fj,
        points,
    })
}

impl HeterogeneousSweep {
    pub fn result(&self) -> ExperimentResult {
        let mut table = Table::new(["beta0", "rho_fj", "rho_fjmm", "rho_comparison", "gap", "stable"]);
        for p in &self.points {
            table.push(vec![
                num(p.beta0),
                num(self.rho_fj),
                num(p.rho_augmented),
                num(p.rho_comparison),
                num(p.rho_augmented - p.rho_comparison),
                p.stable.to_string(),
            ]);
        }
        ExperimentResult {
            name: "heterogeneous-sweep".into(),
            parameters: json!({
                "graph": self.graph.to_string(),
                "graph_sampling": GRAPH_SAMPLING,
                "stubborn_fraction": self.fraction,
                "stubborn": one_based(&self.stubborn),
                "use_case": self.use_case.tag(),
                "blend": self.blend.map(|b| [b.alpha1(), b.alpha2()]),
                "grid": self.points.iter().map(|p| p.beta0).collect::<Vec<_>>(),
            }),
            seed: Some(self.seed),
            tables: vec![(String::new(), table)],
        }
    }
}

// ------------------------------------------------------------ blend rescue

pub const FIG2_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Two stochastic matrices, each unstable on its own under `Λ`, whose
/// blend is stable for every interior `β₀`.
#[derive(Debug, Clone)]
pub struct Fig2Instance {
    pub w: StochasticMatrix,
    pub w_tilde: StochasticMatrix,
    pub lambda: Susceptibility,
    pub rho_w: f64,
    pub rho_w_tilde: f64,
    pub reports: Vec<(f64, StabilityReport)>,
}

/// The 3-agent instance: agent 1 is half stubborn; under `W` agent 2
/// follows agent 1 while agent 3 only listens to itself, under `W~` the
/// roles of agents 2 and 3 swap. Fails with `InvariantViolation` when the
/// certified behavior is not reproduced.
pub fn fig2_instance() -> Result<Fig2Instance> {
    let w = StochasticMatrix::new(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ))?;
    let w_tilde = StochasticMatrix::new(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
    ))?;
    let lambda = Susceptibility::new(vec![0.5, 1.0, 1.0])?;
    let rho_w = radius(&(lambda.diag() * w.matrix()), RADIUS_TOL)?;
    let rho_w_tilde = radius(&(lambda.diag() * w_tilde.matrix()), RADIUS_TOL)?;
    let mut reports = Vec::new();
    for beta0 in FIG2_GRID {
        let beta = MemoryWeights::uniform(3, beta0)?;
        let family: LagMatrixFamily = split_with_past(&w, w_tilde.matrix(), &beta)?;
        let model = FjmmModel::new(family, lambda.clone(), DVector::zeros(3))?;
        reports.push((beta0, stability_report(&model)?));
    }
    let fail = |msg: String| Err(Error::InvariantViolation(msg));
    if (rho_w - 1.0).abs() > 1e-9 || (rho_w_tilde - 1.0).abs() > 1e-9 {
        return fail(format!("expected unit radii, got {rho_w} and {rho_w_tilde}"));
    }
    for (beta0, r) in &reports {
        let interior = *beta0 > 0.0 && *beta0 < 1.0;
        if r.stable != interior || !r.criteria_agree {
            return fail(format!(
                "beta0 = {beta0}: stable = {}, criteria agree = {}, rho_d = {}",
                r.stable, r.criteria_agree, r.rho_augmented
            ));
        }
    }
    Ok(Fig2Instance {
        w,
        w_tilde,
        lambda,
        rho_w,
        rho_w_tilde,
        reports,
    })
}

impl Fig2Instance {
    pub fn result(&self) -> ExperimentResult {
        let mut table = Table::new([
            "beta0",
            "rho_augmented",
            "rho_comparison",
            "globally_reachable",
            "stable",
        ]);
        for (beta0, r) in &self.reports {
            table.push(vec![
                num(*beta0),
                num(r.rho_augmented),
                num(r.rho_comparison),
                r.globally_reachable.to_string(),
                r.stable.to_string(),
            ]);
        }
        let mut matrices = Table::new(["matrix", "row", "col_1", "col_2", "col_3"]);
        for (name, m) in [("W", self.w.matrix()), ("W_tilde", self.w_tilde.matrix())] {
            for (i, row) in m.row_iter().enumerate() {
                let mut cells = vec![name.to_string(), (i + 1).to_string()];
                cells.extend(row.iter().map(|&v| num(v)));
                matrices.push(cells);
            }
        }
        ExperimentResult {
            name: "fig2".into(),
            parameters: json!({
                "lambda": self.lambda.as_slice(),
                "rho_lambda_w": self.rho_w,
                "rho_lambda_w_tilde": self.rho_w_tilde,
                "grid": FIG2_GRID,
            }),
            seed: None,
            tables: vec![(String::new(), table), ("matrices".into(), matrices)],
        }
    }
}

// ---------------------------------------------------------------- dispatch

/// Knobs shared by the named runs; `None` picks each run's default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunParameters {
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub use_case: Option<UseCase>,
    pub blend: Option<BlendCoefficients>,
    pub graph: Option<GraphSpec>,
    pub stubborn_fraction: Option<f64>,
}

/// Runs an experiment by name with defaults for anything not set.
pub fn run_named(name: &str, p: &RunParameters) -> Result<ExperimentResult> {
    let seed = p.seed.unwrap_or(DEFAULT_SEED);
    match name {
        "example1" => Ok(example1()?.result()),
        "example2" => {
            let grid = p.grid.clone().unwrap_or_else(example2_default_grid);
            Ok(example2(&grid)?.result())
        }
        "example3" => Ok(example3(seed)?.result()),
        "fig2" => Ok(fig2_instance()?.result()),
        "homogeneous-sweep" => {
            let grid = p.grid.clone().unwrap_or_else(sweep_default_grid);
            let use_case = p.use_case.unwrap_or(UseCase::Inertia);
            Ok(homogeneous_sweep(p.sigma.unwrap_or(0.6), &grid, use_case, p.blend, seed)?.result())
        }
        "heterogeneous-sweep" => {
            let graph = p.graph.clone().unwrap_or(GraphSpec::WattsStrogatz {
                n: 200,
                k: 120,
                p_rewire: 0.7,
            });
            let grid = p.grid.clone().unwrap_or_else(heterogeneous_default_grid);
            let use_case = p.use_case.unwrap_or(UseCase::TwoHop);
            let fraction = p.stubborn_fraction.unwrap_or(0.15);
            Ok(heterogeneous_sweep(&graph, fraction, &grid, use_case, p.blend, seed)?.result())
        }
        other => invalid(format!(
            "unknown experiment `{other}`; expected one of {}",
            EXPERIMENT_NAMES.join(", ")
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_equilibria() {
        let e = example1().unwrap();
        let fj = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let fjmm = [4.0 / 13.0, 4.0 / 13.0, 0.0, 1.0, 9.0 / 13.0, 9.0 / 13.0];
        for i in 0..6 {
            assert!((e.fj_equilibrium[i] - fj[i]).abs() < 1e-12);
            assert!((e.fjmm_equilibrium[i] - fjmm[i]).abs() < 1e-12);
        }
        assert!(e.fj_stability.stable && e.fjmm_stability.stable);
        let t = e.result();
        assert_eq!(t.tables[0].1.rows.len(), 2);
        assert_eq!(t.file_names(), vec!["example1.csv"]);
    }

    #[test]
    fn example2_polarization_decreases() {
        let e = example2(&example2_default_grid()).unwrap();
        assert_eq!(e.points.len(), 10);
        assert!(e.points.iter().all(|p| p.stable));
        for pair in e.points.windows(2) {
            assert!(pair[1].polarization < pair[0].polarization, "{pair:?}");
        }
        assert!(example2(&[1.0]).is_err());
    }

    #[test]
    fn example3_stubborn_choice_is_seeded() {
        let a = example3_stubborn(8, 7);
        assert_eq!(a, example3_stubborn(8, 7));
        assert_eq!(a.len(), 4);
        assert!(a.contains(&7) && a.contains(&8));
        assert_eq!(a.iter().filter(|&&i| i < 7).count(), 1);
        assert_eq!(a.iter().filter(|&&i| i > 8).count(), 1);
    }

    #[test]
    fn random_stubborn_sizes() {
        assert_eq!(random_stubborn(200, 0.15, 1).unwrap().len(), 30);
        assert_eq!(random_stubborn(10, 0.01, 1).unwrap().len(), 1);
        assert_eq!(random_stubborn(10, 1.0, 1).unwrap().len(), 10);
        assert!(random_stubborn(10, 0.0, 1).is_err());
    }

    #[test]
    fn fig2_instance_verifies() {
        let f = fig2_instance().unwrap();
        assert_eq!(f.reports.len(), 5);
        assert!(f.reports[2].1.rho_augmented < 1.0);
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = run_named("nope", &RunParameters::default()).unwrap_err();
        assert!(err.to_string().contains("homogeneous-sweep"));
    }

    #[test]
    fn write_produces_tables_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let r = fig2_instance().unwrap().result();
        let paths = r.write(dir.path()).unwrap();
        let names: Vec<_> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["fig2.csv", "fig2_matrices.csv", "fig2.meta.json"]);
        let meta: Value = serde_json::from_str(&fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert_eq!(meta["version"], crate::VERSION);
        assert_eq!(meta["files"][1], "fig2_matrices.csv");
        let csv = fs::read_to_string(&paths[0]).unwrap();
        assert!(csv.starts_with("beta0,rho_augmented,rho_comparison,globally_reachable,stable\n"));
    }
}
