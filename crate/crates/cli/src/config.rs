//! Run configuration: an optional JSON file merged under command-line flags,
//! then resolved into a model.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fjmm::experiments::polarized;
use fjmm::influence::{build_family, BlendCoefficients, LagMatrixFamily, MemoryWeights, UseCase};
use fjmm::io::{read_edge_list, read_vector};
use fjmm::netgen::{row_stochastic, GraphSpec, InfluenceGraph};
use fjmm::{FjmmModel, Susceptibility};
use nalgebra::DVector;
use serde::Deserialize;

use crate::error::CliError;

/// A scalar or a file with one value per node.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Scalar(f64),
    File(PathBuf),
}

impl FromStr for Values {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<f64>() {
            Ok(v) => Values::Scalar(v),
            Err(_) => Values::File(PathBuf::from(s)),
        })
    }
}

/// Everything a model-driven command can be told. Unset fields fall back to
/// the config file, then to defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<String>,
    pub use_case: Option<String>,
    pub beta: Option<Values>,
    pub alpha1: Option<f64>,
    pub lambda: Option<Values>,
    pub stubborn: Option<Vec<usize>>,
    pub innate: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub horizon: Option<usize>,
    /// Experiment-only knobs.
    pub sigma: Option<f64>,
    pub stubborn_fraction: Option<f64>,
    pub grid: Option<Vec<f64>>,
    /// Directory that relative paths in this config are resolved against.
    #[serde(skip)]
    pub base: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = fjmm::experiments::DEFAULT_SEED;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path)
            .map_err(|e| CliError::Input(format!("cannot open config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// `self` wins wherever it is set.
    pub fn over(self, file: RunConfig) -> RunConfig {
        // values coming from the file keep the file's base directory
        let rebase = |v: Option<Values>| match v {
            Some(Values::File(p)) => Some(Values::File(resolve(file.base.as_deref(), &p))),
            other => other,
        };
        let graph = self.graph.or_else(|| {
            file.graph.as_ref().map(|g| {
                if g.parse::<GraphSpec>().is_ok() {
                    g.clone()
                } else {
                    resolve(file.base.as_deref(), Path::new(g)).display().to_string()
                }
            })
        });
        let innate = self.innate.or_else(|| {
            file.innate.as_ref().map(|s| {
                if s == "polarized" {
                    s.clone()
                } else {
                    resolve(file.base.as_deref(), Path::new(s)).display().to_string()
                }
            })
        });
        RunConfig {
            graph,
            use_case: self.use_case.or(file.use_case),
            beta: self.beta.or_else(|| rebase(file.beta.clone())),
            alpha1: self.alpha1.or(file.alpha1),
            lambda: self.lambda.or_else(|| rebase(file.lambda.clone())),
            stubborn: self.stubborn.or(file.stubborn),
            innate,
            seed: self.seed.or(file.seed),
            out: self
                .out
                .or_else(|| file.out.as_ref().map(|o| resolve(file.base.as_deref(), o))),
            tol: self.tol.or(file.tol),
            horizon: self.horizon.or(file.horizon),
            sigma: self.sigma.or(file.sigma),
            stubborn_fraction: self.stubborn_fraction.or(file.stubborn_fraction),
            grid: self.grid.or(file.grid),
            base: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn use_case(&self) -> Result<Option<UseCase>, CliError> {
        self.use_case
            .as_deref()
            .map(|s| s.parse::<UseCase>().map_err(|e| CliError::Input(e.to_string())))
            .transpose()
    }

    pub fn blend(&self) -> Result<Option<BlendCoefficients>, CliError> {
        self.alpha1
            .map(BlendCoefficients::from_alpha1)
            .transpose()
            .map_err(CliError::from)
    }

    pub fn build_graph(&self) -> Result<InfluenceGraph, CliError> {
        let g = self
            .graph
            .as_deref()
            .ok_or_else(|| CliError::Input("no graph given (use --graph)".into()))?;
        if let Ok(spec) = g.parse::<GraphSpec>() {
            return Ok(spec.build(self.seed())?);
        }
        let path = Path::new(g);
        if !path.is_file() {
            return Err(CliError::Input(format!(
                "`{g}` is neither a graph spec (barbell:K, cycle:N, complete:N, er:N:P, ws:N:K:P) nor an edge-list file"
            )));
        }
        let file = File::open(path).map_err(|e| CliError::Input(format!("{g}: {e}")))?;
        Ok(read_edge_list(BufReader::new(file))?)
    }

    pub fn build_model(&self) -> Result<FjmmModel, CliError> {
        let w = row_stochastic(&self.build_graph()?)?;
        let n = w.n();
        let lambda = match (&self.lambda, &self.stubborn) {
            (Some(_), Some(_)) => {
                return Err(CliError::Input("give either --lambda or --stubborn, not both".into()))
            }
            (None, None) => {
                return Err(CliError::Input("no susceptibility given (use --lambda or --stubborn)".into()))
            }
            (Some(v), None) => Susceptibility::new(per_node(v, n, "lambda")?)?,
            (None, Some(labels)) => {
                let set = labels
                    .iter()
                    .map(|&l| {
                        if l == 0 || l > n {
                            Err(CliError::Input(format!("stubborn node {l} outside 1..={n}")))
                        } else {
                            Ok(l - 1)
                        }
                    })
                    .collect::<Result<BTreeSet<_>, _>>()?;
                Susceptibility::with_stubborn(n, &set, 1.0)?
            }
        };
        let innate = match self.innate.as_deref().unwrap_or("polarized") {
            "polarized" => polarized(n),
            path => DVector::from_vec(per_node(&Values::File(path.into()), n, "innate")?),
        };
        let family = match self.use_case()? {
            None => LagMatrixFamily::single(&w),
            Some(uc) => {
                let beta = MemoryWeights::new(per_node(
                    self.beta.as_ref().unwrap_or(&Values::Scalar(0.0)),
                    n,
                    "beta",
                )?)?;
                build_family(uc, &w, &beta, self.blend()?)?
            }
        };
        Ok(FjmmModel::new(family, lambda, innate)?)
    }
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

fn per_node(v: &Values, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    match v {
        Values::Scalar(x) => Ok(vec![*x; n]),
        Values::File(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::Input(format!("{what} file {}: {e}", path.display())))?;
            let values = read_vector(BufReader::new(file))?;
            if values.len() != n {
                return Err(CliError::Input(format!(
                    "{what} file {} has {} values, graph has {n} nodes",
                    path.display(),
                    values.len()
                )));
            }
            Ok(values.iter().copied().collect())
        }
    }
}
