//! Influence graphs, the graph families used in the experiments, and the
//! row-stochastic influence matrices derived from them.
//!
//! Nodes are 0-indexed throughout the Rust API. File formats (edge lists,
//! JSON reports) use 1-indexed labels.
//!
//! An edge `(i, j)` means "i is influenced by j", so it becomes the entry
//! `w[(i, j)]` of the influence matrix.
//!
//! Random families draw from `ChaCha8Rng::seed_from_u64(seed)`, so a given
//! `(parameters, seed)` pair yields the same graph on every platform.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on row sums for [`StochasticMatrix`].
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Upper bound on Erdős–Rényi resampling rounds when isolated nodes appear.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 1000;

/// Name of the pseudorandom generator behind every seeded routine.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64";

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph {
    n: usize,
    directed: bool,
    edges: BTreeMap<(usize, usize), f64>,
}

impl InfluenceGraph {
    pub fn new(n: usize, directed: bool) -> Result<Self> {
        if n == 0 {
            return invalid("graph must have at least one node");
        }
        Ok(Self {
            n,
            directed,
            edges: BTreeMap::new(),
        })
    }

    /// Adds `i <- j` with the given positive weight. Undirected graphs also
    /// store the mirrored arc. Re-adding an edge overwrites its weight.
    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<()> {
        if i >= self.n || j >= self.n {
            return invalid(format!(
                "edge ({i}, {j}) has an endpoint outside 0..{}",
                self.n
            ));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return invalid(format!("edge ({i}, {j}) has non-positive weight {weight}"));
        }
        self.edges.insert((i, j), weight);
        if !self.directed {
            self.edges.insert((j, i), weight);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i, j))
    }

    /// Stored arcs `(i, j, weight)` in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn arc_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge count with each undirected pair counted once (self-loops once).
    pub fn edge_count(&self) -> usize {
        if self.directed {
            return self.edges.len();
        }
        self.edges.keys().filter(|(i, j)| i <= j).count()
    }

    pub fn neighbors(&self, i: usize) -> BTreeSet<usize> {
        self.edges
            .range((i, 0)..(i + 1, 0))
            .map(|(&(_, j), _)| j)
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.range((i, 0)..(i + 1, 0)).count()
    }
}

/// Nonnegative square matrix with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            let row = m.row(i);
            if let Some(j) = row.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Validation(format!(
                    "entry ({i}, {j}) = {} is not a nonnegative finite number",
                    m[(i, j)]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self(m))
    }

    /// Rescales every row of a nonnegative matrix to unit sum.
    pub fn normalized(mut m: DMatrix<f64>) -> Result<Self> {
        for i in 0..m.nrows() {
            let sum: f64 = m.row(i).iter().sum();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(Error::Normalization { node: i });
            }
            m.row_mut(i).iter_mut().for_each(|v| *v /= sum);
        }
        Self::new(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// 0/1 indicator of the positive entries of a weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryAdjacency(DMatrix<f64>);

impl BinaryAdjacency {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn is_symmetric(&self) -> bool {
        self.0 == self.0.transpose()
    }
}

/// Anything that carries a weighted adjacency: `m[(i, j)] > 0` is the arc `i -> j`.
pub trait WeightView {
    fn weights(&self) -> &DMatrix<f64>;
}

impl WeightView for DMatrix<f64> {
    fn weights(&self) -> &DMatrix<f64> {
        self
    }
}

impl WeightView for StochasticMatrix {
    fn weights(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl WeightView for BinaryAdjacency {
    fn weights(&self) -> &DMatrix<f64> {
        &self.0
    }
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two complete graphs on `k` nodes joined by the single edge `{k-1, k}`.
pub fn barbell(k: usize) -> Result<InfluenceGraph> {
    if k < 3 {
        return invalid(format!("barbell clique size must be >= 3, got {k}"));
    }
    let mut g = InfluenceGraph::new(2 * k, false)?;
    for offset in [0, k] {
        for i in 0..k {
            for j in (i + 1)..k {
                g.add_edge(offset + i, offset + j, 1.0)?;
            }
        }
    }
    g.add_edge(k - 1, k, 1.0)?;
    Ok(g)
}

pub fn cycle(n: usize) -> Result<InfluenceGraph> {
    if n < 3 {
        return invalid(format!("cycle needs n >= 3, got {n}"));
    }
    let mut g = InfluenceGraph::new(n, false)?;
    for i in 0..n {
        g.add_edge(i, (i + 1) % n, 1.0)?;
    }
    Ok(g)
}

pub fn complete(n: usize) -> Result<InfluenceGraph> {
    if n < 2 {
        return invalid(format!("complete graph needs n >= 2, got {n}"));
    }
    let mut g = InfluenceGraph::new(n, false)?;
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_edge(i, j, 1.0)?;
        }
    }
    Ok(g)
}

/// G(n, p) conditioned on having no isolated node: whole graphs are redrawn
/// from the same generator stream until every node has a neighbor.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<InfluenceGraph> {
    if n < 2 {
        return invalid(format!("Erdos-Renyi needs n >= 2, got {n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("edge probability must lie in [0, 1], got {p}"));
    }
    let mut rng = seeded(seed);
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let mut g = InfluenceGraph::new(n, false)?;
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    g.add_edge(i, j, 1.0)?;
                }
            }
        }
        if (0..n).all(|i| g.degree(i) > 0) {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailure {
        attempts: MAX_RESAMPLE_ATTEMPTS,
        reason: format!("every G({n}, {p}) sample had an isolated node"),
    })
}

/// Ring lattice where each node links to its `k/2` nearest neighbors per
/// side, then each lattice edge `(u, u+j)` is rewired to `(u, w)` with
/// probability `p_rewire`, `w` uniform among nodes not already adjacent to `u`.
pub fn watts_strogatz(n: usize, k: usize, p_rewire: f64, seed: u64) -> Result<InfluenceGraph> {
    if k % 2 != 0 || k == 0 || k >= n {
        return invalid(format!(
            "Watts-Strogatz needs an even 0 < k < n, got k={k}, n={n}"
        ));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return invalid(format!("rewiring probability must lie in [0, 1], got {p_rewire}"));
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = seeded(seed);
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || !rng.random_bool(p_rewire) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let mut w = rng.random_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.random_range(0..n);
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut g = InfluenceGraph::new(n, false)?;
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs.range(u + 1..) {
            g.add_edge(u, v, 1.0)?;
        }
    }
    Ok(g)
}

/// Ring-lattice neighbor count for a Watts–Strogatz graph whose degree is a
/// fraction of `n`: `round(fraction * n)` rounded down to even.
pub fn lattice_degree(n: usize, fraction: f64) -> usize {
    let k = (fraction * n as f64).round() as usize;
    k - k % 2
}

/// Normalizes each node's outgoing weights; with unit weights this is the
/// uniform `1/deg(i)` over neighbors.
pub fn row_stochastic(g: &InfluenceGraph) -> Result<StochasticMatrix> {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for (i, j, w) in g.arcs() {
        m[(i, j)] = w;
    }
    for i in 0..n {
        if g.degree(i) == 0 {
            return Err(Error::Normalization { node: i });
        }
    }
    StochasticMatrix::normalized(m)
}

pub fn binary_adjacency<M: WeightView + ?Sized>(w: &M) -> BinaryAdjacency {
    BinaryAdjacency(w.weights().map(|v| if v > 0.0 { 1.0 } else { 0.0 }))
}

/// All nodes with a directed walk into `targets` (targets included).
/// An empty target set yields an empty result.
pub fn reaches_set<M: WeightView + ?Sized>(
    w: &M,
    targets: &BTreeSet<usize>,
) -> Result<BTreeSet<usize>> {
    let m = w.weights();
    let n = m.nrows();
    if let Some(&t) = targets.iter().find(|&&t| t >= n) {
        return invalid(format!("target node {t} outside 0..{n}"));
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = targets.iter().copied().collect();
    for &t in targets {
        seen[t] = true;
    }
    // Walk arcs backwards: i reaches t if m[(i, t)] > 0.
    while let Some(t) = queue.pop_front() {
        for i in 0..n {
            if !seen[i] && m[(i, t)] > 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    Ok((0..n).filter(|&i| seen[i]).collect())
}

/// `targets` is non-empty and every node can walk into it.
pub fn globally_reachable<M: WeightView + ?Sized>(w: &M, targets: &BTreeSet<usize>) -> Result<bool> {
    if targets.is_empty() {
        return Ok(false);
    }
    Ok(reaches_set(w, targets)?.len() == w.weights().nrows())
}

/// Declarative description of a graph family instance.
///
/// Text form: `barbell:K`, `cycle:N`, `complete:N`, `er:N:P`, `ws:N:K:P`.
/// Random families take their seed separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    Barbell { k: usize },
    Cycle { n: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64 },
    WattsStrogatz { n: usize, k: usize, p_rewire: f64 },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<InfluenceGraph> {
        match *self {
            GraphSpec::Barbell { k } => barbell(k),
            GraphSpec::Cycle { n } => cycle(n),
            GraphSpec::Complete { n } => complete(n),
            GraphSpec::ErdosRenyi { n, p } => erdos_renyi(n, p, seed),
            GraphSpec::WattsStrogatz { n, k, p_rewire } => watts_strogatz(n, k, p_rewire, seed),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::ErdosRenyi { .. } | GraphSpec::WattsStrogatz { .. })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Barbell { k } => write!(f, "barbell:{k}"),
            GraphSpec::Cycle { n } => write!(f, "cycle:{n}"),
            GraphSpec::Complete { n } => write!(f, "complete:{n}"),
            GraphSpec::ErdosRenyi { n, p } => write!(f, "er:{n}:{p}"),
            GraphSpec::WattsStrogatz { n, k, p_rewire } => write!(f, "ws:{n}:{k}:{p_rewire}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let int = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("graph spec `{s}` is missing field {i}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("graph spec `{s}`: {e}")))
        };
        let real = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("graph spec `{s}` is missing field {i}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("graph spec `{s}`: {e}")))
        };
        let arity = |want: usize| -> Result<()> {
            if parts.len() != want {
                return Err(Error::Parse(format!(
                    "graph spec `{s}` expects {} parameter(s)",
                    want - 1
                )));
            }
            Ok(())
        };
        match parts[0] {
            "barbell" => arity(2).and_then(|_| Ok(GraphSpec::Barbell { k: int(1)? })),
            "cycle" => arity(2).and_then(|_| Ok(GraphSpec::Cycle { n: int(1)? })),
            "complete" => arity(2).and_then(|_| Ok(GraphSpec::Complete { n: int(1)? })),
            "er" | "erdos-renyi" => {
                arity(3)?;
                Ok(GraphSpec::ErdosRenyi { n: int(1)?, p: real(2)? })
            }
            "ws" | "watts-strogatz" => {
                arity(4)?;
                Ok(GraphSpec::WattsStrogatz {
                    n: int(1)?,
                    k: int(2)?,
                    p_rewire: real(3)?,
                })
            }
            other => Err(Error::Parse(format!("unknown graph family `{other}`"))),
        }
    }
}
