//! Spectral radii and stability certificates.
//!
//! The memory recursion is rewritten as a first-order system on the stacked
//! state `y(t) = [x(t-L+1); ...; x(t)]`, `y(t+1) = Ā_d y(t) + C̄`, whose
//! matrix for `L = 2` is
//!
//! ```text
//! Ā_d = [ 0      I     ]      C̄ = [ 0         ]
//!       [ Λ W2   Λ W1  ]           [ (I - Λ) s ]
//! ```
//!
//! `ρ(Ā_d)` is the asymptotic convergence rate. Stability is decided by
//! three equivalent criteria: `ρ(Ā) < 1`, `ρ(Ā_d) < 1`, and global
//! reachability of the anchored agents `{i : λ_ii < 1}` in the union graph of
//! the lag matrices. The graph criterion is exact and decides the verdict.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Serialize, Serializer};

use crate::dynamics::{scale_rows, FjmmModel, Susceptibility};
use crate::error::{invalid, Error, Result};
use crate::influence::MemoryWeights;
use crate::netgen::{globally_reachable, StochasticMatrix};

/// Radii within this distance of 1 are treated as numerically undecided.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusOptions {
    /// Width of the certified bracket at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RadiusOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Collatz–Wielandt bounds `lower <= ρ <= upper` and a point estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusBracket {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub iterations: usize,
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return invalid(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()));
    }
    if let Some(k) = m.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        let (i, j) = (k % m.nrows(), k / m.nrows());
        return invalid(format!("entry ({i}, {j}) = {} is not nonnegative", m[(i, j)]));
    }
    Ok(())
}

/// Strongly connected components of the pattern `m[(i, j)] > 0`.
fn components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut idx: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect()
}

/// Power iteration on `B + I` for an irreducible block `B`. The shift makes
/// `B + I` primitive, so the Collatz–Wielandt bounds close on `ρ(B) + 1`.
fn irreducible_radius(b: &DMatrix<f64>, opts: RadiusOptions) -> std::result::Result<f64, RadiusBracket> {
    let n = b.nrows();
    if n == 1 {
        return Ok(b[(0, 0)]);
    }
    let mut x = DVector::from_element(n, 1.0);
    let mut y = DVector::zeros(n);
    let mut best = RadiusBracket {
        lower: 0.0,
        upper: f64::INFINITY,
        estimate: f64::NAN,
        iterations: 0,
    };
    for k in 1..=opts.max_iter {
        y.copy_from(&x);
        y.gemv(1.0, b, &x, 1.0);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for (yi, xi) in y.iter().zip(x.iter()) {
            if *xi > 0.0 {
                let r = yi / xi;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let scale = y.amax();
        best = RadiusBracket {
            lower: best.lower.max(lo - 1.0),
            upper: best.upper.min(hi - 1.0),
            estimate: scale - 1.0,
            iterations: k,
        };
        if best.upper - best.lower <= opts.tol {
            return Ok(0.5 * (best.lower + best.upper));
        }
        x.copy_from(&y);
        x /= scale;
    }
    Err(best)
}

/// Spectral radius of a nonnegative matrix by shifted power iteration.
///
/// The matrix is split into strongly connected components; `ρ` is the
/// largest radius among the diagonal blocks, each found by power iteration
/// on `block + I` from the all-ones vector until the Collatz–Wielandt
/// bracket is narrower than `opts.tol`.
pub fn spectral_radius(m: &DMatrix<f64>, opts: RadiusOptions) -> Result<f64> {
    check_nonnegative(m)?;
    spectral_radius_bracketed(m, opts).map_err(|b| Error::NotConverged {
        iterations: b.iterations,
        lower: b.lower,
        upper: b.upper,
        estimate: b.estimate,
    })
}

fn spectral_radius_bracketed(
    m: &DMatrix<f64>,
    opts: RadiusOptions,
) -> std::result::Result<f64, RadiusBracket> {
    let mut rho = 0.0_f64;
    let mut failed: Option<RadiusBracket> = None;
    for comp in components(m) {
        let block = m.select_rows(&comp).select_columns(&comp);
        if comp.len() > 1 && block.iter().all(|&v| v == 0.0) {
            continue;
        }
        match irreducible_radius(&block, opts) {
            Ok(r) => rho = rho.max(r),
            Err(b) => {
                failed = Some(match failed {
                    None => b,
                    Some(f) => RadiusBracket {
                        lower: f.lower.max(b.lower),
                        upper: f.upper.max(b.upper),
                        estimate: f.estimate.max(b.estimate),
                        iterations: f.iterations.max(b.iterations),
                    },
                })
            }
        }
    }
    match failed {
        None => Ok(rho),
        Some(b) if b.upper <= rho => Ok(rho),
        Some(b) => Err(RadiusBracket {
            lower: b.lower.max(rho),
            upper: b.upper,
            estimate: b.estimate.max(rho),
            iterations: b.iterations,
        }),
    }
}

/// Largest eigenvalue modulus from a dense real Schur decomposition.
///
/// QR iteration can stall when several eigenvalues share the top modulus
/// (cyclic patterns), so on failure the decomposition is retried on
/// `m + cI` and the shift removed from the eigenvalues afterwards.
pub fn spectral_radius_dense(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return invalid("matrix must be square");
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for shift in [0.0, 0.37, -0.61, 1.13] {
        let shifted = m + DMatrix::<f64>::identity(n, n) * (shift * scale);
        if let Some(schur) = nalgebra::linalg::Schur::try_new(shifted, f64::EPSILON, 10_000) {
            return Ok(schur
                .complex_eigenvalues()
                .iter()
                .map(|z| (z - shift * scale).norm())
                .fold(0.0, f64::max));
        }
    }
    Err(Error::NotConverged {
        iterations: 10_000,
        lower: 0.0,
        upper: f64::INFINITY,
        estimate: f64::NAN,
    })
}

/// [`spectral_radius`] with a work budget scaled to the matrix size; if the
/// bracket has not closed by then, a dense eigen-decomposition decides, and
/// its answer must fall inside the bracket reached so far.
pub fn radius(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    check_nonnegative(m)?;
    let n = m.nrows().max(1);
    let budget = (2.0e8 / (n * n) as f64) as usize;
    let opts = RadiusOptions {
        tol,
        max_iter: budget.clamp(2_000, 100_000),
    };
    match spectral_radius_bracketed(m, opts) {
        Ok(r) => Ok(r),
        Err(b) => {
            let dense = spectral_radius_dense(m)?;
            let slack = 1e-8;
            if dense >= b.lower - slack && dense <= b.upper + slack {
                Ok(dense)
            } else {
                Err(Error::NotConverged {
                    iterations: b.iterations,
                    lower: b.lower,
                    upper: b.upper,
                    estimate: dense,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    n: usize,
    depth: usize,
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AugmentedSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `C̄ = [0; ...; 0; (I - Λ) s]`.
    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Stacks `x(t-L+1), ..., x(t)` into `y(t)`.
    pub fn stack(&self, newest_last: &[DVector<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.n * self.depth,
            newest_last.iter().flat_map(|x| x.iter().copied()),
        )
    }

    pub fn advance(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.matrix * y + &self.offset
    }
}

/// Companion stacking of the lag matrices: the first `L-1` block rows shift
/// the history, the last holds `(Λ WL, ..., Λ W1)`.
pub fn augmented(model: &FjmmModel) -> AugmentedSystem {
    let n = model.n();
    let depth = model.depth();
    let dim = n * depth;
    let mut matrix = DMatrix::zeros(dim, dim);
    for r in 0..depth - 1 {
        matrix
            .view_mut((r * n, (r + 1) * n), (n, n))
            .fill_with_identity();
    }
    let lambda = model.susceptibility().as_slice();
    for c in 0..depth {
        let lag = depth - c;
        let block = scale_rows(model.family().lag(lag).clone(), lambda);
        matrix
            .view_mut(((depth - 1) * n, c * n), (n, n))
            .copy_from(&block);
    }
    let mut offset = DVector::zeros(dim);
    offset.rows_mut((depth - 1) * n, n).copy_from(&model.anchor());
    AugmentedSystem {
        n,
        depth,
        matrix,
        offset,
    }
}

/// `{i : λ_ii < 1}` is non-empty and globally reachable in the union graph
/// of the lag matrices.
pub fn graph_criterion(model: &FjmmModel) -> Result<bool> {
    globally_reachable(&model.family().sum(), &model.susceptibility().stubborn_set())
}

fn twelve_digits<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(*v);
    s.serialize_f64(rounded)
}

fn one_based<S: Serializer>(set: &BTreeSet<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(set.iter().map(|i| i + 1))
}

/// All three stability criteria side by side. In JSON, node labels are
/// 1-based and radii carry 12 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(serialize_with = "twelve_digits")]
    pub rho_comparison: f64,
    #[serde(serialize_with = "twelve_digits")]
    pub rho_augmented: f64,
    #[serde(serialize_with = "one_based")]
    pub stubborn_set: BTreeSet<usize>,
    pub globally_reachable: bool,
    pub stable: bool,
    pub criteria_agree: bool,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn numeric_verdict(rho: f64) -> Option<bool> {
    ((rho - 1.0).abs() > MARGINAL_BAND).then_some(rho < 1.0)
}

pub fn stability_report(model: &FjmmModel) -> Result<StabilityReport> {
    let tol = 1e-12;
    let rho_comparison = radius(&model.comparison_matrix(), tol)?;
    let rho_augmented = radius(augmented(model).matrix(), tol)?;
    let stubborn_set = model.susceptibility().stubborn_set();
    let reachable = graph_criterion(model)?;
    let comparison_verdict = numeric_verdict(rho_comparison);
    let augmented_verdict = numeric_verdict(rho_augmented);
    let criteria_agree = [comparison_verdict, augmented_verdict]
        .into_iter()
        .flatten()
        .all(|v| v == reachable);
    let stable = if model.depth() <= 2 {
        reachable
    } else {
        // beyond two lags the union-graph test is advisory
        augmented_verdict.unwrap_or(reachable)
    };
    Ok(StabilityReport {
        rho_comparison,
        rho_augmented,
        stubborn_set,
        globally_reachable: reachable,
        stable,
        criteria_agree,
    })
}

/// `ΛW` or `ΛW~` being Schur stable is enough for the two-lag model built
/// from them with interior memory weights. Schur stability of `ΛM` for a
/// stochastic `M` is decided exactly by reachability of the anchored agents
/// in `G[M]`.
pub fn single_matrix_sufficient(
    w: &StochasticMatrix,
    w_tilde: &StochasticMatrix,
    lambda: &Susceptibility,
    beta: &MemoryWeights,
) -> Result<bool> {
    if let Some((i, b)) = beta
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, b)| !(**b > 0.0 && **b < 1.0))
    {
        return invalid(format!("beta[{i}] = {b} must lie strictly inside (0, 1)"));
    }
    let anchored = lambda.stubborn_set();
    Ok(globally_reachable(w, &anchored)? || globally_reachable(w_tilde, &anchored)?)
}

/// Convergence rate of the two-lag model with `Λ = σI` and `β = β₀ 1`, valid
/// for `W~ = W²` and for `W~ = α₁W + α₂I`:
/// `(σ(1-β₀) + sqrt(σ²(1-β₀)² + 4σβ₀)) / 2`.
pub fn closed_form_rho_homogeneous(sigma: f64, beta0: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return invalid(format!("sigma must lie in (0, 1), got {sigma}"));
    }
    if !(beta0 > 0.0 && beta0 < 1.0) {
        return invalid(format!("beta0 must lie in (0, 1), got {beta0}"));
    }
    let a = sigma * (1.0 - beta0);
    Ok(0.5 * (a + (a * a + 4.0 * sigma * beta0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateComparison {
    pub rho_augmented: f64,
    pub rho_comparison: f64,
    pub holds: bool,
}

/// Memory never speeds convergence: checks `ρ(Ā_d) >= ρ(Ā) - 1e-12`.
pub fn memory_slowdown_check(model: &FjmmModel) -> Result<RateComparison> {
    if model.depth() != 2 {
        return invalid(format!(
            "rate comparison is defined for two lags, model has {}",
            model.depth()
        ));
    }
    let tol = 1e-14;
    let rho_augmented = radius(augmented(model).matrix(), tol)?;
    let rho_comparison = radius(&model.comparison_matrix(), tol)?;
    Ok(RateComparison {
        rho_augmented,
        rho_comparison,
        holds: rho_augmented >= rho_comparison - 1e-12,
    })
}

/// `ρ(σŴ)`, which equals `σ` for every stochastic `Ŵ`.
pub fn homogeneous_radius(sigma: f64, w_hat: &StochasticMatrix) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma) {
        return invalid(format!("sigma must lie in [0, 1], got {sigma}"));
    }
    spectral_radius(&(w_hat.matrix() * sigma), RadiusOptions { tol: 1e-14, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::{use_case_pair, LagMatrixFamily, UseCase};
    use crate::netgen::{barbell, cycle, row_stochastic};

    fn rho(m: &DMatrix<f64>) -> f64 {
        spectral_radius(m, RadiusOptions::default()).unwrap()
    }

    #[test]
    fn identity_and_stochastic_radii() {
        assert_eq!(rho(&DMatrix::identity(5, 5)), 1.0);
        let w = row_stochastic(&barbell(4).unwrap()).unwrap();
        assert!((rho(w.matrix()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn period_two_swap_converges() {
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((rho(&swap) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(spectral_radius(&DMatrix::zeros(2, 3), RadiusOptions::default()).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(
            spectral_radius(&neg, RadiusOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn non_convergence_reports_bracket() {
        // weakly coupled blocks with distinct row sums
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 1e-6, 0.1]);
        match spectral_radius(&m, RadiusOptions { tol: 1e-15, max_iter: 3 }) {
            Err(Error::NotConverged { lower, upper, iterations, .. }) => {
                assert_eq!(iterations, 3);
                let exact = rho(&m);
                assert!(lower <= exact + 1e-12 && upper >= exact - 1e-12 && upper - lower > 1e-15);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn reducible_matrix_takes_the_largest_block() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[0.2, 0.5, 0.0, 0.0, 0.7, 0.0, 0.3, 0.0, 0.0],
        );
        assert!((rho(&m) - 0.7).abs() < 1e-12);
        assert_eq!(rho(&DMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn single_lag_augmented_is_scaled_matrix() {
        let w = row_stochastic(&barbell(3).unwrap()).unwrap();
        let lambda = Susceptibility::new(vec![0.5, 1.0, 0.0, 0.2, 1.0, 0.9]).unwrap();
        let m = FjmmModel::classical(&w, lambda.clone(), DVector::zeros(6)).unwrap();
        assert_eq!(augmented(&m).matrix(), &(lambda.diag() * w.matrix()));
    }

    #[test]
    fn pure_delay_augmented_has_unit_radius() {
        let w = row_stochastic(&cycle(5).unwrap()).unwrap();
        let family = LagMatrixFamily::new(vec![DMatrix::zeros(5, 5), w.matrix().clone()]).unwrap();
        let m = FjmmModel::new(family, Susceptibility::uniform(5, 1.0).unwrap(), DVector::zeros(5)).unwrap();
        let a = augmented(&m);
        let mut want = DMatrix::zeros(10, 10);
        want.view_mut((0, 5), (5, 5)).fill_with_identity();
        want.view_mut((5, 0), (5, 5)).copy_from(w.matrix());
        assert_eq!(a.matrix(), &want);
        assert!((rho(a.matrix()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn augmented_advance_matches_step() {
        let w = row_stochastic(&barbell(3).unwrap()).unwrap();
        let family = use_case_pair(UseCase::TwoHop, &w, &MemoryWeights::uniform(6, 0.8).unwrap(), None).unwrap();
        let m = FjmmModel::new(
            family,
            Susceptibility::new(vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0]).unwrap(),
            DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
        )
        .unwrap();
        let a = augmented(&m);
        assert_eq!(a.matrix().nrows(), 12);
        let older = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let newer = DVector::from_vec(vec![0.6, 0.5, 0.4, 0.3, 0.2, 0.1]);
        let y = a.advance(&a.stack(&[older.clone(), newer.clone()]));
        let x_next = crate::dynamics::step(&m, &[newer.clone(), older]).unwrap();
        assert!((y.rows(0, 6) - &newer).amax() == 0.0);
        assert!((y.rows(6, 6) - x_next).amax() < 1e-15);
        assert!(rho(a.matrix()) < 1.0);
    }

    #[test]
    fn closed_form_limits() {
        let v = closed_form_rho_homogeneous(0.6, 0.5).unwrap();
        assert!((v - (0.3 + (0.09f64 + 1.2).sqrt()) / 2.0).abs() < 1e-15);
        assert!((closed_form_rho_homogeneous(0.6, 1e-12).unwrap() - 0.6).abs() < 1e-9);
        assert!((closed_form_rho_homogeneous(0.6, 1.0 - 1e-12).unwrap() - 0.6f64.sqrt()).abs() < 1e-9);
        assert!(closed_form_rho_homogeneous(0.0, 0.5).is_err());
        assert!(closed_form_rho_homogeneous(0.5, 1.0).is_err());
        for s in [0.1, 0.5, 0.9] {
            for b in [0.1, 0.5, 0.9] {
                let r = closed_form_rho_homogeneous(s, b).unwrap();
                assert!(r > s && r < 1.0);
            }
        }
    }

    #[test]
    fn report_json_uses_one_based_labels() {
        let w = row_stochastic(&barbell(3).unwrap()).unwrap();
        let m = FjmmModel::classical(
            &w,
            Susceptibility::new(vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0]).unwrap(),
            DVector::zeros(6),
        )
        .unwrap();
        let r = stability_report(&m).unwrap();
        assert!(r.stable && r.criteria_agree);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["stubborn_set"], serde_json::json!([3, 4]));
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys.len(),
            6,
            "unexpected fields {keys:?}"
        );
    }

    #[test]
    fn memory_slowdown_needs_two_lags() {
        let w = row_stochastic(&barbell(3).unwrap()).unwrap();
        let m = FjmmModel::classical(&w, Susceptibility::uniform(6, 0.5).unwrap(), DVector::zeros(6)).unwrap();
        assert!(memory_slowdown_check(&m).is_err());
    }

    #[test]
    fn interior_beta_required_for_sufficiency_test() {
        let w = row_stochastic(&barbell(3).unwrap()).unwrap();
        let lambda = Susceptibility::uniform(6, 0.5).unwrap();
        assert!(single_matrix_sufficient(&w, &w, &lambda, &MemoryWeights::uniform(6, 1.0).unwrap()).is_err());
        assert!(single_matrix_sufficient(&w, &w, &lambda, &MemoryWeights::uniform(6, 0.4).unwrap()).unwrap());
    }
}
