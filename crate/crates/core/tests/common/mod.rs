//! Seeded random models shared by the integration tests.
#![allow(dead_code)]

use fjmm::influence::{build_family, BlendCoefficients, MemoryWeights, UseCase};
use fjmm::{FjmmModel, StochasticMatrix, Susceptibility};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse random weights, row-normalized. Rows left empty get a self-loop.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    let p: f64 = rng.random_range(0.1..0.9);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(p) {
                m[(i, j)] = rng.random_range(0.05..1.0);
            }
        }
        if m.row(i).sum() == 0.0 {
            m[(i, i)] = 1.0;
        }
    }
    StochasticMatrix::normalized(m).unwrap()
}

pub struct RandomModel {
    pub model: FjmmModel,
    pub use_case: UseCase,
    pub w: StochasticMatrix,
}

/// `n <= max_n`, `λ_ii ∈ {0, 0.5, 1}`, any use case, random `β` (homogeneous
/// half of the time), random blend coefficients.
pub fn random_model(rng: &mut ChaCha8Rng, max_n: usize) -> RandomModel {
    let n = rng.random_range(2..=max_n);
    let w = random_stochastic(rng, n);
    let use_case = UseCase::ALL[rng.random_range(0..UseCase::ALL.len())];
    let beta = if rng.random_bool(0.5) {
        MemoryWeights::uniform(n, rng.random_range(0.0..=1.0)).unwrap()
    } else {
        MemoryWeights::new((0..n).map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap()
    };
    let blend = BlendCoefficients::from_alpha1(rng.random_range(0.0..=1.0)).unwrap();
    let family = build_family(use_case, &w, &beta, Some(blend)).unwrap();
    let lambda = Susceptibility::new(
        (0..n)
            .map(|_| [0.0, 0.5, 1.0][rng.random_range(0..3)])
            .collect(),
    )
    .unwrap();
    let s = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
    RandomModel {
        model: FjmmModel::new(family, lambda, s).unwrap(),
        use_case,
        w,
    }
}

/// Random history of `depth` vectors in `[0, 1]`, oldest first.
pub fn random_history(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Vec<DVector<f64>> {
    (0..depth)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0)))
        .collect()
}
