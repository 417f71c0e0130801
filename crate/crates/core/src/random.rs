//! Seeded random states, operators and distributions.

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

use crate::rng::Rng;
use crate::scalar::C;
use crate::{Density, Distribution, Matrix};

fn gaussian(rng: &mut Rng) -> C<f64> {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector in `ℂ^dim`.
pub fn haar_vector(dim: usize, rng: &mut Rng) -> Vec<C<f64>> {
    let v: Vec<C<f64>> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure(dims: &[usize], rng: &mut Rng) -> Density {
    let dim = dims.iter().product();
    Density::from_pure(dims.to_vec(), &haar_vector(dim, rng)).expect("unit vector")
}

/// Ginibre-induced mixed state `G G† / tr(G G†)` of the given rank.
pub fn random_mixed(dims: &[usize], rank: usize, rng: &mut Rng) -> Density {
    let dim: usize = dims.iter().product();
    let g = Matrix::from_fn(dim, rank.max(1), |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint()).hermitize();
    let tr = w.trace().re;
    crate::tensor::nearest_density_matrix(&w.scale(1.0 / tr), &crate::NumericPolicy::default())
        .expect("Ginibre state")
        .with_dims(dims.to_vec())
        .expect("dims match")
}

/// GUE matrix `(G + G†)/2`.
pub fn gue(dim: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(dim, dim, |_, _| gaussian(rng)).hermitize()
}

/// GUE matrix projected onto the traceless subspace, Frobenius norm one.
pub fn traceless_hermitian(dim: usize, rng: &mut Rng) -> Matrix {
    let mut m = gue(dim, rng);
    let shift = m.trace().re / dim as f64;
    for i in 0..dim {
        m[(i, i)] -= C::new(shift, 0.0);
    }
    let f = m.frobenius_norm();
    m.scale(1.0 / f)
}

/// Uniform (flat Dirichlet) random distribution.
pub fn random_distribution(sizes: &[usize], rng: &mut Rng) -> Distribution {
    let len: usize = sizes.iter().product();
    let w: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    Distribution::from_weights(sizes.to_vec(), w).expect("positive weights")
}

/// Permutation-symmetric random distribution on `Σⁿ`: flat Dirichlet weights
/// on types, spread uniformly over the strings of each type.
pub fn random_symmetric_distribution(n: usize, alphabet: usize, rng: &mut Rng) -> Distribution {
    let len = alphabet.pow(n as u32);
    let type_of = |mut idx: usize| {
        let mut counts = vec![0usize; alphabet];
        for _ in 0..n {
            counts[idx % alphabet] += 1;
            idx /= alphabet;
        }
        counts
    };
    let mut types: std::collections::BTreeMap<Vec<usize>, (f64, usize)> = Default::default();
    for idx in 0..len {
        types.entry(type_of(idx)).or_insert((0.0, 0)).1 += 1;
    }
    for v in types.values_mut() {
        v.0 = rng.sample::<f64, _>(Exp1);
    }
    let w: Vec<f64> = (0..len)
        .map(|idx| {
            let (weight, count) = types[&type_of(idx)];
            weight / count as f64
        })
        .collect();
    Distribution::from_weights(vec![alphabet; n], w).expect("positive weights")
}
