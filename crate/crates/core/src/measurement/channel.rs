use num_traits::Zero;

use super::Povm;
use crate::scalar::C;
use crate::tensor::{partial_trace_matrix, strides, DensityMatrix};
use crate::{Distribution, Error, Matrix, NumericPolicy, Result};

/// `tr_site[(op ⊗ I) x]`: applies `op` to one site of `x` and traces it out.
pub fn contract_site(x: &Matrix, dims: &[usize], site: usize, op: &Matrix) -> Matrix {
    let d = dims[site];
    let s = strides(dims)[site];
    let rem = x.rows() / d;
    let full = |r: usize, a: usize| (r / s) * d * s + a * s + r % s;
    let data = x.as_slice();
    let cols = x.cols();
    Matrix::from_fn(rem, rem, |r, rr| {
        let mut acc = C::zero();
        for a in 0..d {
            let row = full(r, a) * cols;
            for b in 0..d {
                let o = op[(b, a)];
                if o != C::zero() {
                    acc += o * data[row + full(rr, b)];
                }
            }
        }
        acc
    })
}

/// `(K ⊗ I) x (K ⊗ I)†` with `K` acting on one site.
pub fn conjugate_site(x: &Matrix, dims: &[usize], site: usize, k: &Matrix) -> Matrix {
    let d = dims[site];
    let s = strides(dims)[site];
    let dim = x.rows();
    let left = Matrix::from_fn(dim, dim, |r, c| {
        let a = r / s % d;
        let base = r - a * s;
        (0..d).fold(C::zero(), |acc, b| acc + k[(a, b)] * x[(base + b * s, c)])
    });
    Matrix::from_fn(dim, dim, |r, c| {
        let a = c / s % d;
        let base = c - a * s;
        (0..d).fold(C::zero(), |acc, b| acc + left[(r, base + b * s)] * k[(a, b)].conj())
    })
}

/// Non-selective Lüders measurement `Σ_x √M_x · √M_x` on one site; for
/// rank-one effects this is measure-and-prepare.
pub fn luders_site(x: &Matrix, dims: &[usize], site: usize, povm: &Povm) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for o in 0..povm.outcomes() {
        out = out.add(&conjugate_site(x, dims, site, povm.kraus(o)));
    }
    out
}

/// Visits `(outcome index, tr_measured[(M_{x_1} ⊗ … ⊗ I) x])` for every
/// outcome string on the `measured` sites; `measured[0]` is the most
/// significant digit of the index.
pub fn for_each_outcome(x: &Matrix, dims: &[usize], measured: &[usize], povm: &Povm, f: &mut impl FnMut(usize, &Matrix)) {
    fn go(x: &Matrix, dims: &[usize], measured: &[usize], povm: &Povm, prefix: usize, f: &mut impl FnMut(usize, &Matrix)) {
        let Some((&site, rest)) = measured.split_first() else {
            f(prefix, x);
            return;
        };
        let mut sub_dims = dims.to_vec();
        sub_dims.remove(site);
        let shifted: Vec<usize> = rest.iter().map(|&r| if r > site { r - 1 } else { r }).collect();
        for (o, m) in povm.effects().iter().enumerate() {
            let y = contract_site(x, dims, site, m);
            go(&y, &sub_dims, &shifted, povm, prefix * povm.outcomes() + o, f);
        }
    }
    go(x, dims, measured, povm, 0, f);
}

/// Outcome distribution of `povm^{⊗|sites|}` on the `sites` marginal of
/// `rho`; variable `k` of the result is the outcome on `sites[k]`.
pub fn measure_channel(povm: &Povm, rho: &DensityMatrix<f64>, sites: &[usize], policy: &NumericPolicy) -> Result<Distribution> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sites.len() || sorted.last().is_some_and(|&s| s >= rho.n_sites()) {
        return Err(Error::Invalid(format!("bad measured sites {sites:?}")));
    }
    if sites.iter().any(|&s| rho.dims()[s] != povm.d()) {
        return Err(Error::DimensionMismatch("POVM dimension differs from a measured site".into()));
    }
    let outcomes = povm.outcomes().checked_pow(sites.len() as u32).unwrap_or(usize::MAX);
    policy.check_entries(outcomes)?;
    let marginal = partial_trace_matrix(rho.matrix(), rho.dims(), &sorted);
    let dims = vec![povm.d(); sites.len()];
    let local: Vec<usize> = sites.iter().map(|s| sorted.binary_search(s).expect("present")).collect();
    let mut p = vec![0.0; outcomes];
    for_each_outcome(&marginal, &dims, &local, povm, &mut |idx, m| p[idx] = m[(0, 0)].re);
    Distribution::new(vec![povm.outcomes(); sites.len()], p)
}

/// Post-measurement state on the unmeasured sites after observing
/// `outcomes` on `measured`: returns `(probability, normalised state)`, or
/// `None` for a zero-probability string.
pub fn condition_on_outcomes(
    povm: &Povm,
    rho: &DensityMatrix<f64>,
    measured: &[usize],
    outcomes: &[usize],
) -> Result<Option<(f64, DensityMatrix<f64>)>> {
    if measured.len() != outcomes.len() {
        return Err(Error::DimensionMismatch("one outcome per measured site".into()));
    }
    let mut x = rho.matrix().clone();
    let mut dims = rho.dims().to_vec();
    let mut remaining: Vec<usize> = (0..rho.n_sites()).collect();
    for (&site, &o) in measured.iter().zip(outcomes) {
        let pos = remaining
            .iter()
            .position(|&s| s == site)
            .ok_or_else(|| Error::Invalid(format!("site {site} measured twice or out of range")))?;
        x = contract_site(&x, &dims, pos, povm.effect(o));
        dims.remove(pos);
        remaining.remove(pos);
    }
    let p = x.trace().re;
    if p <= 1e-300 {
        return Ok(None);
    }
    let state = DensityMatrix::new(dims, x.scale(1.0 / p).hermitize(), &NumericPolicy { psd_tol: 1e-8, trace_tol: 1e-8, ..NumericPolicy::default() })?;
    Ok(Some((p, state)))
}
