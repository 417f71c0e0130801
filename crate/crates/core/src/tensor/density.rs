use num_traits::Zero;

use crate::scalar::{cr, Real, C};
use crate::tensor::eig::hermitian_eig;
use crate::tensor::matrix::{herm_tol, kron, kron_vec, ComplexMatrix};
use crate::{Error, NumericPolicy, Result};

/// Hermitian, PSD, unit-trace operator on a register of sites with the given
/// local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dims: Vec<usize>,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates the density-matrix invariants.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix<T>, policy: &NumericPolicy) -> Result<Self> {
        let total: usize = dims.iter().product();
        if matrix.rows() != total || matrix.cols() != total {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need a {total}x{total} matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(policy.hermitian_tol.max(1e-10)) {
            return Err(Error::Contract("density matrix is not Hermitian".into()));
        }
        let tr = matrix.trace().re;
        if (tr - T::one()).abs() > herm_tol::<T>(policy.trace_tol) {
            return Err(Error::Contract(format!("density matrix trace {tr} != 1")));
        }
        let e = hermitian_eig(&matrix, policy)?;
        if e.values[0] < -herm_tol::<T>(policy.psd_tol) {
            return Err(Error::Contract(format!("density matrix has eigenvalue {}", e.values[0])));
        }
        Ok(Self { dims, matrix })
    }

    pub fn from_pure(dims: Vec<usize>, psi: &[C<T>]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if psi.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "state vector of length {} for dims {dims:?}",
                psi.len()
            )));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::Invalid("zero state vector".into()));
        }
        let v: Vec<C<T>> = psi.iter().map(|z| z / norm).collect();
        Ok(Self {
            dims,
            matrix: ComplexMatrix::projector(&v),
        })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let total: usize = dims.iter().product();
        let w = T::one() / T::from_usize(total).unwrap();
        let matrix = ComplexMatrix::identity(total).scale(w);
        Self { dims, matrix }
    }

    /// Tensor product of single-register states, in order.
    pub fn product(parts: &[DensityMatrix<T>], policy: &NumericPolicy) -> Result<Self> {
        let mut dims = Vec::new();
        let mut m = ComplexMatrix::identity(1);
        for p in parts {
            dims.extend_from_slice(&p.dims);
            m = kron(&m, &p.matrix, policy)?;
        }
        Ok(Self { dims, matrix: m })
    }

    /// Product of pure states, one per register.
    pub fn product_pure(vectors: &[Vec<C<T>>]) -> Self {
        let mut psi = vec![cr(T::one())];
        let mut dims = Vec::with_capacity(vectors.len());
        for v in vectors {
            dims.push(v.len());
            psi = kron_vec(&psi, v);
        }
        Self::from_pure(dims, &psi).expect("unit product vector")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    /// Same operator regrouped into different site dimensions.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != self.dim() {
            return Err(Error::DimensionMismatch(format!("cannot regroup {} into {dims:?}", self.dim())));
        }
        Ok(Self { dims, matrix: self.matrix })
    }

    /// `tr(ρ O)`
    pub fn expectation(&self, op: &ComplexMatrix<T>) -> T {
        let n = self.dim();
        let mut s = C::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + self.matrix[(i, j)] * op[(j, i)];
            }
        }
        s.re
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Self {
        partial_trace(self, keep)
    }
}

/// Row-major strides of a register.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Marginal on the `keep` sites (ascending site order). An empty `keep`
/// yields the 1×1 state `[1]`.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> DensityMatrix<T> {
    let matrix = partial_trace_matrix(rho.matrix(), rho.dims(), keep);
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let dims = kept.iter().map(|&s| rho.dims[s]).collect();
    DensityMatrix { dims, matrix }
}

/// Partial trace of an arbitrary operator on a register.
pub fn partial_trace_matrix<T: Real>(m: &ComplexMatrix<T>, dims: &[usize], keep: &[usize]) -> ComplexMatrix<T> {
    let n = dims.len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    assert!(kept.iter().all(|&s| s < n), "partial trace site out of range");
    if kept.len() == n {
        return m.clone();
    }
    let traced: Vec<usize> = (0..n).filter(|s| !kept.contains(s)).collect();
    let st = strides(dims);
    let kdim: usize = kept.iter().map(|&s| dims[s]).product();
    let tdim: usize = traced.iter().map(|&s| dims[s]).product();
    let offsets = |sites: &[usize], count: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(count);
        let mut digits = vec![0usize; sites.len()];
        for _ in 0..count {
            out.push(sites.iter().zip(&digits).map(|(&s, &d)| d * st[s]).sum());
            for pos in (0..sites.len()).rev() {
                digits[pos] += 1;
                if digits[pos] < dims[sites[pos]] {
                    break;
                }
                digits[pos] = 0;
            }
        }
        out
    };
    let koff = offsets(&kept, kdim);
    let toff = offsets(&traced, tdim);
    let cols = m.cols();
    let data = m.as_slice();
    ComplexMatrix::from_fn(kdim, kdim, |a, b| {
        let (ra, rb) = (koff[a], koff[b]);
        toff.iter().fold(C::zero(), |acc, &t| acc + data[(ra + t) * cols + rb + t])
    })
}

/// Projection onto density matrices: Hermitise, clip negative eigenvalues,
/// renormalise. A matrix with no positive part maps to the maximally mixed
/// state.
pub fn nearest_density_matrix<T: Real>(m: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<DensityMatrix<T>> {
    if !m.is_square() {
        return Err(Error::Contract("nearest density matrix needs a square matrix".into()));
    }
    let n = m.rows();
    let h = m.hermitize();
    let e = hermitian_eig(&h, policy)?;
    let total: T = e.values.iter().map(|&v| v.max(T::zero())).sum();
    if total <= T::epsilon() * T::from_usize(n).unwrap() {
        return Ok(DensityMatrix::maximally_mixed(vec![n]));
    }
    let matrix = e.reconstruct_with(|v| v.max(T::zero()) / total).hermitize();
    Ok(DensityMatrix {
        dims: vec![n],
        matrix,
    })
}

/// Trace distance `‖ρ − σ‖₁` between two states of equal dimension.
pub fn trace_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<T> {
    crate::tensor::eig::trace_norm(&a.sub(b), policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use crate::tensor::matrix::gates::basis;

    fn bell() -> DensityMatrix<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(vec![2, 2], &[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let m = bell().partial_trace(&[1]);
        assert!(m.matrix().sub(DensityMatrix::maximally_mixed(vec![2]).matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn product_marginals() {
        let p = NumericPolicy::default();
        let a = DensityMatrix::<f64>::from_pure(vec![2], &[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = DensityMatrix::<f64>::maximally_mixed(vec![3]);
        let ab = DensityMatrix::product(&[a.clone(), b.clone()], &p).unwrap();
        assert!(ab.partial_trace(&[0]).matrix().sub(a.matrix()).max_abs() < 1e-15);
        assert!(ab.partial_trace(&[1]).matrix().sub(b.matrix()).max_abs() < 1e-15);
        assert_eq!(ab.partial_trace(&[]).matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(ab.partial_trace(&[0, 1]), ab);
    }

    #[test]
    fn ghz_marginal_on_two_sites() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![c(0.0, 0.0); 8];
        psi[0] = c(s, 0.0);
        psi[7] = c(s, 0.0);
        let ghz = DensityMatrix::from_pure(vec![2, 2, 2], &psi).unwrap();
        // Direct computation: Σ_t ⟨a t|ψ⟩⟨ψ|b t⟩ leaves ½(|00⟩⟨00| + |11⟩⟨11|).
        let expected = ComplexMatrix::diag(&[0.5, 0.0, 0.0, 0.5]);
        for keep in [[0, 1], [1, 2], [0, 2]] {
            assert!(ghz.partial_trace(&keep).matrix().sub(&expected).max_abs() < 1e-15);
        }
    }

    #[test]
    fn nearest_density_fixed_point_and_clipping() {
        let p = NumericPolicy::default();
        let rho = bell();
        let out = nearest_density_matrix(rho.matrix(), &p).unwrap();
        assert!(out.matrix().sub(rho.matrix()).max_abs() < 1e-12);
        let clipped = nearest_density_matrix(&ComplexMatrix::<f64>::diag(&[1.5, -0.5]), &p).unwrap();
        assert!(clipped.matrix().sub(&ComplexMatrix::diag(&[1.0, 0.0])).max_abs() < 1e-12);
        let zero = nearest_density_matrix(&ComplexMatrix::<f64>::zeros(2, 2), &p).unwrap();
        assert_eq!(zero, DensityMatrix::maximally_mixed(vec![2]));
    }

    #[test]
    fn validation_rejects_bad_states() {
        let p = NumericPolicy::default();
        assert!(DensityMatrix::new(vec![2], ComplexMatrix::<f64>::diag(&[1.5, -0.5]), &p).is_err());
        assert!(DensityMatrix::new(vec![2], ComplexMatrix::<f64>::diag(&[0.5, 0.6]), &p).is_err());
        assert!(DensityMatrix::new(vec![3], ComplexMatrix::<f64>::diag(&[0.5, 0.5]), &p).is_err());
        assert!(DensityMatrix::new(vec![2], ComplexMatrix::projector(&basis::<f64>(2, 1)), &p).is_ok());
    }
}
