use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::scalar::{cr, Real, C};
use crate::{Error, NumericPolicy, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| cr(T::lit(rows[i][j])))
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = cr(v);
        }
        m
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[C<T>], v: &[C<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn projector(v: &[C<T>]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(C::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in axpy");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let brow = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matvec");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `⟨v| M |v⟩` for square `M`.
    pub fn expectation(&self, v: &[C<T>]) -> C<T> {
        let mv = self.matvec(v);
        v.iter().zip(&mv).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `Re tr(self† other)`
    pub fn real_inner(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermiticity to the given relative tolerance.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= herm_tol::<T>(tol) * T::one().max(self.max_abs())
    }

    pub fn hermitize(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// Kronecker product with the default entry cap.
    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other, &NumericPolicy::default()).expect("kron exceeds default dimension cap")
    }
}

/// Tolerance floor so `f32` matrices are not held to `f64` thresholds.
pub(crate) fn herm_tol<T: Real>(tol: f64) -> T {
    T::lit(tol).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product `a ⊗ b`; fails when the result would exceed the entry cap.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<ComplexMatrix<T>> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let entries = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c)).unwrap_or(usize::MAX);
    policy.check_entries(entries)?;
    let (rows, cols) = (a.rows * b.rows, a.cols * b.cols);
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s.is_zero() {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for (l, bv) in b.row(k).iter().enumerate() {
                    out.data[base + l] = s * bv;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of state vectors.
pub fn kron_vec<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Single-qubit Pauli matrices and a few fixed gates.
pub mod gates {
    use super::*;
    use crate::scalar::c;

    pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(T::zero(), -T::one());
        m[(1, 0)] = c(T::zero(), T::one());
        m
    }

    pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
        ComplexMatrix::diag(&[T::one(), -T::one()])
    }

    /// Swap operator on `C^d ⊗ C^d`.
    pub fn swap<T: Real>(d: usize) -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + j, j * d + i)] = C::one();
            }
        }
        m
    }

    /// Computational basis vector `|index⟩` in dimension `dim`.
    pub fn basis<T: Real>(dim: usize, index: usize) -> Vec<C<T>> {
        let mut v = vec![C::zero(); dim];
        v[index] = C::one();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_zz_is_diagonal_sign_pattern() {
        let zz = pauli_z::<f64>().kron(&pauli_z());
        assert_eq!(zz, ComplexMatrix::diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_xx_flips_both_bits() {
        let xx = pauli_x::<f64>().kron(&pauli_x());
        let out = xx.matvec(&basis(4, 0));
        assert_eq!(out, basis(4, 3));
    }

    #[test]
    fn kron_respects_entry_cap() {
        let policy = NumericPolicy {
            max_entries: 64,
            ..NumericPolicy::default()
        };
        let a = ComplexMatrix::<f64>::identity(4);
        let b = ComplexMatrix::<f64>::identity(4);
        assert!(matches!(kron(&a, &b, &policy), Err(Error::InstanceTooLarge { .. })));
        let small = ComplexMatrix::<f64>::identity(2);
        assert!(kron(&a, &small, &policy).is_ok());
    }

    #[test]
    fn swap_matches_definition() {
        let f = swap::<f64>(3);
        let v = kron_vec(&basis(3, 1), &basis(3, 2));
        assert_eq!(f.matvec(&v), kron_vec(&basis(3, 2), &basis(3, 1)));
    }

    #[test]
    fn works_in_single_precision() {
        let zz = pauli_z::<f32>().kron(&pauli_z());
        assert!(zz.is_hermitian(1e-12));
        assert_eq!(zz.trace().re, 0.0f32);
    }
}
