use super::Povm;
use crate::scalar::C;
use crate::tensor::{hermitian_eig, nearest_density_matrix, DensityMatrix};
use crate::{Error, Matrix, NumericPolicy, Result};

/// Orthonormal Hermitian basis of `d×d` matrices under `⟨A, B⟩ = tr(A B)`.
pub fn hermitian_basis(d: usize) -> Vec<Matrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = Matrix::zeros(d, d);
        m[(j, j)] = C::new(1.0, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut re = Matrix::zeros(d, d);
            re[(j, k)] = C::new(s, 0.0);
            re[(k, j)] = C::new(s, 0.0);
            out.push(re);
            let mut im = Matrix::zeros(d, d);
            im[(j, k)] = C::new(0.0, s);
            im[(k, j)] = C::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Least-squares inverse of `X ↦ (tr M_x X)_x` on Hermitian matrices.
#[derive(Debug, Clone)]
pub struct ReconstructionMap {
    d: usize,
    basis: Vec<Matrix>,
    /// `(AᵀA)⁻¹Aᵀ`, one row per basis element.
    pinv: Vec<Vec<f64>>,
    condition_number: f64,
}

impl ReconstructionMap {
    /// Fails with [`Error::NotInformationallyComplete`] when the frame
    /// operator is singular (eigenvalue ratio below 1e-12).
    pub fn new(povm: &Povm, policy: &NumericPolicy) -> Result<Self> {
        let d = povm.d();
        let basis = hermitian_basis(d);
        let dd = basis.len();
        let a: Vec<Vec<f64>> = povm.effects().iter().map(|m| basis.iter().map(|b| m.real_inner(b)).collect()).collect();
        let gram = Matrix::from_fn(dd, dd, |i, j| C::new(a.iter().map(|row| row[i] * row[j]).sum(), 0.0));
        let e = hermitian_eig(&gram, policy)?;
        let (lo, hi) = (e.values[0], e.values[dd - 1]);
        if hi <= 0.0 || lo / hi < 1e-12 {
            let rank = e.values.iter().filter(|&&v| v > 1e-12 * hi.max(1e-300)).count();
            return Err(Error::NotInformationallyComplete { rank, required: dd, smallest: lo });
        }
        let inv = e.reconstruct_with(|v| 1.0 / v);
        let pinv = (0..dd)
            .map(|i| (0..a.len()).map(|x| (0..dd).map(|j| inv[(i, j)].re * a[x][j]).sum()).collect())
            .collect();
        Ok(Self { d, basis, pinv, condition_number: hi / lo })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Condition number of the frame operator `AᵀA`.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Hermitian operator with the given outcome probabilities (not
    /// necessarily positive).
    pub fn invert(&self, probs: &[f64]) -> Result<Matrix> {
        if probs.len() != self.pinv[0].len() {
            return Err(Error::DimensionMismatch(format!("{} probabilities for {} outcomes", probs.len(), self.pinv[0].len())));
        }
        let mut out = Matrix::zeros(self.d, self.d);
        for (row, b) in self.pinv.iter().zip(&self.basis) {
            let coef: f64 = row.iter().zip(probs).map(|(r, p)| r * p).sum();
            out.axpy(C::new(coef, 0.0), b);
        }
        Ok(out)
    }

    /// Linear inversion followed by projection onto density matrices.
    pub fn reconstruct(&self, probs: &[f64], policy: &NumericPolicy) -> Result<DensityMatrix<f64>> {
        nearest_density_matrix(&self.invert(probs)?, policy)
    }
}
