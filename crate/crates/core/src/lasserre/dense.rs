//! Eigen-decompositions for the solver loop, backed by `faer` (sequential).

use faer::{Mat, Side};

use crate::scalar::C;
use crate::{Error, Matrix, Result};

fn to_faer(m: &Matrix) -> Mat<C<f64>> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn from_faer(m: &Mat<C<f64>>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn failed() -> Error {
    Error::Contract("Hermitian eigensolver did not converge".into())
}

/// Nearest PSD matrix in Frobenius norm: `V max(Λ, 0) V†`.
pub(crate) fn psd_projection(w: &Matrix) -> Result<Matrix> {
    Ok(psd_projection_with_min(w)?.0)
}

/// Projection together with the smallest eigenvalue of `w`.
pub(crate) fn psd_projection_with_min(w: &Matrix) -> Result<(Matrix, f64)> {
    let eig = to_faer(w).self_adjoint_eigen(Side::Lower).map_err(|_| failed())?;
    let values = eig.S().column_vector();
    let u = eig.U();
    let n = w.rows();
    let keep: Vec<usize> = (0..n).filter(|&i| values[i].re > 0.0).collect();
    let scaled = Mat::<C<f64>>::from_fn(n, keep.len(), |i, t| u[(i, keep[t])] * values[keep[t]].re.sqrt());
    let z = &scaled * scaled.adjoint();
    Ok((from_faer(&z), if n == 0 { 0.0 } else { values[0].re }))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    let values = to_faer(m).self_adjoint_eigenvalues(Side::Lower).map_err(|_| failed())?;
    Ok(values.first().copied().unwrap_or(0.0))
}
