//! Hermitian eigensolvers.
//!
//! [`hermitian_eig`] is a cyclic Jacobi solver returning the full spectrum.
//! [`lowest_eigenpair`] reduces to real tridiagonal form with Householder
//! reflections and extracts only the bottom of the spectrum; it is the route
//! used for ground energies of matrices too large for Jacobi sweeps.

use num_traits::Zero;

use crate::scalar::{c, cr, Real, C};
use crate::tensor::matrix::{herm_tol, ComplexMatrix};
use crate::{Error, NumericPolicy, Result};

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Eigen<T> {
    pub fn vector(&self, i: usize) -> Vec<C<T>> {
        self.vectors.column(i)
    }

    /// `V f(Λ) V†`
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        let v = &self.vectors;
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == T::zero() {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * w;
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.reconstruct_with(|x| x)
    }
}

fn check_hermitian<T: Real>(m: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Contract(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    // Inputs assembled from many terms carry rounding well above 1e-12 relative.
    let tol = herm_tol::<T>(policy.hermitian_tol.max(1e-10)) * T::one().max(m.max_abs());
    let defect = m.hermitian_defect();
    if defect > tol {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect} > {tol})"
        )));
    }
    Ok(())
}

/// Full eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eig<T: Real>(m: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<Eigen<T>> {
    check_hermitian(m, policy)?;
    let n = m.rows();
    let a = m.hermitize();
    let mut vt = ComplexMatrix::identity(n);
    let (values, _) = jacobi_in_place(a, &mut vt, policy);
    Ok(sorted(values, vt))
}

/// Jacobi decomposition started from a supplied unitary basis (columns of
/// `basis`). Converges in one or two sweeps when `basis` nearly diagonalises `m`.
pub fn hermitian_eig_warm<T: Real>(
    m: &ComplexMatrix<T>,
    basis: &ComplexMatrix<T>,
    policy: &NumericPolicy,
) -> Result<Eigen<T>> {
    check_hermitian(m, policy)?;
    let rotated = basis.adjoint().matmul(&m.hermitize()).matmul(basis).hermitize();
    let mut vt = basis.adjoint().map(|z| z.conj());
    let (values, _) = jacobi_in_place(rotated, &mut vt, policy);
    Ok(sorted(values, vt))
}

fn sorted<T: Real>(values: Vec<T>, vt: ComplexMatrix<T>) -> Eigen<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| vt[(order[k], i)]);
    Eigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors,
    }
}

/// Runs Jacobi sweeps on Hermitian `a`. `vt` holds eigenvectors as rows and
/// is right-multiplied by each rotation. Returns diagonal and sweep count.
fn jacobi_in_place<T: Real>(mut a: ComplexMatrix<T>, vt: &mut ComplexMatrix<T>, policy: &NumericPolicy) -> (Vec<T>, usize) {
    let n = a.rows();
    let scale = a.frobenius_norm();
    let target = herm_tol::<T>(policy.jacobi_tol) * scale;
    let tiny = T::min_positive_value().sqrt();
    let mut sweeps = 0;
    let cols = n;
    while sweeps < policy.jacobi_max_sweeps {
        let off = off_diagonal_norm(&a);
        if off <= target || off <= tiny {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= tiny {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip rotations that cannot change the diagonal at working precision.
                if g * T::lit(1e3) < T::epsilon() * (app.abs() + aqq.abs()) {
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                    continue;
                }
                let phase = apq / g; // e^{iφ}
                let theta = (aqq - app) / (T::lit(2.0) * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                let s_ph = phase * sn; // s e^{iφ}
                let s_ph_c = s_ph.conj(); // s e^{-iφ}
                let data = a.as_mut_slice();
                // Row update: A_pk' = c A_pk − s e^{iφ} A_qk, A_qk' = s e^{−iφ} A_pk + c A_qk.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let xp = data[p * cols + k];
                    let xq = data[q * cols + k];
                    let np = xp * cs - s_ph * xq;
                    let nq = s_ph_c * xp + xq * cs;
                    data[p * cols + k] = np;
                    data[q * cols + k] = nq;
                    data[k * cols + p] = np.conj();
                    data[k * cols + q] = nq.conj();
                }
                data[p * cols + p] = cr(app - t * g);
                data[q * cols + q] = cr(aqq + t * g);
                data[p * cols + q] = C::zero();
                data[q * cols + p] = C::zero();
                // V ← V J, with V stored transposed (rows are eigenvectors).
                let vdata = vt.as_mut_slice();
                let (lo, hi) = vdata.split_at_mut(q * n);
                let vp = &mut lo[p * n..(p + 1) * n];
                let vq = &mut hi[..n];
                for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
                    let op = *xp;
                    let oq = *xq;
                    *xp = op * cs - s_ph_c * oq;
                    *xq = s_ph * op + oq * cs;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), sweeps)
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Smallest eigenvalue of a Hermitian matrix and a unit eigenvector.
///
/// Householder tridiagonalisation, Sturm bisection for the eigenvalue and
/// inverse iteration for the vector.
pub fn lowest_eigenpair<T: Real>(m: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<(T, Vec<C<T>>)> {
    check_hermitian(m, policy)?;
    let n = m.rows();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    if n == 1 {
        return Ok((m[(0, 0)].re, vec![cr(T::one())]));
    }
    let tri = Tridiagonal::reduce(m.hermitize());
    let lam = tri.smallest_eigenvalue();
    let x = tri.inverse_iteration(lam);
    let v = tri.back_transform(&x);
    Ok((lam, v))
}

/// Hermitian matrix reduced to real symmetric tridiagonal form
/// `A = Q D T Dᴴ Qᴴ` with `Q` a product of Householder reflections and `D` a
/// diagonal phase matrix.
struct Tridiagonal<T: Real> {
    diag: Vec<T>,
    off: Vec<T>,
    phases: Vec<C<T>>,
    /// Householder vectors (acting on indices k+1..n) and their β = 2/‖v‖².
    reflectors: Vec<(usize, Vec<C<T>>, T)>,
}

impl<T: Real> Tridiagonal<T> {
    fn reduce(mut a: ComplexMatrix<T>) -> Self {
        let n = a.rows();
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut sub = vec![C::zero(); n - 1];
        let mut p = vec![C::<T>::zero(); n];
        for k in 0..n - 1 {
            let len = n - k - 1;
            let x: Vec<C<T>> = (k + 1..n).map(|i| a[(i, k)]).collect();
            let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<T>();
            if xnorm == T::zero() || tail == T::zero() {
                sub[k] = x[0];
                continue;
            }
            let x0n = x[0].norm();
            let ph = if x0n == T::zero() { C::new(T::one(), T::zero()) } else { x[0] / x0n };
            let alpha = -ph * xnorm;
            let mut v = x;
            v[0] = v[0] - alpha;
            let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<T>();
            let beta = T::lit(2.0) / vnorm2;
            // p = β A v on the trailing block.
            for (ii, i) in (k + 1..n).enumerate() {
                let row = &a.as_slice()[i * n + k + 1..i * n + n];
                let s = row.iter().zip(&v).fold(C::zero(), |acc, (r, w)| acc + r * w);
                p[ii] = s * beta;
            }
            // K = (β/2) v† p
            let vp = v.iter().zip(&p[..len]).fold(C::zero(), |acc, (w, q)| acc + w.conj() * q);
            let kk = vp * (beta * T::lit(0.5));
            let q: Vec<C<T>> = (0..len).map(|i| p[i] - kk * v[i]).collect();
            // A ← A − v q† − q v†
            let data = a.as_mut_slice();
            for i in 0..len {
                let vi = v[i];
                let qi = q[i];
                let row = &mut data[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
                for j in 0..len {
                    row[j] = row[j] - vi * q[j].conj() - qi * v[j].conj();
                }
            }
            sub[k] = alpha;
            reflectors.push((k, v, beta));
        }
        let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
        let mut phases = vec![C::new(T::one(), T::zero()); n];
        let mut off = vec![T::zero(); n - 1];
        for k in 0..n - 1 {
            let e = sub[k];
            let en = e.norm();
            off[k] = en;
            phases[k + 1] = if en == T::zero() { phases[k] } else { phases[k] * e / en };
        }
        Self {
            diag,
            off,
            phases,
            reflectors,
        }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: T) -> usize {
        let n = self.diag.len();
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < T::zero() {
            count += 1;
        }
        for i in 1..n {
            let denom = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn smallest_eigenvalue(&self) -> T {
        let n = self.diag.len();
        let mut radius = T::zero();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1] } else { T::zero() } + if i + 1 < n { self.off[i] } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
            radius = radius.max(r);
        }
        let pad = (hi - lo).abs() * T::epsilon() + T::min_positive_value();
        let (mut lo, mut hi) = (lo - pad, hi + pad);
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    /// Solves `(T − λ) x = b` repeatedly with partial pivoting.
    fn inverse_iteration(&self, lam: T) -> Vec<T> {
        let n = self.diag.len();
        let scale = self.diag.iter().map(|d| d.abs()).chain(self.off.iter().copied()).fold(T::one(), T::max);
        let shift = lam - scale * T::epsilon() * T::lit(4.0);
        let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.01) * T::from_usize(i % 7).unwrap()).collect();
        for _ in 0..4 {
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if norm == T::zero() || !norm.is_finite() {
                break;
            }
            for v in x.iter_mut() {
                *v = *v / norm;
            }
        }
        x
    }

    fn solve_shifted(&self, shift: T, b: &[T]) -> Vec<T> {
        let n = self.diag.len();
        let tiny = T::epsilon() * T::epsilon();
        // Banded LU with partial pivoting: rows hold (d, u1, u2).
        let mut d: Vec<T> = self.diag.iter().map(|&v| v - shift).collect();
        let mut u1: Vec<T> = self.off.clone();
        u1.push(T::zero());
        let mut u2 = vec![T::zero(); n];
        let mut l = vec![T::zero(); n];
        let mut rhs = b.to_vec();
        let mut sub: Vec<T> = self.off.clone();
        for i in 0..n - 1 {
            if sub[i].abs() > d[i].abs() {
                // swap rows i and i+1
                let (a0, a1, a2) = (d[i], u1[i], u2[i]);
                let (b0, b1, b2) = (sub[i], d[i + 1], u1[i + 1]);
                d[i] = b0;
                u1[i] = b1;
                u2[i] = b2;
                let m = a0 / b0;
                l[i] = m;
                d[i + 1] = a1 - m * b1;
                u1[i + 1] = a2 - m * b2;
                rhs.swap(i, i + 1);
                rhs[i + 1] = rhs[i + 1] - m * rhs[i];
            } else {
                let piv = if d[i].abs() < tiny { tiny } else { d[i] };
                d[i] = piv;
                let m = sub[i] / piv;
                l[i] = m;
                d[i + 1] = d[i + 1] - m * u1[i];
                rhs[i + 1] = rhs[i + 1] - m * rhs[i];
            }
            sub[i] = T::zero();
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = tiny;
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s = s - u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s = s - u2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }

    fn back_transform(&self, x: &[T]) -> Vec<C<T>> {
        let n = x.len();
        let mut v: Vec<C<T>> = (0..n).map(|i| self.phases[i] * x[i]).collect();
        for (k, h, beta) in self.reflectors.iter().rev() {
            let seg = &mut v[k + 1..];
            let dot = h.iter().zip(seg.iter()).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b);
            let f = dot * *beta;
            for (s, hv) in seg.iter_mut().zip(h) {
                *s = *s - f * hv;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        v.iter().map(|z| z / norm).collect()
    }
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(m: &ComplexMatrix<T>, policy: &NumericPolicy) -> Result<T> {
    if !m.is_square() {
        return Err(Error::Contract("trace norm needs a square matrix".into()));
    }
    if m.is_hermitian(policy.hermitian_tol) {
        let e = hermitian_eig(&m.hermitize(), policy)?;
        return Ok(e.values.iter().map(|v| v.abs()).sum());
    }
    let g = m.adjoint().matmul(m);
    let e = hermitian_eig(&g.hermitize(), policy)?;
    Ok(e.values.iter().map(|v| v.max(T::zero()).sqrt()).sum())
}

/// Real eigenvalues of a real symmetric matrix given row-major.
pub fn symmetric_eigenvalues(a: &[Vec<f64>], policy: &NumericPolicy) -> Result<Vec<f64>> {
    let n = a.len();
    let m = ComplexMatrix::<f64>::from_fn(n, n, |i, j| c(a[i][j], 0.0));
    Ok(hermitian_eig(&m, policy)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::gates::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix<f64> {
        let mut rng = crate::rng::rng(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        g.hermitize()
    }

    #[test]
    fn eig_of_z() {
        let e = hermitian_eig(&pauli_z::<f64>(), &NumericPolicy::default()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn eig_of_swap_is_singlet_plus_triplet() {
        let e = hermitian_eig(&swap::<f64>(2), &NumericPolicy::default()).unwrap();
        let expected = [-1.0, 1.0, 1.0, 1.0];
        for (a, b) in e.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn random_hermitian_round_trip_and_residuals() {
        let policy = NumericPolicy::default();
        for seed in 0..5 {
            let m = random_hermitian(8, seed);
            let e = hermitian_eig(&m, &policy).unwrap();
            let back = e.reconstruct();
            assert!(back.sub(&m).max_abs() < 1e-9);
            let norm = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 0..8 {
                let v = e.vector(k);
                let mv = m.matvec(&v);
                let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * e.values[k]).norm_sqr()).sum::<f64>().sqrt();
                assert!(res <= 1e-9 * norm, "residual {res}");
            }
            let vhv = e.vectors.adjoint().matmul(&e.vectors);
            assert!(vhv.sub(&ComplexMatrix::identity(8)).max_abs() < 1e-9);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let policy = NumericPolicy::default();
        let m = random_hermitian(12, 3);
        let cold = hermitian_eig(&m, &policy).unwrap();
        let pert = m.add(&random_hermitian(12, 4).scale(1e-3));
        let warm = hermitian_eig_warm(&pert, &cold.vectors, &policy).unwrap();
        let reference = hermitian_eig(&pert, &policy).unwrap();
        for (a, b) in warm.values.iter().zip(&reference.values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(warm.reconstruct().sub(&pert).max_abs() < 1e-9);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = ComplexMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eig(&m, &NumericPolicy::default()), Err(Error::Contract(_))));
    }

    #[test]
    fn tridiagonal_route_matches_jacobi() {
        let policy = NumericPolicy::default();
        for (n, seed) in [(2, 1), (3, 2), (17, 3), (40, 4)] {
            let m = random_hermitian(n, seed);
            let (lam, v) = lowest_eigenpair(&m, &policy).unwrap();
            let e = hermitian_eig(&m, &policy).unwrap();
            assert!((lam - e.values[0]).abs() < 1e-10, "n={n}: {lam} vs {}", e.values[0]);
            let mv = m.matvec(&v);
            let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-9 * m.max_abs() * n as f64, "residual {res}");
        }
    }

    #[test]
    fn tridiagonal_route_handles_diagonal_and_degenerate() {
        let policy = NumericPolicy::default();
        let m = ComplexMatrix::<f64>::diag(&[3.0, -2.0, -2.0, 5.0]);
        let (lam, v) = lowest_eigenpair(&m, &policy).unwrap();
        assert!((lam + 2.0).abs() < 1e-12);
        assert!(v[0].norm() < 1e-9 && v[3].norm() < 1e-9);
        let (lam, _) = lowest_eigenpair(&swap::<f64>(3), &policy).unwrap();
        assert!((lam + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_norms() {
        let p = NumericPolicy::default();
        assert!((trace_norm(&ComplexMatrix::<f64>::diag(&[1.0, -1.0]), &p).unwrap() - 2.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = ComplexMatrix::<f64>::projector(&basis(2, 0));
        let plus = ComplexMatrix::<f64>::projector(&[c(s, 0.0), c(s, 0.0)]);
        assert!((trace_norm(&zero.sub(&plus), &p).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(trace_norm(&zero.sub(&zero), &p).unwrap(), 0.0);
        let mut nilpotent = ComplexMatrix::<f64>::zeros(2, 2);
        nilpotent[(0, 1)] = c(3.0, 0.0);
        assert!((trace_norm(&nilpotent, &p).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_jacobi() {
        let m = ComplexMatrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = hermitian_eig(&m, &NumericPolicy::default()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-5 && (e.values[1] - 3.0).abs() < 1e-5);
    }
}
