use std::collections::HashMap;

use super::pauli::{phase, strings_up_to_weight, two_qubit_expansion, Pauli, PauliString};
use crate::hamiltonian::HamiltonianInstance;
use crate::tensor::{partial_trace_matrix, DensityMatrix};
use crate::{Error, Matrix, NumericPolicy, Result};

/// Level-`k` moment relaxation of a qubit Hamiltonian. The moment matrix is
/// indexed by strings of weight ≤ k and parametrised by the real vector of
/// expectations of strings of weight ≤ 2k: `M_ab = i^{s(a,b)} m_{c(a,b)}`
/// where `P_a P_b = i^{s(a,b)} P_{c(a,b)}`.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    n: usize,
    k: usize,
    basis: Vec<PauliString>,
    moments: Vec<PauliString>,
    index: HashMap<PauliString, usize>,
    /// `(c, s)` for every ordered basis pair, row-major.
    table: Vec<(u32, u8)>,
    counts: Vec<usize>,
    /// Objective coefficient per moment; entry 0 (identity) is the constant.
    objective: Vec<f64>,
}

pub fn build_moment_problem(h: &HamiltonianInstance, k: usize, policy: &NumericPolicy) -> Result<MomentProblem> {
    if h.d() != 2 {
        return Err(Error::UnsupportedDimension(h.d()));
    }
    let n = h.n();
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("level k = {k} must lie in 1..={n}")));
    }
    let basis = strings_up_to_weight(n, k);
    let side = basis.len();
    policy.check_entries(side.saturating_mul(side))?;
    let moments = strings_up_to_weight(n, 2 * k);
    let index: HashMap<PauliString, usize> = moments.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();

    let mut table = Vec::with_capacity(side * side);
    let mut counts = vec![0usize; moments.len()];
    for a in &basis {
        for b in &basis {
            let (c, s) = a.mul(b);
            let ci = index[&c];
            counts[ci] += 1;
            table.push((ci as u32, s));
        }
    }

    let mut objective = vec![0.0; moments.len()];
    for (i, j, w, term) in h.weighted_terms() {
        let coeff = two_qubit_expansion(term);
        for p in Pauli::ALL {
            for q in Pauli::ALL {
                let c = coeff[p.index()][q.index()];
                if c != 0.0 {
                    objective[index[&PauliString::on_sites(n, &[i, j], &[p, q])]] += w * c;
                }
            }
        }
    }
    Ok(MomentProblem { n, k, basis, moments, index, table, counts, objective })
}

impl MomentProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Side length of the moment matrix.
    pub fn side(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[PauliString] {
        &self.basis
    }

    pub fn moments(&self) -> &[PauliString] {
        &self.moments
    }

    pub fn moment_index(&self, p: &PauliString) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn objective_coefficients(&self) -> &[f64] {
        &self.objective
    }

    pub(crate) fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn objective_value(&self, m: &[f64]) -> f64 {
        self.objective.iter().zip(m).map(|(c, x)| c * x).sum()
    }

    pub fn moment_matrix(&self, m: &[f64]) -> Matrix {
        let side = self.side();
        let data = self.table.iter().map(|&(c, s)| phase(s) * m[c as usize]).collect();
        Matrix::from_vec(side, side, data).expect("square")
    }

    /// `Re⟨B_c, X⟩` for every moment `c`, where `B_c` is the coefficient
    /// pattern of `m_c` in the moment matrix.
    pub(crate) fn adjoint(&self, x: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; self.moments.len()];
        for (&(c, s), z) in self.table.iter().zip(x.as_slice()) {
            out[c as usize] += (phase(s).conj() * z).re;
        }
        out
    }

    /// Moments `tr(ρ P)` of an actual state.
    pub fn moments_of_state(&self, rho: &DensityMatrix<f64>) -> Result<Vec<f64>> {
        if rho.dims() != vec![2; self.n].as_slice() {
            return Err(Error::DimensionMismatch("state does not match problem".into()));
        }
        Ok(self
            .moments
            .iter()
            .map(|p| {
                let support = p.support();
                if support.is_empty() {
                    return 1.0;
                }
                let local = partial_trace_matrix(rho.matrix(), rho.dims(), &support);
                let op = support.iter().fold(Matrix::identity(1), |acc, &s| acc.kron(&p.letters()[s].matrix()));
                local.real_inner(&op)
            })
            .collect())
    }

    /// Pseudo-density matrix `Σ_P m_P P / 2^{|sites|}` on ascending `sites`
    /// (at most `2k` of them). Positive only when `|sites| ≤ k` is guaranteed.
    pub fn pseudo_density(&self, m: &[f64], sites: &[usize]) -> Result<Matrix> {
        if sites.len() > 2 * self.k || sites.windows(2).any(|w| w[0] >= w[1]) || sites.iter().any(|&s| s >= self.n) {
            return Err(Error::Invalid(format!("sites {sites:?} must be ascending, distinct and at most 2k")));
        }
        let dim = 1 << sites.len();
        let mut out = Matrix::zeros(dim, dim);
        for code in 0..4usize.pow(sites.len() as u32) {
            let letters: Vec<Pauli> = (0..sites.len()).map(|t| Pauli::from_index(code >> (2 * (sites.len() - 1 - t)))).collect();
            let p = PauliString::on_sites(self.n, sites, &letters);
            let value = m[self.index[&p]];
            if value != 0.0 {
                let op = letters.iter().fold(Matrix::identity(1), |acc, l| acc.kron(&l.matrix()));
                out.axpy(crate::scalar::C::new(value / dim as f64, 0.0), &op);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{InstanceMeta, InteractionGraph};
    use crate::scalar::C;
    use crate::tensor::gates;

    fn single_edge(term: Matrix) -> HamiltonianInstance {
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let meta = InstanceMeta { family: "edge".into(), seed: 0, ensemble: None };
        HamiltonianInstance::uniform(2, g, &term, meta, &NumericPolicy::default()).unwrap()
    }

    #[test]
    fn single_qubit_block_is_bloch_matrix() {
        let h = single_edge(gates::swap(2));
        let p = build_moment_problem(&h, 1, &NumericPolicy::default()).unwrap();
        // Basis I, X0, Y0, Z0, X1, ...; restrict to site 0.
        let mut m = vec![0.0; p.moments().len()];
        m[0] = 1.0;
        let (x, y, z) = (0.3, -0.2, 0.5);
        for (label, v) in [("X0", x), ("Y0", y), ("Z0", z)] {
            m[p.moment_index(&PauliString::parse(2, label).unwrap()).unwrap()] = v;
        }
        let full = p.moment_matrix(&m);
        let i = C::new(0.0, 1.0);
        let want = [
            [C::new(1.0, 0.0), C::new(x, 0.0), C::new(y, 0.0), C::new(z, 0.0)],
            [C::new(x, 0.0), C::new(1.0, 0.0), i * z, -i * y],
            [C::new(y, 0.0), -i * z, C::new(1.0, 0.0), i * x],
            [C::new(z, 0.0), i * y, -i * x, C::new(1.0, 0.0)],
        ];
        for a in 0..4 {
            for b in 0..4 {
                assert!((full[(a, b)] - want[a][b]).norm() < 1e-15, "{a}{b}");
            }
        }
    }

    #[test]
    fn bloch_ball_is_the_feasible_set() {
        let h = single_edge(gates::swap(2));
        let p = build_moment_problem(&h, 1, &NumericPolicy::default()).unwrap();
        let pol = NumericPolicy::default();
        let mut rng = crate::rng::rng(3);
        use rand::Rng as _;
        for _ in 0..200 {
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let r2: f64 = v.iter().map(|x| x * x).sum();
            let mut m = vec![0.0; p.moments().len()];
            m[0] = 1.0;
            for (l, x) in ["X0", "Y0", "Z0"].iter().zip(v) {
                m[p.moment_index(&PauliString::parse(2, l).unwrap()).unwrap()] = x;
            }
            // Only the 4×4 site-0 block is constrained by these entries.
            let full = p.moment_matrix(&m);
            let block = Matrix::from_fn(4, 4, |a, b| full[(a, b)]);
            let (lo, _) = crate::tensor::lowest_eigenpair(&block, &pol).unwrap();
            assert_eq!(lo >= -1e-12, r2 <= 1.0 + 1e-12, "{v:?} {lo}");
        }
    }

    #[test]
    fn objective_reproduces_energy_of_states() {
        let pol = NumericPolicy::default();
        let spec = crate::hamiltonian::GeneratorSpec {
            family: crate::hamiltonian::Family::Ring { n: 4 },
            ensemble: crate::hamiltonian::Ensemble::RandomHermitian,
            d: 2,
        };
        let h = crate::hamiltonian::build_instance(&spec, 5).unwrap();
        let p = build_moment_problem(&h, 2, &pol).unwrap();
        let mut rng = crate::rng::rng(8);
        for _ in 0..5 {
            let rho = crate::random::random_mixed(&[2; 4], 3, &mut rng);
            let m = p.moments_of_state(&rho).unwrap();
            assert!((p.objective_value(&m) - h.expectation(&rho).unwrap()).abs() < 1e-12);
            let mm = p.moment_matrix(&m);
            assert!(mm.is_hermitian(1e-14));
            assert!(crate::tensor::lowest_eigenpair(&mm, &pol).unwrap().0 >= -1e-10);
            let local = p.pseudo_density(&m, &[1, 3]).unwrap();
            let want = partial_trace_matrix(rho.matrix(), rho.dims(), &[1, 3]);
            assert!(local.sub(&want).max_abs() < 1e-12);
        }
    }

    #[test]
    fn identity_hamiltonian_has_constant_objective() {
        let h = single_edge(Matrix::identity(4));
        let p = build_moment_problem(&h, 1, &NumericPolicy::default()).unwrap();
        assert_eq!(p.objective_coefficients()[0], 1.0);
        assert!(p.objective_coefficients()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_qudits_and_bad_levels() {
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let meta = InstanceMeta { family: "edge".into(), seed: 0, ensemble: None };
        let pol = NumericPolicy::default();
        let h3 = HamiltonianInstance::uniform(3, g, &gates::swap(3), meta, &pol).unwrap();
        assert!(matches!(build_moment_problem(&h3, 1, &pol), Err(Error::UnsupportedDimension(3))));
        let h = single_edge(gates::swap(2));
        assert!(build_moment_problem(&h, 3, &pol).is_err());
    }
}
