use serde::{Deserialize, Serialize};

use crate::hamiltonian::{BlockPartition, HamiltonianInstance};
use crate::measurement::contract_site;
use crate::scalar::C;
use crate::tensor::{kron_vec, partial_trace_matrix};
use crate::{Error, Matrix, Result};

/// Tensor product of one unit vector per block of a partition. Each block
/// vector lives on its sites in ascending order, lowest site most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    d: usize,
    partition: BlockPartition,
    factors: Vec<Vec<C<f64>>>,
}

impl ProductState {
    /// Checks `‖φ_b‖ = 1 ± 1e-12` and block dimensions.
    pub fn new(d: usize, partition: BlockPartition, factors: Vec<Vec<C<f64>>>) -> Result<Self> {
        if factors.len() != partition.len() {
            return Err(Error::DimensionMismatch(format!("{} factors for {} blocks", factors.len(), partition.len())));
        }
        for (b, (v, block)) in factors.iter().zip(partition.blocks()).enumerate() {
            if v.len() != d.pow(block.len() as u32) {
                return Err(Error::DimensionMismatch(format!("block {b} vector has length {}", v.len())));
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Contract(format!("block {b} vector has norm {norm}")));
            }
        }
        Ok(Self { d, partition, factors })
    }

    /// Product of single-site vectors.
    pub fn sites(d: usize, vectors: Vec<Vec<C<f64>>>) -> Result<Self> {
        let n = vectors.len();
        Self::new(d, BlockPartition::singletons(n), vectors)
    }

    /// Computational basis string.
    pub fn basis_string(d: usize, digits: &[usize]) -> Self {
        let vectors = digits.iter().map(|&x| crate::tensor::gates::basis(d, x)).collect();
        Self::sites(d, vectors).expect("basis vectors are normalised")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn factors(&self) -> &[Vec<C<f64>>] {
        &self.factors
    }

    pub(crate) fn set_factor(&mut self, b: usize, v: Vec<C<f64>>) {
        self.factors[b] = v;
    }

    /// Full state vector on `0..n` in the standard site order.
    pub fn to_vector(&self) -> Vec<C<f64>> {
        let n = self.partition.n_sites();
        let mut psi = vec![C::new(1.0, 0.0)];
        let mut order = Vec::with_capacity(n);
        for (block, v) in self.partition.blocks().iter().zip(&self.factors) {
            psi = kron_vec(&psi, v);
            order.extend_from_slice(block);
        }
        // psi is indexed by sites in `order`; permute to 0..n.
        let dim = psi.len();
        let mut out = vec![C::new(0.0, 0.0); dim];
        for (idx, amp) in psi.into_iter().enumerate() {
            let mut rest = idx;
            let mut target = 0;
            let mut digits = vec![0; n];
            for &site in order.iter().rev() {
                digits[site] = rest % self.d;
                rest /= self.d;
            }
            for x in digits {
                target = target * self.d + x;
            }
            out[target] = amp;
        }
        out
    }

    /// Reduced state on sites `i < j` (as a `d² × d²` matrix).
    pub fn two_site_marginal(&self, i: usize, j: usize) -> Matrix {
        let (bi, pi) = self.locate(i);
        let (bj, pj) = self.locate(j);
        if bi == bj {
            let rho = Matrix::projector(&self.factors[bi]);
            let dims = vec![self.d; self.partition.blocks()[bi].len()];
            partial_trace_matrix(&rho, &dims, &[pi, pj])
        } else {
            self.site_marginal(i).kron(&self.site_marginal(j))
        }
    }

    pub fn site_marginal(&self, i: usize) -> Matrix {
        let (b, p) = self.locate(i);
        let rho = Matrix::projector(&self.factors[b]);
        let dims = vec![self.d; self.partition.blocks()[b].len()];
        partial_trace_matrix(&rho, &dims, &[p])
    }

    /// `(block, position within block)` of a site.
    fn locate(&self, site: usize) -> (usize, usize) {
        for (b, block) in self.partition.blocks().iter().enumerate() {
            if let Some(p) = block.iter().position(|&s| s == site) {
                return (b, p);
            }
        }
        panic!("site {site} not in partition");
    }

    /// Serialises with amplitudes rounded to `digits` decimal places.
    pub fn to_json(&self, digits: i32) -> String {
        let scale = 10f64.powi(digits);
        let round = |x: f64| (x * scale).round() / scale;
        let file = StateFile {
            d: self.d,
            blocks: self.partition.blocks().to_vec(),
            factors: self.factors.iter().map(|v| v.iter().map(|z| [round(z.re), round(z.im)]).collect()).collect(),
        };
        serde_json::to_string(&file).expect("state serialises")
    }

    /// Inverse of [`to_json`](Self::to_json); factors are renormalised to
    /// absorb rounding.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        let n = file.blocks.iter().map(Vec::len).sum();
        let partition = BlockPartition::new(n, file.blocks)?;
        let factors = file
            .factors
            .into_iter()
            .map(|v| {
                let norm = v.iter().map(|[a, b]| a * a + b * b).sum::<f64>().sqrt();
                v.into_iter().map(|[a, b]| C::new(a / norm, b / norm)).collect()
            })
            .collect();
        Self::new(file.d, partition, factors)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    d: usize,
    blocks: Vec<Vec<usize>>,
    factors: Vec<Vec<[f64; 2]>>,
}

/// `Σ_edges w ⟨φ| H_ij |φ⟩`.
pub fn product_energy(h: &HamiltonianInstance, phi: &ProductState) -> Result<f64> {
    if phi.d() != h.d() || phi.partition().n_sites() != h.n() {
        return Err(Error::DimensionMismatch(format!(
            "state on {} sites of dimension {} vs instance n = {}, d = {}",
            phi.partition().n_sites(),
            phi.d(),
            h.n(),
            h.d()
        )));
    }
    Ok(h.weighted_terms().map(|(i, j, w, term)| w * phi.two_site_marginal(i, j).real_inner(term)).sum())
}

/// `tr_j[H (I ⊗ ρ_j)]` for a two-site operator on `(i, j)`.
pub(crate) fn reduce_right(h: &Matrix, d: usize, rho_j: &Matrix) -> Matrix {
    contract_site(h, &[d, d], 1, rho_j)
}

/// `tr_i[H (ρ_i ⊗ I)]`.
pub(crate) fn reduce_left(h: &Matrix, d: usize, rho_i: &Matrix) -> Matrix {
    contract_site(h, &[d, d], 0, rho_i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{InstanceMeta, InteractionGraph};
    use crate::tensor::gates;
    use crate::NumericPolicy;

    fn meta() -> InstanceMeta {
        InstanceMeta { family: "test".into(), seed: 0, ensemble: None }
    }

    #[test]
    fn swap_energy_is_overlap() {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let h = HamiltonianInstance::uniform(2, g, &gates::swap(2), meta(), &pol).unwrap();
        let mut rng = crate::rng::rng(1);
        for _ in 0..10 {
            let a = crate::random::haar_vector(2, &mut rng);
            let b = crate::random::haar_vector(2, &mut rng);
            let overlap = (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr();
            let phi = ProductState::sites(2, vec![a, b]).unwrap();
            assert!((product_energy(&h, &phi).unwrap() - overlap).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_matches_full_expectation() {
        let pol = NumericPolicy::default();
        let spec = crate::hamiltonian::GeneratorSpec {
            family: crate::hamiltonian::Family::Ring { n: 4 },
            ensemble: crate::hamiltonian::Ensemble::RandomHermitian,
            d: 2,
        };
        let h = crate::hamiltonian::build_instance(&spec, 3).unwrap();
        let full = h.assemble_full(&pol).unwrap();
        let mut rng = crate::rng::rng(2);
        let part = BlockPartition::new(4, vec![vec![1, 3], vec![0], vec![2]]).unwrap();
        let factors = vec![
            crate::random::haar_vector(4, &mut rng),
            crate::random::haar_vector(2, &mut rng),
            crate::random::haar_vector(2, &mut rng),
        ];
        let phi = ProductState::new(2, part, factors).unwrap();
        let psi = phi.to_vector();
        let want = full.expectation(&psi).re;
        assert!((product_energy(&h, &phi).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn classical_basis_string_cost() {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        let term = Matrix::diag(&[0.1, -0.4, 0.7, 0.2]);
        let h = HamiltonianInstance::uniform(2, g, &term, meta(), &pol).unwrap();
        let phi = ProductState::basis_string(2, &[0, 1, 0]);
        // edges (0,1): |01⟩ → −0.4, (1,2): |10⟩ → 0.7; weights 1/2 each.
        assert!((product_energy(&h, &phi).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_at_fixed_precision() {
        let mut rng = crate::rng::rng(5);
        let phi = ProductState::sites(2, (0..3).map(|_| crate::random::haar_vector(2, &mut rng)).collect()).unwrap();
        let back = ProductState::from_json(&phi.to_json(12)).unwrap();
        for (a, b) in back.factors().iter().zip(phi.factors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn reductions_match_partial_trace() {
        let mut rng = crate::rng::rng(6);
        let h = crate::random::gue(4, &mut rng);
        let r = crate::random::random_mixed(&[2], 2, &mut rng);
        let pol = NumericPolicy::default();
        let ir = crate::tensor::kron(&Matrix::identity(2), r.matrix(), &pol).unwrap();
        let want = partial_trace_matrix(&h.matmul(&ir), &[2, 2], &[0]);
        assert!(reduce_right(&h, 2, r.matrix()).sub(&want).max_abs() < 1e-12);
        let ri = crate::tensor::kron(r.matrix(), &Matrix::identity(2), &pol).unwrap();
        let want = partial_trace_matrix(&h.matmul(&ri), &[2, 2], &[1]);
        assert!(reduce_left(&h, 2, r.matrix()).sub(&want).max_abs() < 1e-12);
    }
}
