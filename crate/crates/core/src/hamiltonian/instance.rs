use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::graph::InteractionGraph;
use crate::rng::{child, Rng};
use crate::scalar::C;
use crate::tensor::{gates, hermitian_eig, lowest_eigenpair, partial_trace_matrix, strides, DensityMatrix};
use crate::{Error, Matrix, NumericPolicy, Result};

/// Interaction-graph family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Family {
    Ring { n: usize },
    /// Planar grid; each face gets a diagonal with probability `diagonal_prob`.
    Grid { rows: usize, cols: usize, diagonal_prob: f64 },
    Complete { n: usize },
    RandomRegular { n: usize, degree: usize },
    /// Undirected weighted edges, normalised on construction.
    Weighted { n: usize, edges: Vec<(usize, usize, f64)> },
    /// Complete graph on `n` qudits of dimension `n` with swap terms; the
    /// ensemble and local dimension of the spec are ignored.
    SwapAntisymmetric { n: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ring { .. } => "ring",
            Family::Grid { .. } => "grid",
            Family::Complete { .. } => "complete",
            Family::RandomRegular { .. } => "random-regular",
            Family::Weighted { .. } => "weighted",
            Family::SwapAntisymmetric { .. } => "swap-antisymmetric",
        }
    }
}

/// Distribution of the two-site terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// GUE draw rescaled to operator norm one.
    RandomHermitian,
    /// Swap operator on every edge.
    HeisenbergSwap,
    /// `J Z⊗Z + h (X⊗I + I⊗X)/2` with uniform `J, h ∈ [−1, 1]`, rescaled; qubits only.
    IsingField,
    /// Diagonal with uniform entries in `[−1, 1]`.
    ClassicalDiagonal,
}

impl Ensemble {
    pub const ALL: [Ensemble; 4] = [
        Ensemble::RandomHermitian,
        Ensemble::HeisenbergSwap,
        Ensemble::IsingField,
        Ensemble::ClassicalDiagonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::RandomHermitian => "random-hermitian",
            Ensemble::HeisenbergSwap => "heisenberg-swap",
            Ensemble::IsingField => "ising-field",
            Ensemble::ClassicalDiagonal => "classical-diagonal",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ensemble::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown ensemble '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub ensemble: Ensemble,
    /// Local dimension.
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub family: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<String>,
}

/// A 2-local Hamiltonian `H = Σ_{ij} G_ij H_ij` on `n` qudits.
///
/// Terms are stored once per undirected edge `i < j`, acting on `(i, j)` in
/// that order; the edge carries weight `G_ij + G_ji`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianInstance {
    n: usize,
    d: usize,
    graph: InteractionGraph,
    terms: BTreeMap<(usize, usize), Matrix>,
    meta: InstanceMeta,
}

impl HamiltonianInstance {
    pub fn new(
        d: usize,
        graph: InteractionGraph,
        terms: BTreeMap<(usize, usize), Matrix>,
        meta: InstanceMeta,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        let n = graph.n();
        if d < 2 {
            return Err(Error::InvalidSpec(format!("local dimension {d} < 2")));
        }
        for e in graph.edges() {
            if !terms.contains_key(&(e.i, e.j)) {
                return Err(Error::InvalidSpec(format!("edge ({}, {}) has no term", e.i, e.j)));
            }
        }
        for (&(i, j), h) in &terms {
            if i >= j || j >= n {
                return Err(Error::InvalidSpec(format!("term key ({i}, {j}) must satisfy i < j < n")));
            }
            if h.rows() != d * d || h.cols() != d * d {
                return Err(Error::DimensionMismatch(format!("term ({i}, {j}) is {}x{}", h.rows(), h.cols())));
            }
            let norm = operator_norm(h, policy)?;
            if norm > 1.0 + 1e-10 {
                return Err(Error::InvalidSpec(format!("term ({i}, {j}) has norm {norm} > 1")));
            }
        }
        Ok(Self { n, d, graph, terms, meta })
    }

    /// Same Hamiltonian on `graph` with `term` on every edge.
    pub fn uniform(d: usize, graph: InteractionGraph, term: &Matrix, meta: InstanceMeta, policy: &NumericPolicy) -> Result<Self> {
        let terms = graph.edges().iter().map(|e| ((e.i, e.j), term.clone())).collect();
        Self::new(d, graph, terms, meta, policy)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d; self.n]
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), Matrix> {
        &self.terms
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    /// `(i, j, weight, term)` for every edge with positive weight.
    pub fn weighted_terms(&self) -> impl Iterator<Item = (usize, usize, f64, &Matrix)> + '_ {
        self.graph.edges().into_iter().map(move |e| (e.i, e.j, e.weight, &self.terms[&(e.i, e.j)]))
    }

    /// `tr Hρ`, from two-site marginals.
    pub fn expectation(&self, rho: &DensityMatrix<f64>) -> Result<f64> {
        if rho.dims() != self.dims().as_slice() {
            return Err(Error::DimensionMismatch("state does not match instance".into()));
        }
        Ok(self
            .weighted_terms()
            .map(|(i, j, w, h)| w * partial_trace_matrix(rho.matrix(), rho.dims(), &[i, j]).real_inner(h))
            .sum())
    }

    /// Full `d^n × d^n` matrix.
    pub fn assemble_full(&self, policy: &NumericPolicy) -> Result<Matrix> {
        let dim = checked_pow(self.d, self.n).ok_or(Error::InstanceTooLarge {
            entries: usize::MAX,
            cap: policy.max_entries,
        })?;
        policy.check_entries(dim.saturating_mul(dim))?;
        let mut out = Matrix::zeros(dim, dim);
        for (i, j, w, h) in self.weighted_terms() {
            embed_two_site(&mut out, &self.dims(), i, j, w, h);
        }
        Ok(out.hermitize())
    }

    /// Exact ground energy and a ground state vector.
    pub fn ground_energy(&self, policy: &NumericPolicy) -> Result<(f64, Vec<C<f64>>)> {
        let h = self.assemble_full(policy)?;
        let (e0, psi) = if h.rows() <= 64 {
            let e = hermitian_eig(&h, policy)?;
            (e.values[0], e.vector(0))
        } else {
            lowest_eigenpair(&h, policy)?
        };
        let hv = h.matvec(&psi);
        let residual = hv.iter().zip(&psi).map(|(a, b)| (a - b * e0).norm_sqr()).sum::<f64>().sqrt();
        if residual > 1e-9 {
            return Err(Error::Contract(format!("ground state residual {residual:e}")));
        }
        Ok((e0, psi))
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Adds `w · h` acting on sites `(i, j)` of the register to `out`.
pub(crate) fn embed_two_site(out: &mut Matrix, dims: &[usize], i: usize, j: usize, w: f64, h: &Matrix) {
    let st = strides(dims);
    let (di, dj) = (dims[i], dims[j]);
    let dim = out.rows();
    for r in 0..dim {
        let a = r / st[i] % di;
        let b = r / st[j] % dj;
        let base = r - a * st[i] - b * st[j];
        let hr = h.row(a * dj + b);
        for a2 in 0..di {
            for b2 in 0..dj {
                let v = hr[a2 * dj + b2];
                if v.re != 0.0 || v.im != 0.0 {
                    out[(r, base + a2 * st[i] + b2 * st[j])] += v * w;
                }
            }
        }
    }
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn operator_norm(h: &Matrix, policy: &NumericPolicy) -> Result<f64> {
    let e = hermitian_eig(h, policy)?;
    Ok(e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Deterministic instance from `(spec, seed)`.
///
/// Stream 0 of the seed drives the graph, stream `1 + e` the term on edge `e`.
pub fn build_instance(spec: &GeneratorSpec, seed: u64) -> Result<HamiltonianInstance> {
    let policy = NumericPolicy::default();
    let mut graph_rng = child(seed, 0);
    let (graph, d, ensemble) = match &spec.family {
        Family::Ring { n } => (InteractionGraph::ring(*n)?, spec.d, spec.ensemble),
        Family::Grid { rows, cols, diagonal_prob } => (
            InteractionGraph::grid(*rows, *cols, *diagonal_prob, &mut graph_rng)?,
            spec.d,
            spec.ensemble,
        ),
        Family::Complete { n } => (InteractionGraph::complete(*n)?, spec.d, spec.ensemble),
        Family::RandomRegular { n, degree } => (
            InteractionGraph::random_regular(*n, *degree, &mut graph_rng)?,
            spec.d,
            spec.ensemble,
        ),
        Family::Weighted { n, edges } => (InteractionGraph::from_weighted_edges(*n, edges)?, spec.d, spec.ensemble),
        Family::SwapAntisymmetric { n } => (InteractionGraph::complete(*n)?, *n, Ensemble::HeisenbergSwap),
    };
    if ensemble == Ensemble::IsingField && d != 2 {
        return Err(Error::InvalidSpec("ising-field terms need d = 2".into()));
    }
    let mut terms = BTreeMap::new();
    for (idx, e) in graph.edges().iter().enumerate() {
        let mut rng = child(seed, 1 + idx as u64);
        terms.insert((e.i, e.j), draw_term(ensemble, d, &mut rng, &policy)?);
    }
    let meta = InstanceMeta {
        family: spec.family.name().to_string(),
        seed,
        ensemble: Some(ensemble.name().to_string()),
    };
    HamiltonianInstance::new(d, graph, terms, meta, &policy)
}

/// One two-site term from `ensemble`, norm at most one.
pub fn draw_term(ensemble: Ensemble, d: usize, rng: &mut Rng, policy: &NumericPolicy) -> Result<Matrix> {
    let dd = d * d;
    let raw = match ensemble {
        Ensemble::RandomHermitian => {
            Matrix::from_fn(dd, dd, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).hermitize()
        }
        Ensemble::HeisenbergSwap => gates::swap(d),
        Ensemble::IsingField => {
            let j: f64 = rng.random_range(-1.0..=1.0);
            let h: f64 = rng.random_range(-1.0..=1.0);
            let z = gates::pauli_z::<f64>();
            let x = gates::pauli_x::<f64>();
            let i2 = Matrix::identity(2);
            let mut m = z.kron(&z).scale(j);
            m.axpy(C::new(h / 2.0, 0.0), &x.kron(&i2));
            m.axpy(C::new(h / 2.0, 0.0), &i2.kron(&x));
            m
        }
        Ensemble::ClassicalDiagonal => {
            let v: Vec<f64> = (0..dd).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Matrix::diag(&v)
        }
    };
    let norm = operator_norm(&raw, policy)?;
    Ok(if norm > 1.0 { raw.scale(1.0 / norm).hermitize() } else { raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn single_edge(term: Matrix) -> HamiltonianInstance {
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let meta = InstanceMeta { family: "weighted".into(), seed: 0, ensemble: None };
        HamiltonianInstance::uniform(2, g, &term, meta, &policy()).unwrap()
    }

    #[test]
    fn zz_single_edge() {
        let z = gates::pauli_z::<f64>();
        let h = single_edge(z.kron(&z)).assemble_full(&policy()).unwrap();
        let expected = Matrix::diag(&[1.0, -1.0, -1.0, 1.0]);
        assert!(h.sub(&expected).max_abs() < 1e-15);
    }

    #[test]
    fn swap_instance_ground_state_is_singlet() {
        let spec = GeneratorSpec { family: Family::SwapAntisymmetric { n: 2 }, ensemble: Ensemble::RandomHermitian, d: 7 };
        let h = build_instance(&spec, 1).unwrap();
        assert_eq!(h.d(), 2);
        let full = h.assemble_full(&policy()).unwrap();
        let e = hermitian_eig(&full, &policy()).unwrap();
        for (v, want) in e.values.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((v - want).abs() < 1e-12);
        }
        let (e0, psi) = h.ground_energy(&policy()).unwrap();
        assert!((e0 + 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let overlap = (psi[1] * s - psi[2] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn swap_antisymmetric_three_qutrits() {
        let spec = GeneratorSpec { family: Family::SwapAntisymmetric { n: 3 }, ensemble: Ensemble::HeisenbergSwap, d: 3 };
        let h = build_instance(&spec, 0).unwrap();
        let (e0, _) = h.ground_energy(&policy()).unwrap();
        assert!((e0 + 1.0).abs() < 1e-10);
    }

    #[test]
    fn disjoint_edges_energy_is_average_of_edge_minima() {
        let g = InteractionGraph::unweighted(4, &[(0, 1), (2, 3)]).unwrap();
        let mut rng = crate::rng::rng(9);
        let t1 = draw_term(Ensemble::RandomHermitian, 2, &mut rng, &policy()).unwrap();
        let t2 = draw_term(Ensemble::RandomHermitian, 2, &mut rng, &policy()).unwrap();
        let m1 = hermitian_eig(&t1, &policy()).unwrap().values[0];
        let m2 = hermitian_eig(&t2, &policy()).unwrap().values[0];
        let mut terms = BTreeMap::new();
        terms.insert((0, 1), t1);
        terms.insert((2, 3), t2);
        let meta = InstanceMeta { family: "weighted".into(), seed: 0, ensemble: None };
        let h = HamiltonianInstance::new(2, g, terms, meta, &policy()).unwrap();
        let (e0, _) = h.ground_energy(&policy()).unwrap();
        assert!((e0 - (m1 + m2) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn classical_ground_energy_is_brute_force_minimum() {
        let spec = GeneratorSpec { family: Family::Ring { n: 5 }, ensemble: Ensemble::ClassicalDiagonal, d: 2 };
        let h = build_instance(&spec, 3).unwrap();
        let (e0, _) = h.ground_energy(&policy()).unwrap();
        let mut best = f64::INFINITY;
        for s in 0..32usize {
            let bit = |k: usize| s >> (4 - k) & 1;
            let mut e = 0.0;
            for (i, j, w, t) in h.weighted_terms() {
                let idx = bit(i) * 2 + bit(j);
                e += w * t[(idx, idx)].re;
            }
            best = best.min(e);
        }
        assert!((e0 - best).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian() {
        let h = single_edge(Matrix::zeros(4, 4));
        assert_eq!(h.ground_energy(&policy()).unwrap().0, 0.0);
    }

    #[test]
    fn build_is_deterministic_and_norm_bounded() {
        let spec = GeneratorSpec { family: Family::RandomRegular { n: 8, degree: 3 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        let a = build_instance(&spec, 7).unwrap();
        let b = build_instance(&spec, 7).unwrap();
        assert_eq!(a, b);
        for t in a.terms().values() {
            assert!(operator_norm(t, &policy()).unwrap() <= 1.0 + 1e-12);
        }
        let full = a.assemble_full(&policy()).unwrap();
        let e = hermitian_eig(&full, &policy()).unwrap();
        assert!(e.values.iter().all(|v| v.abs() <= 1.0 + 1e-10));
        let bad = GeneratorSpec { family: Family::RandomRegular { n: 5, degree: 3 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        assert!(matches!(build_instance(&bad, 0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn heisenberg_complete_terms_are_swaps() {
        let spec = GeneratorSpec { family: Family::Complete { n: 4 }, ensemble: Ensemble::HeisenbergSwap, d: 3 };
        let h = build_instance(&spec, 0).unwrap();
        for t in h.terms().values() {
            assert_eq!(t, &gates::swap::<f64>(3));
        }
    }

    #[test]
    fn large_register_uses_tridiagonal_route() {
        let spec = GeneratorSpec { family: Family::Ring { n: 7 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        let h = build_instance(&spec, 2).unwrap();
        let (e0, _) = h.ground_energy(&policy()).unwrap();
        let full = h.assemble_full(&policy()).unwrap();
        let e = hermitian_eig(&full, &policy()).unwrap();
        assert!((e0 - e.values[0]).abs() < 1e-9);
    }
}
