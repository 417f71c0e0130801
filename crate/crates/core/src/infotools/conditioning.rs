use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::Rng as _;
use serde::Serialize;

use super::{mask_of, quantum_mutual_information, shannon};
use crate::hamiltonian::{BlockPartition, InteractionGraph};
use crate::measurement::{contract_site, for_each_outcome, luders_site, measure_channel, Povm};
use crate::rng::child;
use crate::tensor::{partial_trace_matrix, trace_norm, DensityMatrix};
use crate::{Error, Matrix, NumericPolicy, Result};

/// One intermediate of the construction: a realised value (when computable
/// at this size) next to the bound the argument gives for its expectation.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub quantity: &'static str,
    pub value: Option<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    /// Endpoints in different blocks, neither measured.
    Across,
    /// Endpoints in different blocks, at least one measured.
    AcrossMeasured,
    /// Same block, at least one endpoint measured.
    Measured,
    /// Same block, neither measured: reproduced exactly.
    Within,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRecord {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub kind: EdgeKind,
    /// `‖ρ^{ab} − σ^{ab}‖₁`
    pub distance: f64,
    #[serde(skip)]
    pub sigma: Matrix,
}

/// The separable approximation `σ = E_z ⊗_i τ_z^{V_i}` obtained by measuring
/// a random set of blocks and sites, described through its edge marginals.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionedProductState {
    pub seed: u64,
    pub n: usize,
    pub block_size: usize,
    pub d: usize,
    pub degree: usize,
    /// Mean block expansion.
    pub phi_bar: f64,
    /// `E_i I(V_i : V_{−i})_ρ`.
    pub i_bar: f64,
    pub delta_star: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub k_tilde: usize,
    pub k: usize,
    pub measured_blocks: Vec<usize>,
    /// Individually measured sites, one list per block.
    pub measured_sites: Vec<Vec<usize>>,
    /// All measured sites `C`.
    pub measured: Vec<usize>,
    pub edges: Vec<EdgeRecord>,
    /// `E_{(a,b)∈E} ‖ρ^{ab} − σ^{ab}‖₁`.
    pub lhs: f64,
    /// `9 (d² Φ̄ Ī / (m D))^{1/6} + 1/m + m/n`.
    pub rhs: f64,
    pub holds: bool,
    /// Intermediates keyed by step number.
    pub steps: BTreeMap<String, StepRecord>,
}

impl ConditionedProductState {
    /// `Σ_edges w tr(H_ab σ^{ab})` for terms indexed like `edges`.
    pub fn energy(&self, terms: &BTreeMap<(usize, usize), Matrix>) -> f64 {
        self.edges.iter().map(|e| e.weight * e.sigma.real_inner(&terms[&(e.a, e.b)])).sum()
    }
}

/// `9 (d² Φ̄ Ī / (m D))^{1/6} + 1/m + m/n`.
pub fn clustered_bound(d: usize, phi_bar: f64, i_bar: f64, m: usize, degree: usize, n: usize) -> f64 {
    let d = d as f64;
    9.0 * (d * d * phi_bar * i_bar / (m * degree) as f64).powf(1.0 / 6.0) + 1.0 / m as f64 + m as f64 / n as f64
}

/// Entropies of measured marginals, computed on demand.
struct MeasuredEntropy<'a> {
    rho: &'a DensityMatrix<f64>,
    povm: &'a Povm,
    policy: &'a NumericPolicy,
    cache: HashMap<u64, f64>,
}

impl MeasuredEntropy<'_> {
    fn entropy(&mut self, mask: u64) -> Result<f64> {
        if mask == 0 {
            return Ok(0.0);
        }
        if let Some(&v) = self.cache.get(&mask) {
            return Ok(v);
        }
        let sites: Vec<usize> = (0..self.rho.n_sites()).filter(|&s| mask >> s & 1 == 1).collect();
        let p = measure_channel(self.povm, self.rho, &sites, self.policy)?;
        let v = shannon(p.probs());
        self.cache.insert(mask, v);
        Ok(v)
    }

    fn cmi(&mut self, a: u64, b: u64, c: u64) -> Result<f64> {
        Ok(self.entropy(a | c)? + self.entropy(b | c)? - self.entropy(a | b | c)? - self.entropy(c)?)
    }
}

/// Measure-and-condition construction of a separable state close to `rho`
/// on the edges of `graph`.
///
/// `deltas` overrides `δ₁, δ₂`; by default both are set to
/// `δ* = (18d)^{1/3} (2 Φ̄ Ī / (m D))^{1/6}`. Counts are `k̃ = ⌊(n/m) δ₁⌋ + 1`
/// and `k = ⌊m δ₂⌋ + 1`, clamped to `[1, n/m − 1]` and `[1, m − 1]`.
pub fn conditioned_product_state(
    rho: &DensityMatrix<f64>,
    povm: &Povm,
    graph: &InteractionGraph,
    partition: &BlockPartition,
    deltas: Option<(f64, f64)>,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<ConditionedProductState> {
    let n = rho.n_sites();
    let d = povm.d();
    if rho.dims().iter().any(|&x| x != d) || graph.n() != n || partition.n_sites() != n {
        return Err(Error::DimensionMismatch("state, POVM, graph and partition disagree".into()));
    }
    let rank_one = povm.rank_one().ok_or_else(|| Error::Contract("conditioning needs rank-one effects".into()))?;
    let m = partition.uniform_size().ok_or_else(|| Error::InvalidSpec("blocks must have equal size".into()))?;
    let degree = graph
        .regular_degree()
        .filter(|&x| x > 0)
        .ok_or_else(|| Error::InvalidSpec("construction needs a regular graph".into()))?;
    let nb = partition.len();
    let blocks = partition.blocks();
    let block_of = partition.block_of();

    let phi_bar = graph.mean_block_expansion(blocks)?;
    let mut i_bar = 0.0;
    for b in blocks {
        let rest: Vec<usize> = (0..n).filter(|s| !b.contains(s)).collect();
        i_bar += quantum_mutual_information(rho, &[b, &rest], policy)?;
    }
    i_bar = (i_bar / nb as f64).max(0.0);

    let delta_star = (18.0 * d as f64).cbrt() * (2.0 * phi_bar * i_bar / (m * degree) as f64).powf(1.0 / 6.0);
    let (d1, d2) = deltas.unwrap_or((delta_star, delta_star));
    let k_tilde = (((nb as f64) * d1).floor() as usize + 1).clamp(1, nb.saturating_sub(1).max(1));
    let k = (((m as f64) * d2).floor() as usize + 1).clamp(1, m.saturating_sub(1).max(1));
    let (delta1, delta2) = (k_tilde as f64 / nb as f64, k as f64 / m as f64);

    let mut rng = child(seed, 0);
    let kt_prime = rng.random_range(0..k_tilde).min(nb);
    let mut measured_blocks = sample(&mut rng, nb, kt_prime).into_vec();
    measured_blocks.sort_unstable();
    let mut measured_sites = Vec::with_capacity(nb);
    for b in blocks {
        let kp = rng.random_range(0..k).min(b.len());
        let mut pick: Vec<usize> = sample(&mut rng, b.len(), kp).into_iter().map(|p| b[p]).collect();
        pick.sort_unstable();
        measured_sites.push(pick);
    }
    let mut measured: Vec<usize> = measured_blocks.iter().flat_map(|&i| blocks[i].iter().copied()).collect();
    measured.extend(measured_sites.iter().flatten());
    measured.sort_unstable();
    measured.dedup();
    let in_c = |s: usize| measured.binary_search(&s).is_ok();

    let outcomes = povm.outcomes().checked_pow(measured.len() as u32).unwrap_or(usize::MAX);
    let mut step6 = 0.0;
    let mut across_weight = 0.0;
    let mut edges = Vec::new();
    for e in graph.edges() {
        let (a, b) = (e.i, e.j);
        let rho_ab = partial_trace_matrix(rho.matrix(), rho.dims(), &[a, b]);
        let cross = block_of[a] != block_of[b];
        let touched = in_c(a) || in_c(b);
        let kind = match (cross, touched) {
            (true, false) => EdgeKind::Across,
            (true, true) => EdgeKind::AcrossMeasured,
            (false, true) => EdgeKind::Measured,
            (false, false) => EdgeKind::Within,
        };
        if cross {
            across_weight += e.weight;
        }
        let sigma = if kind == EdgeKind::Across {
            if outcomes > policy.max_enumeration {
                return Err(Error::InstanceTooLarge { entries: outcomes, cap: policy.max_enumeration });
            }
            let mut sites = measured.clone();
            sites.extend([a, b]);
            sites.sort_unstable();
            let local = partial_trace_matrix(rho.matrix(), rho.dims(), &sites);
            let dims = vec![d; sites.len()];
            let pos: Vec<usize> = measured.iter().map(|s| sites.binary_search(s).expect("present")).collect();
            let mut sigma = Matrix::zeros(d * d, d * d);
            let mut dist = 0.0;
            let mut failure = None;
            for_each_outcome(&local, &dims, &pos, povm, &mut |_, x| {
                let p = x.trace().re;
                if p <= 1e-300 {
                    return;
                }
                let ta = contract_site(x, &[d, d], 1, &Matrix::identity(d)).scale(1.0 / p);
                let tb = contract_site(x, &[d, d], 0, &Matrix::identity(d)).scale(1.0 / p);
                let prod = ta.kron(&tb);
                sigma.axpy(crate::scalar::C::new(p, 0.0), &prod);
                match trace_norm(&x.scale(1.0 / p).sub(&prod).hermitize(), policy) {
                    Ok(v) => dist += p * v,
                    Err(err) => failure = Some(err),
                }
            });
            if let Some(err) = failure {
                return Err(err);
            }
            step6 += e.weight * dist;
            sigma
        } else {
            let mut s = rho_ab.clone();
            for (pos, site) in [(0, a), (1, b)] {
                if in_c(site) {
                    s = luders_site(&s, &[d, d], pos, povm);
                }
            }
            s
        };
        let distance = trace_norm(&rho_ab.sub(&sigma).hermitize(), policy)?;
        edges.push(EdgeRecord { a, b, weight: e.weight, kind, distance, sigma });
    }
    debug_assert_eq!(rank_one.len(), povm.outcomes());
    let total_weight: f64 = edges.iter().map(|e| e.weight).sum();
    let lhs = edges.iter().map(|e| e.weight * e.distance).sum::<f64>() / total_weight;
    let rhs = clustered_bound(d, phi_bar, i_bar, m, degree, n);

    // Bounds of the argument, in terms of the rounded δ's.
    let nf = n as f64;
    let mf = m as f64;
    let dd = degree as f64;
    let b1 = mf * i_bar / (nf * delta1);
    let b2 = i_bar / (nf * delta1 * delta2);
    let b3 = (i_bar / mf) / (delta1 * delta2 * dd * phi_bar);
    let b5 = (2.0 * b3).sqrt();
    let b6 = 18.0 * d as f64 * b5;
    let b7 = phi_bar * b6 + delta1 + delta2;

    let classical = classical_steps(rho, povm, graph, partition, &measured_blocks, &measured_sites, &measured, policy)?;
    let value = |i: usize| classical.as_ref().map(|v| v[i]);
    let mut steps = BTreeMap::new();
    let mut put = |key: &str, quantity: &'static str, value: Option<f64>, bound: f64| {
        steps.insert(key.to_string(), StepRecord { quantity, value, bound });
    };
    put("1", "block-block CMI given measured blocks and other blocks' sites", value(0), b1);
    put("2", "block-site CMI given Z", value(1), b2);
    put("3", "block-site CMI along boundary edges", value(2), b3);
    put("4", "site-site CMI across edges", value(3), b3);
    put("5", "classical variational distance to product across edges", value(4), b5);
    let q6 = if across_weight > 0.0 { Some(step6 / across_weight) } else { Some(0.0) };
    put("6", "quantum trace distance to product across edges", q6, b6);
    put("7", "edge-averaged distance of the separable state", Some(lhs), b7.min(rhs));

    Ok(ConditionedProductState {
        seed,
        n,
        block_size: m,
        d,
        degree,
        phi_bar,
        i_bar,
        delta_star,
        delta1,
        delta2,
        k_tilde,
        k,
        measured_blocks,
        measured_sites,
        measured,
        edges,
        lhs,
        rhs,
        holds: lhs <= rhs,
        steps,
    })
}

/// Realised values of the classical steps 1–5, or `None` when a needed
/// measured marginal exceeds the entry cap.
#[allow(clippy::too_many_arguments)]
fn classical_steps(
    rho: &DensityMatrix<f64>,
    povm: &Povm,
    graph: &InteractionGraph,
    partition: &BlockPartition,
    measured_blocks: &[usize],
    measured_sites: &[Vec<usize>],
    measured: &[usize],
    policy: &NumericPolicy,
) -> Result<Option<[f64; 5]>> {
    let n = rho.n_sites();
    let blocks = partition.blocks();
    let nb = blocks.len();
    let block_of = partition.block_of();
    let largest = measured.len() + 2 * partition.uniform_size().unwrap_or(n);
    let outcomes = povm.outcomes().checked_pow(largest.min(n) as u32).unwrap_or(usize::MAX);
    if outcomes > policy.max_entries || nb < 2 {
        return Ok(None);
    }
    let mut h = MeasuredEntropy { rho, povm, policy, cache: HashMap::new() };
    let masks: Vec<u64> = blocks.iter().map(|b| mask_of(b)).collect();
    let z = mask_of(measured);
    let tilde = measured_blocks.iter().fold(0u64, |acc, &i| acc | masks[i]);

    // 1. Ordered pairs of unmeasured blocks.
    let (mut s1, mut c1) = (0.0, 0usize);
    for i in (0..nb).filter(|i| !measured_blocks.contains(i)) {
        for j in (0..nb).filter(|&j| j != i && !measured_blocks.contains(&j)) {
            let others = (0..nb).filter(|&l| l != j).fold(0u64, |acc, l| acc | mask_of(&measured_sites[l]));
            s1 += h.cmi(masks[i], masks[j], tilde | others)?;
            c1 += 1;
        }
    }
    let v1 = if c1 > 0 { s1 / c1 as f64 } else { 0.0 };

    // 2. Blocks against sites outside them.
    let mut s2 = 0.0;
    for (i, &xi) in masks.iter().enumerate() {
        let outside: Vec<usize> = (0..n).filter(|&a| block_of[a] != i).collect();
        let mut inner = 0.0;
        for &a in &outside {
            inner += h.cmi(xi, 1 << a, z)?;
        }
        s2 += inner / outside.len() as f64;
    }
    let v2 = s2 / nb as f64;

    // 3–5. Across edges, weighted.
    let (mut s3, mut s4, mut s5, mut w) = (0.0, 0.0, 0.0, 0.0);
    for e in graph.edges().into_iter().filter(|e| block_of[e.i] != block_of[e.j]) {
        let (a, b) = (e.i, e.j);
        s3 += 0.5 * e.weight * (h.cmi(masks[block_of[b]], 1 << a, z)? + h.cmi(masks[block_of[a]], 1 << b, z)?);
        s4 += e.weight * h.cmi(1 << a, 1 << b, z)?;
        if !measured.contains(&a) && !measured.contains(&b) {
            let mut sites = measured.to_vec();
            sites.extend([a, b]);
            let p = measure_channel(povm, rho, &sites, policy)?;
            let r = povm.outcomes();
            let mut acc = 0.0;
            for zi in 0..p.len() / (r * r) {
                let block = &p.probs()[zi * r * r..(zi + 1) * r * r];
                let pz: f64 = block.iter().sum();
                if pz <= 0.0 {
                    continue;
                }
                let pa: Vec<f64> = (0..r).map(|x| block[x * r..(x + 1) * r].iter().sum::<f64>() / pz).collect();
                let pb: Vec<f64> = (0..r).map(|y| (0..r).map(|x| block[x * r + y]).sum::<f64>() / pz).collect();
                let l1: f64 = (0..r * r).map(|xy| (block[xy] / pz - pa[xy / r] * pb[xy % r]).abs()).sum();
                acc += pz * l1;
            }
            s5 += e.weight * acc;
        }
        w += e.weight;
    }
    let norm = |s: f64| if w > 0.0 { s / w } else { 0.0 };
    Ok(Some([v1, v2, norm(s3), norm(s4), norm(s5)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::icosahedral_povm;
    use crate::scalar::C;

    fn ring(n: usize) -> InteractionGraph {
        InteractionGraph::ring(n).unwrap()
    }

    #[test]
    fn product_state_keeps_only_measured_losses() {
        let pol = NumericPolicy::default();
        let mut rng = crate::rng::rng(1);
        let vs: Vec<_> = (0..6).map(|_| crate::random::haar_vector(2, &mut rng)).collect();
        let rho = DensityMatrix::product_pure(&vs);
        let part = BlockPartition::contiguous(6, 2).unwrap();
        for seed in 0..5 {
            let r = conditioned_product_state(&rho, &icosahedral_povm(), &ring(6), &part, None, seed, &pol).unwrap();
            assert!(r.i_bar.abs() < 1e-10);
            for e in &r.edges {
                match e.kind {
                    EdgeKind::Across | EdgeKind::Within => assert!(e.distance < 1e-10, "{e:?}"),
                    _ => {}
                }
            }
            assert!(r.holds);
            assert!((r.rhs - (0.5 + 2.0 / 6.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn bell_pairs_inside_blocks_are_preserved() {
        let pol = NumericPolicy::default();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![C::new(s, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(s, 0.0)];
        let psi = crate::tensor::kron_vec(&crate::tensor::kron_vec(&bell, &bell), &bell);
        let rho = DensityMatrix::from_pure(vec![2; 6], &psi).unwrap();
        let part = BlockPartition::contiguous(6, 2).unwrap();
        // Partners (0,1), (2,3), (4,5) share a block; ring edges (1,2), (3,4), (5,0) cross.
        let r = conditioned_product_state(&rho, &icosahedral_povm(), &ring(6), &part, Some((0.0, 0.0)), 3, &pol).unwrap();
        assert!(r.measured.is_empty());
        assert!(r.lhs < 1e-10, "{}", r.lhs);
        assert!(r.holds);
    }

    #[test]
    fn within_edges_exact_and_across_matches_oracle() {
        let pol = NumericPolicy::default();
        let mut rng = crate::rng::rng(4);
        let rho = crate::random::random_pure(&[2; 4], &mut rng);
        let g = InteractionGraph::complete(4).unwrap();
        let part = BlockPartition::contiguous(4, 2).unwrap();
        let povm = icosahedral_povm();
        for seed in 0..6 {
            let r = conditioned_product_state(&rho, &povm, &g, &part, Some((1.0, 1.0)), seed, &pol).unwrap();
            for e in &r.edges {
                let rho_ab = partial_trace_matrix(rho.matrix(), rho.dims(), &[e.a, e.b]);
                if e.kind == EdgeKind::Within {
                    assert!(e.sigma.sub(&rho_ab).max_abs() < 1e-12);
                }
                if e.kind == EdgeKind::Across {
                    // Oracle: explicit conditioning on every outcome string.
                    let mut want = Matrix::zeros(4, 4);
                    let c = &r.measured;
                    let total = povm.outcomes().pow(c.len() as u32);
                    for idx in 0..total {
                        let mut digits = vec![0; c.len()];
                        let mut rest = idx;
                        for slot in digits.iter_mut().rev() {
                            *slot = rest % 12;
                            rest /= 12;
                        }
                        if let Some((p, post)) = crate::measurement::condition_on_outcomes(&povm, &rho, c, &digits).unwrap() {
                            let keep: Vec<usize> = (0..4).filter(|s| !c.contains(s)).collect();
                            let pa = keep.iter().position(|&s| s == e.a).unwrap();
                            let pb = keep.iter().position(|&s| s == e.b).unwrap();
                            let ta = post.partial_trace(&[pa]);
                            let tb = post.partial_trace(&[pb]);
                            want.axpy(C::new(p, 0.0), &ta.matrix().kron(tb.matrix()));
                        }
                    }
                    assert!(e.sigma.sub(&want).max_abs() < 1e-10);
                }
                assert!((e.sigma.trace().re - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ring_ground_state_within_bound_and_energy_consistent() {
        let pol = NumericPolicy::default();
        let spec = crate::hamiltonian::GeneratorSpec {
            family: crate::hamiltonian::Family::Ring { n: 6 },
            ensemble: crate::hamiltonian::Ensemble::HeisenbergSwap,
            d: 2,
        };
        let h = crate::hamiltonian::build_instance(&spec, 0).unwrap();
        let (e0, psi) = h.ground_energy(&pol).unwrap();
        let rho = DensityMatrix::from_pure(vec![2; 6], &psi).unwrap();
        let part = BlockPartition::contiguous(6, 2).unwrap();
        let r = conditioned_product_state(&rho, &icosahedral_povm(), h.graph(), &part, None, 7, &pol).unwrap();
        assert!(r.holds, "{} > {}", r.lhs, r.rhs);
        let e_sigma = r.energy(h.terms());
        assert!(e_sigma >= e0 - 1e-9);
        assert!(e_sigma - e0 <= r.lhs + 1e-9);
        assert!(r.steps.values().all(|s| s.value.is_some()));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"steps\":{\"1\""));
    }
}
