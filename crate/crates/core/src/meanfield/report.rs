use std::collections::BTreeMap;

use serde::Serialize;

use super::meanfield_sweep;
use crate::hamiltonian::{BlockPartition, HamiltonianInstance, InstanceMeta};
use crate::infotools::{conditioned_product_state, ConditionedProductState};
use crate::measurement::icosahedral_povm;
use crate::tensor::DensityMatrix;
use crate::{Error, NumericPolicy, Result};

/// Ground energy versus best product energy, with the bound being tested.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub e0: f64,
    pub e_product: f64,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
    pub instance_meta: InstanceMeta,
    pub seed: u64,
    pub restarts: usize,
    /// Statistics entering the bound.
    pub details: BTreeMap<String, f64>,
}

/// `12 (d² ln d / D)^{1/3}`.
pub fn basic_bound(d: usize, degree: usize) -> f64 {
    let d = d as f64;
    12.0 * (d * d * d.ln() / degree as f64).cbrt()
}

/// `14 (d⁴ ln d · tr[A²]‖π‖²)^{1/8} + ‖π‖²`.
pub fn weighted_bound(d: usize, trace_a2: f64, pi_norm2: f64) -> f64 {
    let d = d as f64;
    14.0 * (d.powi(4) * d.ln() * trace_a2 * pi_norm2).powf(0.125) + pi_norm2
}

fn gap_report(
    h: &HamiltonianInstance,
    bound: f64,
    restarts: usize,
    seed: u64,
    details: BTreeMap<String, f64>,
    policy: &NumericPolicy,
) -> Result<BoundReport> {
    let (e0, _) = h.ground_energy(policy)?;
    let (_, e_product) = meanfield_sweep(h, &BlockPartition::singletons(h.n()), restarts, seed, policy)?;
    if e_product < e0 - 1e-9 {
        return Err(Error::Contract(format!("product energy {e_product} below ground energy {e0}")));
    }
    let gap = e_product - e0;
    Ok(BoundReport {
        e0,
        e_product,
        gap,
        bound,
        holds: gap <= bound,
        instance_meta: h.meta().clone(),
        seed,
        restarts,
        details,
    })
}

/// Degree-based bound; requires an unweighted regular interaction graph.
pub fn bound_check_basic(h: &HamiltonianInstance, restarts: usize, seed: u64, policy: &NumericPolicy) -> Result<BoundReport> {
    let degree = h
        .graph()
        .regular_degree()
        .filter(|&dg| dg > 0)
        .ok_or_else(|| Error::InvalidSpec("basic bound needs an unweighted regular graph".into()))?;
    if h.n() < degree {
        return Err(Error::InvalidSpec(format!("n = {} below degree {degree}", h.n())));
    }
    let details = BTreeMap::from([("degree".to_string(), degree as f64)]);
    gap_report(h, basic_bound(h.d(), degree), restarts, seed, details, policy)
}

/// Collision-statistic bound for arbitrary normalised weights.
pub fn bound_check_weighted(h: &HamiltonianInstance, restarts: usize, seed: u64, policy: &NumericPolicy) -> Result<BoundReport> {
    let stats = h.graph().walk_stats();
    let details = BTreeMap::from([
        ("trace_a2".to_string(), stats.trace_a2),
        ("pi_norm2".to_string(), stats.pi_norm2),
        ("collision".to_string(), stats.collision),
    ]);
    gap_report(h, weighted_bound(h.d(), stats.trace_a2, stats.pi_norm2), restarts, seed, details, policy)
}

/// Block-product approximation of a given state, built by measuring and
/// conditioning, checked against the clustered bound.
#[derive(Debug, Clone, Serialize)]
pub struct ClusteredReport {
    pub phi_bar: f64,
    pub i_bar: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `tr Hρ`
    pub energy_rho: f64,
    /// `tr Hσ` of the separable approximation.
    pub energy_sigma: f64,
    pub instance_meta: InstanceMeta,
    pub seed: u64,
    pub construction: ConditionedProductState,
}

/// Qubits only: the construction measures with the icosahedral POVM.
pub fn bound_check_clustered(
    h: &HamiltonianInstance,
    partition: &BlockPartition,
    rho: &DensityMatrix<f64>,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<ClusteredReport> {
    if h.d() != 2 {
        return Err(Error::UnsupportedDimension(h.d()));
    }
    if partition.uniform_size().is_none() {
        return Err(Error::InvalidSpec("blocks must have equal size".into()));
    }
    let c = conditioned_product_state(rho, &icosahedral_povm(), h.graph(), partition, None, seed, policy)?;
    let energy_rho = h.expectation(rho)?;
    let energy_sigma = c.energy(h.terms());
    Ok(ClusteredReport {
        phi_bar: c.phi_bar,
        i_bar: c.i_bar,
        lhs: c.lhs,
        rhs: c.rhs,
        holds: c.holds,
        energy_rho,
        energy_sigma,
        instance_meta: h.meta().clone(),
        seed,
        construction: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, Ensemble, Family, GeneratorSpec, InteractionGraph};

    #[test]
    fn basic_bound_arithmetic() {
        // 12·(4 ln 2 / 11)^{1/3}
        let want = 12.0 * (4.0 * 2f64.ln() / 11.0).powf(1.0 / 3.0);
        assert!((basic_bound(2, 11) - want).abs() < 1e-12);
        assert!((basic_bound(2, 11) - 7.580168).abs() < 1e-6);
    }

    #[test]
    fn regular_weighted_bound_reduces_to_degree_form() {
        let g = InteractionGraph::complete(6).unwrap();
        let s = g.walk_stats();
        let want = 14.0 * (16.0 * 2f64.ln() / 5.0).powf(0.125) + 1.0 / 6.0;
        assert!((weighted_bound(2, s.trace_a2, s.pi_norm2) - want).abs() < 1e-12);
    }

    #[test]
    fn classical_gap_is_zero_and_holds() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Ring { n: 6 }, ensemble: Ensemble::ClassicalDiagonal, d: 2 };
        let h = build_instance(&spec, 4).unwrap();
        let r = bound_check_basic(&h, 8, 1, &pol).unwrap();
        assert!(r.gap.abs() < 1e-9 && r.holds);
    }

    #[test]
    fn weighted_star_holds() {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::star(4).unwrap();
        let mut rng = crate::rng::rng(2);
        let terms = g
            .edges()
            .iter()
            .map(|e| ((e.i, e.j), crate::hamiltonian::draw_term(Ensemble::RandomHermitian, 2, &mut rng, &pol).unwrap()))
            .collect();
        let meta = InstanceMeta { family: "star".into(), seed: 2, ensemble: None };
        let h = HamiltonianInstance::new(2, g, terms, meta, &pol).unwrap();
        let r = bound_check_weighted(&h, 8, 0, &pol).unwrap();
        assert!(r.holds && r.gap >= -1e-9);
        assert!(bound_check_basic(&h, 8, 0, &pol).is_err());
    }

    #[test]
    fn two_block_ground_state_information_is_twice_block_entropy() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Ring { n: 4 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        let h = build_instance(&spec, 3).unwrap();
        let (_, psi) = h.ground_energy(&pol).unwrap();
        let rho = DensityMatrix::from_pure(vec![2; 4], &psi).unwrap();
        let part = BlockPartition::contiguous(4, 2).unwrap();
        let r = bound_check_clustered(&h, &part, &rho, 0, &pol).unwrap();
        let s1 = crate::infotools::marginal_entropy(&rho, &[0, 1], &pol).unwrap();
        assert!((r.i_bar - 2.0 * s1).abs() < 1e-9);
        assert!(r.holds);
        assert!((r.energy_sigma - r.energy_rho).abs() <= r.lhs + 1e-9);
    }

    #[test]
    fn clustered_rejects_unequal_blocks() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Ring { n: 5 }, ensemble: Ensemble::HeisenbergSwap, d: 2 };
        let h = build_instance(&spec, 0).unwrap();
        let rho = DensityMatrix::maximally_mixed(vec![2; 5]);
        let part = BlockPartition::new(5, vec![vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert!(matches!(bound_check_clustered(&h, &part, &rho, 0, &pol), Err(Error::InvalidSpec(_))));
    }
}
