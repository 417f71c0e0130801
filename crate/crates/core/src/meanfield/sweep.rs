use super::state::{product_energy, reduce_left, reduce_right, ProductState};
use crate::hamiltonian::{embed_two_site, BlockPartition, HamiltonianInstance};
use crate::rng::child;
use crate::tensor::{hermitian_eig, lowest_eigenpair};
use crate::{Error, Matrix, NumericPolicy, Result};

/// Outcome of one coordinate-descent run.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    pub state: ProductState,
    pub energy: f64,
    /// Energy after the initial draw and after every block update.
    pub energies: Vec<f64>,
    pub sweeps: usize,
}

/// Effective operator on block `b`: internal edges embedded directly,
/// boundary edges averaged against the other site's current marginal.
fn effective_operator(h: &HamiltonianInstance, phi: &ProductState, b: usize, block_of: &[usize]) -> Matrix {
    let d = h.d();
    let block = &phi.partition().blocks()[b];
    let dims = vec![d; block.len()];
    let dim = d.pow(block.len() as u32);
    let mut out = Matrix::zeros(dim, dim);
    let pos = |s: usize| block.iter().position(|&v| v == s).expect("site in block");
    for (i, j, w, term) in h.weighted_terms() {
        match (block_of[i] == b, block_of[j] == b) {
            (true, true) => embed_two_site(&mut out, &dims, pos(i), pos(j), w, term),
            (true, false) => embed_one_site(&mut out, &dims, pos(i), w, &reduce_right(term, d, &phi.site_marginal(j))),
            (false, true) => embed_one_site(&mut out, &dims, pos(j), w, &reduce_left(term, d, &phi.site_marginal(i))),
            (false, false) => {}
        }
    }
    out.hermitize()
}

fn embed_one_site(out: &mut Matrix, dims: &[usize], site: usize, w: f64, op: &Matrix) {
    let d = dims[site];
    let s = crate::tensor::strides(dims)[site];
    let dim = out.rows();
    for r in 0..dim {
        let a = r / s % d;
        let base = r - a * s;
        for a2 in 0..d {
            let v = op[(a, a2)];
            if v.re != 0.0 || v.im != 0.0 {
                out[(r, base + a2 * s)] += v * w;
            }
        }
    }
}

fn lowest(m: &Matrix, policy: &NumericPolicy) -> Result<Vec<crate::scalar::C<f64>>> {
    if m.rows() <= 64 {
        Ok(hermitian_eig(m, policy)?.vector(0))
    } else {
        Ok(lowest_eigenpair(m, policy)?.1)
    }
}

/// Block coordinate descent from a given start. Fails if the energy ever
/// increases by more than 1e-9.
pub fn descend(h: &HamiltonianInstance, start: ProductState, policy: &NumericPolicy) -> Result<SweepTrace> {
    let block_of = start.partition().block_of();
    let mut phi = start;
    let mut energy = product_energy(h, &phi)?;
    let mut energies = vec![energy];
    let mut sweeps = 0;
    while sweeps < policy.max_sweeps {
        sweeps += 1;
        let before = energy;
        for b in 0..phi.partition().len() {
            let heff = effective_operator(h, &phi, b, &block_of);
            phi.set_factor(b, lowest(&heff, policy)?);
            let e = product_energy(h, &phi)?;
            if e > energy + 1e-9 {
                return Err(Error::Contract(format!("sweep energy rose from {energy} to {e}")));
            }
            energy = e;
            energies.push(e);
        }
        if (before - energy).abs() < policy.sweep_tol {
            break;
        }
    }
    Ok(SweepTrace { state: phi, energy, energies, sweeps })
}

/// Haar-random block vectors from stream `restart` of `seed`.
pub fn random_product_state(d: usize, partition: &BlockPartition, seed: u64, restart: u64) -> ProductState {
    let mut rng = child(seed, restart);
    let factors = partition
        .blocks()
        .iter()
        .map(|b| crate::random::haar_vector(d.pow(b.len() as u32), &mut rng))
        .collect();
    ProductState::new(d, partition.clone(), factors).expect("Haar vectors are normalised")
}

/// Best of `restarts` coordinate-descent runs; ties go to the lower restart
/// index.
pub fn meanfield_sweep(
    h: &HamiltonianInstance,
    partition: &BlockPartition,
    restarts: usize,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<(ProductState, f64)> {
    if partition.n_sites() != h.n() {
        return Err(Error::DimensionMismatch(format!("partition covers {} of {} sites", partition.n_sites(), h.n())));
    }
    for b in partition.blocks() {
        let dim = h.d().checked_pow(b.len() as u32).unwrap_or(usize::MAX);
        policy.check_entries(dim.saturating_mul(dim))?;
    }
    let mut best: Option<(ProductState, f64)> = None;
    for r in 0..restarts.max(1) {
        let run = descend(h, random_product_state(h.d(), partition, seed, r as u64), policy)?;
        if best.as_ref().is_none_or(|(_, e)| run.energy < *e) {
            best = Some((run.state, run.energy));
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, Ensemble, Family, GeneratorSpec, InstanceMeta, InteractionGraph};
    use crate::tensor::gates;

    fn spec(family: Family, ensemble: Ensemble) -> GeneratorSpec {
        GeneratorSpec { family, ensemble, d: 2 }
    }

    #[test]
    fn swap_pair_meanfield_is_zero() {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let meta = InstanceMeta { family: "swap".into(), seed: 0, ensemble: None };
        let h = HamiltonianInstance::uniform(2, g, &gates::swap(2), meta, &pol).unwrap();
        let (_, e) = meanfield_sweep(&h, &BlockPartition::singletons(2), 16, 1, &pol).unwrap();
        assert!(e.abs() < 1e-9, "{e}");
        let (e0, _) = h.ground_energy(&pol).unwrap();
        assert!((e - e0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classical_instance_reaches_e0() {
        let pol = NumericPolicy::default();
        for seed in 0..5 {
            let h = build_instance(&spec(Family::Ring { n: 5 }, Ensemble::ClassicalDiagonal), seed).unwrap();
            let (e0, _) = h.ground_energy(&pol).unwrap();
            let (_, e) = meanfield_sweep(&h, &BlockPartition::singletons(5), 16, seed, &pol).unwrap();
            assert!(e >= e0 - 1e-9);
            assert!((e - e0).abs() < 1e-9, "seed {seed}: {e} vs {e0}");
        }
    }

    #[test]
    fn monotone_trace_and_sandwich() {
        let pol = NumericPolicy::default();
        for seed in 0..5 {
            let h = build_instance(&spec(Family::Complete { n: 4 }, Ensemble::RandomHermitian), seed).unwrap();
            let run = descend(&h, random_product_state(2, &BlockPartition::singletons(4), seed, 0), &pol).unwrap();
            assert!(run.energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let (e0, _) = h.ground_energy(&pol).unwrap();
            assert!(run.energy >= e0 - 1e-9);
        }
    }

    #[test]
    fn coarser_blocks_do_not_raise_energy() {
        let pol = NumericPolicy::default();
        let h = build_instance(&spec(Family::Ring { n: 4 }, Ensemble::HeisenbergSwap), 0).unwrap();
        let (_, sites) = meanfield_sweep(&h, &BlockPartition::singletons(4), 16, 3, &pol).unwrap();
        let blocks = BlockPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let (_, block) = meanfield_sweep(&h, &blocks, 16, 3, &pol).unwrap();
        assert!(block <= sites + 1e-9, "{block} > {sites}");
        let (e0, _) = h.ground_energy(&pol).unwrap();
        assert!(block >= e0 - 1e-9);
    }

    #[test]
    fn single_block_is_exact() {
        let pol = NumericPolicy::default();
        let h = build_instance(&spec(Family::Ring { n: 4 }, Ensemble::RandomHermitian), 9).unwrap();
        let (e0, _) = h.ground_energy(&pol).unwrap();
        let (_, e) = meanfield_sweep(&h, &BlockPartition::contiguous(4, 4).unwrap(), 1, 0, &pol).unwrap();
        assert!((e - e0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_in_seed() {
        let pol = NumericPolicy::default();
        let h = build_instance(&spec(Family::Ring { n: 5 }, Ensemble::RandomHermitian), 2).unwrap();
        let a = meanfield_sweep(&h, &BlockPartition::singletons(5), 4, 11, &pol).unwrap();
        let b = meanfield_sweep(&h, &BlockPartition::singletons(5), 4, 11, &pol).unwrap();
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        assert_eq!(a.0, b.0);
    }
}
