use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng as _;
use serde::Serialize;

use super::problem::MomentProblem;
use super::solver::MomentSolution;
use crate::hamiltonian::HamiltonianInstance;
use crate::measurement::{contract_site, for_each_outcome, Povm, ReconstructionMap};
use crate::rng::child;
use crate::tensor::gates;
use crate::{Error, Matrix, NumericPolicy, Result};

/// One run of propagation sampling.
#[derive(Debug, Clone, Serialize)]
pub struct RoundingRun {
    pub run: usize,
    /// Number of draws `m ∈ {0, …, 2k−1}`.
    pub draws: usize,
    /// Distinct conditioned sites.
    pub sites: Vec<usize>,
    pub outcomes: Vec<usize>,
    /// Negative pseudo-probability mass removed before sampling.
    pub clipped_mass: f64,
    pub flagged: bool,
    pub energy: f64,
    /// Bloch vector of every site's state.
    pub bloch: Vec<[f64; 3]>,
    #[serde(skip)]
    pub states: Vec<Matrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundingReport {
    pub seed: u64,
    pub samples: usize,
    pub objective: f64,
    pub e0: Option<f64>,
    /// Mean over unflagged runs.
    pub mean_energy: f64,
    pub min_energy: f64,
    /// `mean_energy − objective`.
    pub gap: f64,
    pub flagged: usize,
    pub max_clipped_mass: f64,
    pub runs: Vec<RoundingRun>,
}

pub fn bloch_vector(rho: &Matrix) -> [f64; 3] {
    [rho.real_inner(&gates::pauli_x()), rho.real_inner(&gates::pauli_y()), rho.real_inner(&gates::pauli_z())]
}

/// Quantum propagation sampling: condition the solution's pseudo-distribution
/// of POVM outcomes on a random set of sites, then fit every other site to its
/// conditional outcome marginal. Conditioned sites are set to `|0⟩⟨0|`.
///
/// Pseudo-probabilities below `policy.clip_floor` count as clipped mass
/// (all negative values are zeroed before renormalising); a run whose clipped
/// mass exceeds `policy.clip_flag` is flagged and left out of the mean.
/// When `e0` is given, every run is checked to be variationally above it.
#[allow(clippy::too_many_arguments)]
pub fn propagation_sampling(
    problem: &MomentProblem,
    solution: &MomentSolution,
    h: &HamiltonianInstance,
    povm: &Povm,
    seed: u64,
    samples: usize,
    e0: Option<f64>,
    policy: &NumericPolicy,
) -> Result<RoundingReport> {
    if povm.d() != 2 || povm.rank_one().is_none() {
        return Err(Error::Contract("rounding needs a rank-one qubit POVM".into()));
    }
    if solution.n != problem.n() || solution.k != problem.k() || h.n() != problem.n() {
        return Err(Error::DimensionMismatch("solution, problem and instance disagree".into()));
    }
    let n = problem.n();
    let k = problem.k();
    let inverse = ReconstructionMap::new(povm, policy)?;
    let zero = Matrix::projector(&gates::basis(2, 0));
    let r = povm.outcomes();

    let mut runs = Vec::with_capacity(samples);
    for run in 0..samples {
        let mut rng = child(seed, run as u64);
        let draws = rng.random_range(0..2 * k);
        let mut sites: Vec<usize> = (0..draws).map(|_| rng.random_range(0..n)).collect();
        sites.sort_unstable();
        sites.dedup();

        let mut weights = Vec::with_capacity(r.pow(sites.len() as u32));
        let local = problem.pseudo_density(&solution.m, &sites)?;
        let all: Vec<usize> = (0..sites.len()).collect();
        for_each_outcome(&local, &vec![2; sites.len()], &all, povm, &mut |_, x| weights.push(x[(0, 0)].re));
        let clipped_mass: f64 = weights.iter().filter(|&&p| p < policy.clip_floor).map(|p| -p).sum();
        let cleaned: Vec<f64> = weights.iter().map(|&p| p.max(0.0)).collect();
        let index = WeightedIndex::new(&cleaned).map_err(|e| Error::Contract(format!("no positive pseudo-probability: {e}")))?;
        let mut code = index.sample(&mut rng);
        let mut outcomes = vec![0; sites.len()];
        for slot in outcomes.iter_mut().rev() {
            *slot = code % r;
            code /= r;
        }

        let mut states = Vec::with_capacity(n);
        for i in 0..n {
            if sites.binary_search(&i).is_ok() {
                states.push(zero.clone());
                continue;
            }
            let mut joint: Vec<usize> = sites.clone();
            let pos = joint.binary_search(&i).unwrap_err();
            joint.insert(pos, i);
            let mut x = problem.pseudo_density(&solution.m, &joint)?;
            let mut dims = vec![2; joint.len()];
            // Contract conditioned sites from the back so positions stay valid.
            for (t, &s) in sites.iter().enumerate().rev() {
                let p = joint.iter().position(|&j| j == s).expect("present");
                x = contract_site(&x, &dims, p, povm.effect(outcomes[t]));
                dims.remove(p);
            }
            let total = x.trace().re;
            let probs: Vec<f64> = povm.effects().iter().map(|e| x.real_inner(e) / total).collect();
            states.push(inverse.reconstruct(&probs, policy)?.into_matrix());
        }
        let energy: f64 = h.weighted_terms().map(|(i, j, w, term)| w * states[i].kron(&states[j]).real_inner(term)).sum();
        if let Some(e0) = e0 {
            if energy < e0 - 1e-8 {
                return Err(Error::Contract(format!("rounded energy {energy} below ground energy {e0} (run {run})")));
            }
        }
        runs.push(RoundingRun {
            run,
            draws,
            sites,
            outcomes,
            clipped_mass,
            flagged: clipped_mass > policy.clip_flag,
            energy,
            bloch: states.iter().map(bloch_vector).collect(),
            states,
        });
    }
    let kept: Vec<f64> = runs.iter().filter(|r| !r.flagged).map(|r| r.energy).collect();
    let mean_energy = if kept.is_empty() { f64::NAN } else { kept.iter().sum::<f64>() / kept.len() as f64 };
    Ok(RoundingReport {
        seed,
        samples,
        objective: solution.objective,
        e0,
        mean_energy,
        min_energy: runs.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min),
        gap: mean_energy - solution.objective,
        flagged: runs.iter().filter(|r| r.flagged).count(),
        max_clipped_mass: runs.iter().map(|r| r.clipped_mass).fold(0.0, f64::max),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, Ensemble, Family, GeneratorSpec, InstanceMeta, InteractionGraph};
    use crate::lasserre::{build_moment_problem, solve_sdp, SdpOptions};
    use crate::measurement::icosahedral_povm;
    use crate::tensor::DensityMatrix;

    #[test]
    fn product_moments_reproduce_marginals() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Complete { n: 4 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        let h = build_instance(&spec, 2).unwrap();
        let p = build_moment_problem(&h, 2, &pol).unwrap();
        let mut rng = crate::rng::rng(9);
        let parts: Vec<_> = (0..4).map(|_| crate::random::random_mixed(&[2], 2, &mut rng)).collect();
        let rho = DensityMatrix::product(&parts, &pol).unwrap();
        let sol = MomentSolution::from_moments(&p, p.moments_of_state(&rho).unwrap()).unwrap();
        let report = propagation_sampling(&p, &sol, &h, &icosahedral_povm(), 3, 20, None, &pol).unwrap();
        for run in &report.runs {
            assert_eq!(run.clipped_mass, 0.0);
            for i in (0..4).filter(|i| !run.sites.contains(i)) {
                assert!(run.states[i].sub(parts[i].matrix()).max_abs() < 1e-8, "run {} site {i}", run.run);
            }
            if run.sites.is_empty() {
                assert!((run.energy - h.expectation(&rho).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn swap_rounding_cannot_beat_product_bound() {
        let pol = NumericPolicy::default();
        let g = InteractionGraph::unweighted(2, &[(0, 1)]).unwrap();
        let meta = InstanceMeta { family: "swap".into(), seed: 0, ensemble: None };
        let h = HamiltonianInstance::uniform(2, g, &gates::swap(2), meta, &pol).unwrap();
        let p = build_moment_problem(&h, 2, &pol).unwrap();
        let sol = solve_sdp(&p, &SdpOptions::from_policy(&pol)).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-5);
        let report = propagation_sampling(&p, &sol, &h, &icosahedral_povm(), 0, 30, Some(-1.0), &pol).unwrap();
        assert!(report.runs.iter().all(|r| r.energy >= -1e-9), "{}", report.min_energy);
        assert!(report.gap >= 1.0 - 1e-6);
    }

    #[test]
    fn bloch_vectors_of_basis_states() {
        assert_eq!(bloch_vector(&Matrix::projector(&gates::basis(2, 0))), [0.0, 0.0, 1.0]);
    }
}
