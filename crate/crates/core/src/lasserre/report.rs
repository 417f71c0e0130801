use serde::Serialize;

use super::problem::build_moment_problem;
use super::solver::{solve_sdp, SdpOptions};
use crate::hamiltonian::HamiltonianInstance;
use crate::{Error, NumericPolicy, Result};

/// Tolerance for the ordering checks between levels and against `e0`.
const SANDWICH_TOL: f64 = 1e-5;
/// Largest moment-matrix side the hierarchy is run at.
pub const SIDE_CAP: usize = 300;

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub k: usize,
    pub side: usize,
    pub objective: f64,
    pub lower_bound: f64,
    pub psd_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub n: usize,
    pub levels: Vec<LevelRecord>,
    /// `None` when the instance is too large to diagonalise.
    pub e0: Option<f64>,
    pub monotone: bool,
    pub below_e0: bool,
    /// Whether `v_n = e0`; `None` unless the top level reaches `n`.
    pub exact_at_n: Option<bool>,
    pub holds: bool,
}

/// Solves levels `1..=kmax` and checks `v_1 ≤ … ≤ v_kmax ≤ e0`, with
/// equality at `k = n`.
pub fn sdp_sandwich(h: &HamiltonianInstance, kmax: usize, options: &SdpOptions, policy: &NumericPolicy) -> Result<SandwichReport> {
    let n = h.n();
    if kmax == 0 || kmax > n {
        return Err(Error::InvalidSpec(format!("kmax must lie in 1..={n}, got {kmax}")));
    }
    let e0 = match h.ground_energy(policy) {
        Ok((e, _)) => Some(e),
        Err(Error::InstanceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut levels = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let problem = build_moment_problem(h, k, policy)?;
        let sol = solve_sdp(&problem, options)?;
        levels.push(LevelRecord {
            k,
            side: problem.side(),
            objective: sol.objective,
            lower_bound: sol.lower_bound,
            psd_residual: sol.psd_residual,
            iterations: sol.iterations,
            converged: sol.converged,
        });
    }
    let monotone = levels.windows(2).all(|w| w[0].objective <= w[1].objective + SANDWICH_TOL);
    let below_e0 = e0.is_none_or(|e| levels.iter().all(|l| l.objective <= e + SANDWICH_TOL));
    let exact_at_n = match (e0, levels.last()) {
        (Some(e), Some(top)) if top.k == n => Some((top.objective - e).abs() <= SANDWICH_TOL),
        _ => None,
    };
    let holds = monotone && below_e0 && exact_at_n != Some(false) && levels.iter().all(|l| l.converged);
    Ok(SandwichReport { n, levels, e0, monotone, below_e0, exact_at_n, holds })
}

/// Moment-matrix side at level `k`: `Σ_{w≤k} C(n,w) 3^w`.
pub fn basis_side(n: usize, k: usize) -> usize {
    let mut side = 0usize;
    let mut binom = 1usize;
    for w in 0..=k.min(n) {
        side = side.saturating_add(binom.saturating_mul(3usize.saturating_pow(w as u32)));
        binom = binom * (n - w) / (w + 1);
    }
    side
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRankReport {
    pub n: usize,
    pub d: usize,
    pub degree: Option<usize>,
    pub epsilon: f64,
    /// `(λ, rank_λ)` on a fixed grid.
    pub grid: Vec<(f64, usize)>,
    pub rank_half: usize,
    /// `(ε/d)²`, one instantiation of the unspecified `poly(ε/d)` threshold.
    pub lambda_eps: f64,
    pub rank_eps: usize,
    /// Largest level whose moment matrix fits `SIDE_CAP`.
    pub k_cap: usize,
    /// Whether `rank_eps ≤ k_cap`.
    pub within_caps: bool,
    /// `n ≥ 8 k_cap / ε`.
    pub size_condition: bool,
    /// Rank at `(ε/d)²` is at most a quarter of the sites.
    pub low_rank: bool,
}

/// Descriptive threshold-rank statistics of the interaction graph.
///
/// Only eigenvalues above `λ` are counted, so bipartite graphs are not
/// penalised for their `−1` eigenvalue.
pub fn threshold_rank_certificate(h: &HamiltonianInstance, epsilon: f64, policy: &NumericPolicy) -> Result<ThresholdRankReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidSpec(format!("epsilon must be positive, got {epsilon}")));
    }
    let g = h.graph();
    let n = h.n();
    let d = h.d();
    let spectrum = g.walk_spectrum(policy)?;
    let rank = |lambda: f64| spectrum.iter().filter(|&&v| v > lambda + 1e-12).count();
    let grid: Vec<(f64, usize)> = [0.9, 0.75, 0.5, 0.25, 0.1, 0.05].iter().map(|&l| (l, rank(l))).collect();
    let lambda_eps = (epsilon / d as f64).powi(2);
    let rank_eps = rank(lambda_eps);
    let k_cap = (1..=n).take_while(|&k| basis_side(n, k) <= SIDE_CAP).last().unwrap_or(0);
    Ok(ThresholdRankReport {
        n,
        d,
        degree: g.regular_degree(),
        epsilon,
        grid,
        rank_half: rank(0.5),
        lambda_eps,
        rank_eps,
        k_cap,
        within_caps: rank_eps <= k_cap,
        size_condition: n as f64 >= 8.0 * k_cap as f64 / epsilon,
        low_rank: 4 * rank_eps <= n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_instance, Ensemble, Family, GeneratorSpec, InstanceMeta, InteractionGraph};
    use crate::tensor::gates;

    fn instance(g: InteractionGraph) -> HamiltonianInstance {
        let meta = InstanceMeta { family: "test".into(), seed: 0, ensemble: None };
        HamiltonianInstance::uniform(2, g, &gates::swap(2), meta, &NumericPolicy::default()).unwrap()
    }

    #[test]
    fn ring_of_three_is_exact_at_top_level() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Ring { n: 3 }, ensemble: Ensemble::RandomHermitian, d: 2 };
        let h = build_instance(&spec, 5).unwrap();
        let r = sdp_sandwich(&h, 3, &SdpOptions::from_policy(&pol), &pol).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.exact_at_n, Some(true));
    }

    #[test]
    fn classical_levels_stay_below_optimum() {
        let pol = NumericPolicy::default();
        let spec = GeneratorSpec { family: Family::Ring { n: 4 }, ensemble: Ensemble::ClassicalDiagonal, d: 2 };
        let h = build_instance(&spec, 1).unwrap();
        // Classical optimum by enumeration over basis states.
        let full = h.assemble_full(&pol).unwrap();
        let best = (0..16).map(|x| full[(x, x)].re).fold(f64::INFINITY, f64::min);
        let r = sdp_sandwich(&h, 2, &SdpOptions::from_policy(&pol), &pol).unwrap();
        assert!((r.e0.unwrap() - best).abs() < 1e-9);
        assert!(r.holds && r.levels.iter().all(|l| l.objective <= best + 1e-5));
    }

    #[test]
    fn side_matches_problem() {
        let pol = NumericPolicy::default();
        let h = instance(InteractionGraph::ring(5).unwrap());
        for k in 1..=3 {
            assert_eq!(basis_side(5, k), build_moment_problem(&h, k, &pol).unwrap().side());
        }
    }

    #[test]
    fn threshold_ranks_of_standard_graphs() {
        let pol = NumericPolicy::default();
        let complete = threshold_rank_certificate(&instance(InteractionGraph::complete(6).unwrap()), 0.5, &pol).unwrap();
        assert_eq!(complete.rank_half, 1);
        assert!(complete.low_rank);
        let pairs = threshold_rank_certificate(&instance(InteractionGraph::disjoint_edges(8).unwrap()), 0.5, &pol).unwrap();
        assert_eq!(pairs.rank_half, 4);
        let small = threshold_rank_certificate(&instance(InteractionGraph::ring(8).unwrap()), 0.5, &pol).unwrap();
        let large = threshold_rank_certificate(&instance(InteractionGraph::ring(16).unwrap()), 0.5, &pol).unwrap();
        assert!(large.rank_eps > small.rank_eps);
        assert!(!small.low_rank && !large.low_rank);
        assert_eq!(small.degree, Some(2));
        assert!(small.grid.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
