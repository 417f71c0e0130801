use rand::Rng as _;
use serde::Serialize;

use super::{quantum_mutual_information, von_neumann, JointDistribution};
use crate::measurement::{icosahedral_povm, luders_site, measure_channel, condition_on_outcomes};
use crate::random::{random_distribution, random_mixed};
use crate::rng::child;
use crate::tensor::{partial_trace, trace_norm, DensityMatrix};
use crate::{Distribution, NumericPolicy, Result};

/// Worst-case residuals of the entropy identities and slacks of the
/// inequalities over a seeded sweep. Slacks are `rhs − lhs` for `lhs ≤ rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub classical_trials: usize,
    pub quantum_trials: usize,
    pub chain_rule_error: f64,
    pub multipartite_error: f64,
    /// Entropy-combination versus average-over-conditionals CMI.
    pub cmi_forms_error: f64,
    pub pinsker_slack: f64,
    pub upper_limit_slack: f64,
    pub monotonicity_slack: f64,
    pub qc_monotonicity_slack: f64,
    pub identity_tol: f64,
    pub violations: usize,
    pub holds: bool,
}

struct Tally {
    chain: f64,
    multi: f64,
    forms: f64,
    pinsker: f64,
    upper: f64,
    mono: f64,
    qc: f64,
}

impl Tally {
    fn new() -> Self {
        let inf = f64::INFINITY;
        Self { chain: 0.0, multi: 0.0, forms: 0.0, pinsker: inf, upper: inf, mono: inf, qc: inf }
    }
}

/// Average-over-conditionals multipartite information `Σ_r p(r) I(Q_1:…:Q_k)_{p_r}`.
fn multipartite_by_conditioning(p: &Distribution, groups: &[&[usize]], r: &[usize]) -> Result<f64> {
    let sizes: Vec<usize> = r.iter().map(|&v| p.sizes()[v]).collect();
    let count: usize = sizes.iter().product();
    let remap = |v: usize| v - r.iter().filter(|&&x| x < v).count();
    let mapped: Vec<Vec<usize>> = groups.iter().map(|g| g.iter().map(|&v| remap(v)).collect()).collect();
    let refs: Vec<&[usize]> = mapped.iter().map(Vec::as_slice).collect();
    let mut values = vec![0usize; r.len()];
    let mut total = 0.0;
    for _ in 0..count {
        if let Some((w, cond)) = p.condition(r, &values)? {
            total += w * cond.mutual_information(&refs)?;
        }
        super::distribution::increment(&mut values, &sizes);
    }
    Ok(total)
}

/// Applies a random column-stochastic map to variable `v`.
fn local_stochastic(p: &Distribution, v: usize, rng: &mut crate::rng::Rng) -> Result<Distribution> {
    let a = p.sizes()[v];
    let b = 2 + rng.random_range(0..2);
    let channel: Vec<Vec<f64>> = (0..a)
        .map(|_| {
            let w: Vec<f64> = (0..b).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut sizes = p.sizes().to_vec();
    sizes[v] = b;
    let mut out = vec![0.0; sizes.iter().product()];
    for (idx, &q) in p.probs().iter().enumerate() {
        let mut x = p.outcome(idx);
        let from = x[v];
        for (y, &t) in channel[from].iter().enumerate() {
            x[v] = y;
            let j = x.iter().zip(&sizes).fold(0, |acc, (&d, &s)| acc * s + d);
            out[j] += q * t;
        }
    }
    Distribution::new(sizes, out)
}

fn classical_trial(p: &Distribution, rng: &mut crate::rng::Rng, t: &mut Tally) -> Result<()> {
    // Variables: A = 0, B = 1, C = 2, R = 3.
    let (a, b, c, r): (&[usize], &[usize], &[usize], &[usize]) = (&[0], &[1], &[2], &[3]);
    let i_a_br = p.mutual_information(&[a, &[1, 3]])?;
    let i_a_r = p.mutual_information(&[a, r])?;
    let cmi_avg = p.cmi_by_conditioning(a, b, r)?;
    let cmi_ent = p.conditional_mutual_information(a, b, r)?;
    t.chain = t.chain.max((i_a_br - i_a_r - cmi_avg).abs());
    t.forms = t.forms.max((cmi_avg - cmi_ent).abs());

    let multi = multipartite_by_conditioning(p, &[a, b, c], r)?;
    let split = cmi_avg + p.cmi_by_conditioning(&[0, 1], c, r)?;
    t.multi = t.multi.max((multi - split).abs());
    let multi_ent = p.conditional_multipartite_information(&[a, b, c], r)?;
    t.forms = t.forms.max((multi - multi_ent).abs());

    let abc = p.marginal(&[0, 1, 2])?;
    let i3 = abc.mutual_information(&[&[0], &[1], &[2]])?;
    let l1 = abc.l1_distance(&abc.product_of_marginals())?;
    t.pinsker = t.pinsker.min(i3 - 0.5 * l1 * l1);

    let i_ab = p.mutual_information(&[a, b])?;
    let cap = (p.sizes()[0] as f64).ln().min((p.sizes()[1] as f64).ln());
    t.upper = t.upper.min(cap - i_ab);

    let mapped = local_stochastic(p, 0, rng)?;
    let after = multipartite_by_conditioning(&mapped, &[a, b, c], r)?;
    t.mono = t.mono.min(multi - after);
    Ok(())
}

fn quantum_trial(rho: &DensityMatrix<f64>, policy: &NumericPolicy, t: &mut Tally) -> Result<()> {
    let ln2 = std::f64::consts::LN_2;
    let povm = icosahedral_povm();
    let (a, b, r): (&[usize], &[usize], &[usize]) = (&[0], &[1], &[2]);
    let i_a_br = quantum_mutual_information(rho, &[a, &[1, 2]], policy)?;
    let i_a_r = quantum_mutual_information(rho, &[a, r], policy)?;
    let cmi = super::quantum_cmi(rho, a, b, r, policy)?;
    t.chain = t.chain.max((i_a_br - i_a_r - cmi).abs());

    let i3 = quantum_mutual_information(rho, &[a, b, r], policy)?;
    let i_ab = quantum_mutual_information(rho, &[a, b], policy)?;
    let i_ab_r = quantum_mutual_information(rho, &[&[0, 1], r], policy)?;
    t.multi = t.multi.max((i3 - i_ab - i_ab_r).abs());

    // Classical register: measure R and compare the average form with the
    // entropy form evaluated on the quantum-classical state.
    let mut avg = 0.0;
    let mut h_r = 0.0;
    let (mut s_ar, mut s_br, mut s_abr) = (0.0, 0.0, 0.0);
    for x in 0..povm.outcomes() {
        if let Some((w, post)) = condition_on_outcomes(&povm, rho, &[2], &[x])? {
            avg += w * quantum_mutual_information(&post, &[&[0], &[1]], policy)?;
            h_r -= w * w.ln();
            s_ar += w * von_neumann(&partial_trace(&post, &[0]), policy)?;
            s_br += w * von_neumann(&partial_trace(&post, &[1]), policy)?;
            s_abr += w * von_neumann(&post, policy)?;
        }
    }
    let ent = (h_r + s_ar) + (h_r + s_br) - (h_r + s_abr) - h_r;
    t.forms = t.forms.max((avg - ent).abs());

    let rho_ab = partial_trace(rho, &[0, 1]);
    let prod = partial_trace(rho, &[0]).matrix().kron(partial_trace(rho, &[1]).matrix());
    let l1 = trace_norm(&rho_ab.matrix().sub(&prod), policy)?;
    t.pinsker = t.pinsker.min(i_ab - 0.5 * l1 * l1);
    t.upper = t.upper.min(2.0 * ln2 - i_ab);

    let p = measure_channel(&povm, rho, &[0, 1], policy)?;
    let i_x = p.mutual_information(&[&[0], &[1]])?;
    t.upper = t.upper.min(ln2 - i_x);
    let s_a = von_neumann(&partial_trace(rho, &[0]), policy)?;
    t.qc = t.qc.min(s_a - i_x);

    let mapped = DensityMatrix::new(rho.dims().to_vec(), luders_site(rho.matrix(), rho.dims(), 0, &povm), policy)?;
    let after = quantum_mutual_information(&mapped, &[a, b, r], policy)?;
    t.mono = t.mono.min(i3 - after);
    Ok(())
}

/// Runs the identity sweep: `classical_trials` random 4-variable
/// distributions (alphabets 2–3) and `quantum_trials` random 3-qubit states.
pub fn check_info_identities(seed: u64, classical_trials: usize, quantum_trials: usize, policy: &NumericPolicy) -> Result<IdentityReport> {
    let mut t = Tally::new();
    for trial in 0..classical_trials {
        let mut rng = child(seed, trial as u64);
        let sizes: Vec<usize> = (0..4).map(|_| 2 + rng.random_range(0..2)).collect();
        let p: JointDistribution<f64> = random_distribution(&sizes, &mut rng);
        classical_trial(&p, &mut rng, &mut t)?;
    }
    for trial in 0..quantum_trials {
        let mut rng = child(seed, (classical_trials + trial) as u64);
        let rank = 1 + rng.random_range(0..8);
        let rho = random_mixed(&[2, 2, 2], rank, &mut rng);
        quantum_trial(&rho, policy, &mut t)?;
    }
    let tol = 1e-10;
    let slack_floor = -1e-10;
    let checks = [
        t.chain <= tol,
        t.multi <= tol,
        t.forms <= tol,
        t.pinsker >= slack_floor,
        t.upper >= slack_floor,
        t.mono >= slack_floor,
        t.qc >= slack_floor,
    ];
    let violations = checks.iter().filter(|ok| !**ok).count();
    let finite = |x: f64| if x.is_finite() { x } else { 0.0 };
    Ok(IdentityReport {
        seed,
        classical_trials,
        quantum_trials,
        chain_rule_error: t.chain,
        multipartite_error: t.multi,
        cmi_forms_error: t.forms,
        pinsker_slack: finite(t.pinsker),
        upper_limit_slack: finite(t.upper),
        monotonicity_slack: finite(t.mono),
        qc_monotonicity_slack: finite(t.qc),
        identity_tol: tol,
        violations,
        holds: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_holds() {
        let r = check_info_identities(1, 50, 5, &NumericPolicy::default()).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn independent_inputs_are_trivial() {
        let p = JointDistribution::<f64>::product(&[vec![0.3, 0.7], vec![0.5, 0.5], vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        assert!(p.mutual_information(&[&[0], &[1], &[2], &[3]]).unwrap().abs() < 1e-14);
        assert!(multipartite_by_conditioning(&p, &[&[0], &[1], &[2]], &[3]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn bell_pair_saturates_upper_limit() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| crate::scalar::C::new(x, 0.0);
        let bell = DensityMatrix::from_pure(vec![2, 2], &[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let i = quantum_mutual_information(&bell, &[&[0], &[1]], &NumericPolicy::default()).unwrap();
        assert!((i - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }
}
