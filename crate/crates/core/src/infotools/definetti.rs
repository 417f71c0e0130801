use serde::Serialize;

use super::decoupling::combinations;
use crate::measurement::{for_each_outcome, Povm};
use crate::tensor::{partial_trace_matrix, trace_norm, DensityMatrix};
use crate::{Distribution, Error, Matrix, NumericPolicy, Result};

/// Outcome of conditioning a distribution on `sites = outcomes`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditioningRecord {
    pub sites: Vec<usize>,
    pub outcomes: Vec<usize>,
    /// Marginal probability of the observed outcomes.
    pub weight: f64,
    /// Distribution of the remaining variables, ascending.
    pub conditional: Distribution,
}

/// Every positive-probability conditioning of `p` on `sites`.
pub fn conditioning_records(p: &Distribution, sites: &[usize]) -> Result<Vec<ConditioningRecord>> {
    let sizes: Vec<usize> = sites.iter().map(|&v| p.sizes()[v]).collect();
    let count: usize = sizes.iter().product();
    let mut out = Vec::new();
    let mut values = vec![0usize; sites.len()];
    for _ in 0..count {
        if let Some((weight, conditional)) = p.condition(sites, &values)? {
            out.push(ConditioningRecord { sites: sites.to_vec(), outcomes: values.clone(), weight, conditional });
        }
        super::distribution::increment(&mut values, &sizes);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TCheck {
    pub t: usize,
    pub best_m: usize,
    pub best_value: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeFinettiReport {
    pub k: usize,
    /// `values[m]`: expected squared distance to product after conditioning
    /// on `m` random variables.
    pub values: Vec<f64>,
    pub checks: Vec<TCheck>,
    pub holds: bool,
}

fn checks(values: &[f64], t_max: usize, bound: impl Fn(usize) -> f64) -> Vec<TCheck> {
    (1..=t_max)
        .map(|t| {
            let (best_m, &best_value) = values[..=t]
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
                .expect("nonempty");
            let bound = bound(t);
            TCheck { t, best_m, best_value, bound, holds: best_value <= bound + 1e-12 }
        })
        .collect()
}

fn check_t(n: usize, k: usize, t_max: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::Contract(format!("need 2 ≤ k ≤ n, got k = {k}")));
    }
    if t_max == 0 || t_max > n - k {
        return Err(Error::Contract(format!("need 1 ≤ t ≤ n − k = {}, got {t_max}", n - k)));
    }
    Ok(())
}

/// `‖p^{I} − ⊗_{i∈I} p^{i}‖₁²` for the variables `vars` of `p`.
fn squared_product_distance(p: &Distribution, vars: &[usize]) -> Result<f64> {
    let joint = p.marginal(vars)?;
    let d = joint.l1_distance(&joint.product_of_marginals())?;
    Ok(d * d)
}

/// Exact classical de Finetti check for every `t ≤ t_max`, bound
/// `2k² ln|Σ| / t` with `|Σ|` the largest alphabet.
pub fn definetti_classical(p: &Distribution, k: usize, t_max: usize, policy: &NumericPolicy) -> Result<DeFinettiReport> {
    let n = p.n_vars();
    check_t(n, k, t_max)?;
    let sigma = *p.sizes().iter().max().expect("nonempty") as f64;
    let all: Vec<usize> = (0..n).collect();
    let mut values = Vec::with_capacity(t_max + 1);
    for m in 0..=t_max {
        let js = combinations(&all, m);
        let work = js.len().saturating_mul(p.len());
        if work > policy.max_enumeration.saturating_mul(16) {
            return Err(Error::InstanceTooLarge { entries: work, cap: policy.max_enumeration });
        }
        let mut acc = 0.0;
        for j in &js {
            let is = combinations(&(0..n - m).collect::<Vec<_>>(), k);
            for rec in conditioning_records(p, j)? {
                let inner: f64 = is.iter().map(|i| squared_product_distance(&rec.conditional, i)).sum::<Result<f64>>()?;
                acc += rec.weight * inner / is.len() as f64;
            }
        }
        values.push(acc / js.len() as f64);
    }
    let k2 = (k * k) as f64;
    let checks = checks(&values, t_max, |t| 2.0 * k2 * sigma.ln() / t as f64);
    let holds = checks.iter().all(|c| c.holds);
    Ok(DeFinettiReport { k, values, checks, holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetricReport {
    pub k: usize,
    /// `values[m] = ‖p^{1..k} − Σ_x p(x_J) q_x^{⊗k}‖₁` with `J` the last `m` variables.
    pub values: Vec<f64>,
    pub best_m: usize,
    /// `√(2k² ln|Σ| / (n − k))`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `p(x) = p(sorted x)` for every outcome.
pub fn is_permutation_symmetric(p: &Distribution, tol: f64) -> bool {
    let sizes = p.sizes();
    if sizes.iter().any(|&s| s != sizes[0]) {
        return false;
    }
    (0..p.len()).all(|idx| {
        let mut x = p.outcome(idx);
        x.sort_unstable();
        (p.probs()[idx] - p.probs()[p.index(&x)]).abs() <= tol
    })
}

/// De Finetti approximation of a symmetric distribution by the mixture of
/// i.i.d. conditionals.
pub fn definetti_symmetric(p: &Distribution, k: usize) -> Result<SymmetricReport> {
    let n = p.n_vars();
    check_t(n, k, n.saturating_sub(k).max(1))?;
    if !is_permutation_symmetric(p, 1e-12) {
        return Err(Error::Contract("distribution is not permutation symmetric".into()));
    }
    let sigma = p.sizes()[0];
    let first: Vec<usize> = (0..k).collect();
    let target = p.marginal(&first)?;
    let mut values = Vec::new();
    for m in 0..=n - k {
        let j: Vec<usize> = (n - m..n).collect();
        let mut mix = vec![0.0; target.len()];
        for rec in conditioning_records(p, &j)? {
            let q = rec.conditional.marginal_mask(1);
            let iid = Distribution::product(&vec![q; k])?;
            for (slot, v) in mix.iter_mut().zip(iid.probs()) {
                *slot += rec.weight * v;
            }
        }
        let mix = Distribution::new(vec![sigma; k], mix)?;
        values.push(target.l1_distance(&mix)?);
    }
    let (best_m, &best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
        .expect("nonempty");
    let bound = (2.0 * (k * k) as f64 * (sigma as f64).ln() / (n - k) as f64).sqrt();
    Ok(SymmetricReport { k, values, best_m, bound, holds: best <= bound + 1e-12 })
}

/// Quantum de Finetti check: condition on POVM outcomes of `m` random sites
/// and compare `k`-site marginals with the product of their single-site
/// marginals; bound `4 ln(d) (18d)^k k² / t`.
pub fn definetti_quantum(rho: &DensityMatrix<f64>, povm: &Povm, k: usize, t_max: usize, policy: &NumericPolicy) -> Result<DeFinettiReport> {
    let n = rho.n_sites();
    check_t(n, k, t_max)?;
    let d = povm.d();
    if rho.dims().iter().any(|&x| x != d) {
        return Err(Error::DimensionMismatch("state and POVM dimensions differ".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let work: usize = (0..=t_max)
        .map(|m| combinations(&all, m).len().saturating_mul(povm.outcomes().saturating_pow(m as u32)))
        .fold(0, usize::saturating_add);
    if work > policy.max_enumeration {
        return Err(Error::InstanceTooLarge { entries: work, cap: policy.max_enumeration });
    }
    let mut values = Vec::with_capacity(t_max + 1);
    for m in 0..=t_max {
        let js = combinations(&all, m);
        let rest_dims = vec![d; n - m];
        let is = combinations(&(0..n - m).collect::<Vec<_>>(), k);
        let mut acc = 0.0;
        for j in &js {
            let mut failure = None;
            for_each_outcome(rho.matrix(), rho.dims(), j, povm, &mut |_, x| {
                let p = x.trace().re;
                if p <= 1e-15 || failure.is_some() {
                    return;
                }
                let state = x.scale(1.0 / p);
                let mut inner = 0.0;
                for i in &is {
                    match product_distance(&state, &rest_dims, i, policy) {
                        Ok(v) => inner += v * v,
                        Err(e) => failure = Some(e),
                    }
                }
                acc += p * inner / is.len() as f64;
            });
            if let Some(e) = failure {
                return Err(e);
            }
        }
        values.push(acc / js.len() as f64);
    }
    let (dd, k2) = (d as f64, (k * k) as f64);
    let checks = checks(&values, t_max, |t| 4.0 * dd.ln() * (18.0 * dd).powi(k as i32) * k2 / t as f64);
    let holds = checks.iter().all(|c| c.holds);
    Ok(DeFinettiReport { k, values, checks, holds })
}

/// `‖ρ^{I} − ⊗_{i∈I} ρ^{i}‖₁`.
fn product_distance(state: &Matrix, dims: &[usize], sites: &[usize], policy: &NumericPolicy) -> Result<f64> {
    let joint = partial_trace_matrix(state, dims, sites);
    let mut prod = Matrix::identity(1);
    for &s in sites {
        prod = prod.kron(&partial_trace_matrix(state, dims, &[s]));
    }
    trace_norm(&joint.sub(&prod), policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::icosahedral_povm;
    use crate::random::{random_distribution, random_symmetric_distribution};

    fn ghz_bits(n: usize) -> Distribution {
        let mut p = vec![0.0; 1 << n];
        p[0] = 0.5;
        p[(1 << n) - 1] = 0.5;
        Distribution::new(vec![2; n], p).unwrap()
    }

    /// Oracle: ordered tuples `j`, `i`, conditioning by filtering the joint
    /// marginal on `j ∪ i` directly.
    fn brute_value(p: &Distribution, k: usize, m: usize) -> f64 {
        let n = p.n_vars();
        let mut ordered: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..m + k {
            let mut next = Vec::new();
            for t in &ordered {
                for v in (0..n).filter(|v| !t.contains(v)) {
                    next.push([t.clone(), vec![v]].concat());
                }
            }
            ordered = next;
        }
        let mut total = 0.0;
        for t in &ordered {
            let joint = p.marginal(t).unwrap();
            let jsz: usize = 1 << m;
            for x in 0..jsz {
                let block: Vec<f64> = joint.probs()[x << k..(x + 1) << k].to_vec();
                let w: f64 = block.iter().sum();
                if w <= 0.0 {
                    continue;
                }
                let cond = Distribution::new(vec![2; k], block.iter().map(|v| v / w).collect()).unwrap();
                let d = cond.l1_distance(&cond.product_of_marginals()).unwrap();
                total += w * d * d;
            }
        }
        total / ordered.len() as f64
    }

    #[test]
    fn ghz_decouples_after_one_condition() {
        let r = definetti_classical(&ghz_bits(5), 2, 3, &NumericPolicy::default()).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-12);
        assert!(r.values[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(r.holds);
        assert_eq!(r.checks[0].best_m, 1);
    }

    #[test]
    fn iid_is_zero() {
        let p = Distribution::product(&vec![vec![0.3, 0.7]; 5]).unwrap();
        let r = definetti_classical(&p, 2, 3, &NumericPolicy::default()).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn matches_ordered_oracle() {
        let mut rng = crate::rng::rng(12);
        let p = random_distribution(&[2; 5], &mut rng);
        let r = definetti_classical(&p, 2, 3, &NumericPolicy::default()).unwrap();
        for m in 0..=3 {
            assert!((r.values[m] - brute_value(&p, 2, m)).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn symmetric_corollary_holds() {
        let mut rng = crate::rng::rng(4);
        for _ in 0..5 {
            let p = random_symmetric_distribution(6, 2, &mut rng);
            let r = definetti_symmetric(&p, 2).unwrap();
            assert!(r.holds, "{r:?}");
            // m = n − k conditions on everything else: the mixture is exact
            // for k = 1 and here must lie within the bound.
            assert_eq!(r.values.len(), 5);
        }
        assert!(definetti_symmetric(&random_distribution(&[2; 4], &mut rng), 2).is_err());
    }

    #[test]
    fn rejects_bad_t() {
        assert!(definetti_classical(&ghz_bits(4), 2, 3, &NumericPolicy::default()).is_err());
    }

    #[test]
    fn quantum_product_is_zero_and_random_holds() {
        let pol = NumericPolicy::default();
        let povm = icosahedral_povm();
        let mut rng = crate::rng::rng(6);
        let vs: Vec<_> = (0..4).map(|_| crate::random::haar_vector(2, &mut rng)).collect();
        let prod = DensityMatrix::product_pure(&vs);
        let r = definetti_quantum(&prod, &povm, 2, 2, &pol).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-10), "{:?}", r.values);
        let rho = crate::random::random_pure(&[2; 4], &mut rng);
        let r = definetti_quantum(&rho, &povm, 2, 2, &pol).unwrap();
        assert!(r.holds);
        // m = 0 oracle: plain average over pairs.
        let mut want = 0.0;
        for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            let v = product_distance(rho.matrix(), &[2; 4], &[a, b], &pol).unwrap();
            want += v * v / 6.0;
        }
        assert!((r.values[0] - want).abs() < 1e-12);
    }
}
