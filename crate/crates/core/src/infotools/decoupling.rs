use rand::Rng as _;
use serde::Serialize;

use super::{mask_of, EntropyCache};
use crate::hamiltonian::BlockPartition;
use crate::rng::child;
use crate::{Distribution, Error, NumericPolicy, Result};

/// All `r`-subsets of `items`, lexicographic.
pub(crate) fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < r - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, r, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// The conditioning set minimising the pairwise conditional information.
#[derive(Debug, Clone, Serialize)]
pub struct DerandomizedChoice {
    pub k_prime: usize,
    pub conditioned: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    pub k: usize,
    /// `E_{k'<k} E_{(a,b,c)∼μ^{∧k'+2}} I(X_a : X_b | X_c)`.
    pub lhs: f64,
    /// `(1/k) E_{i∼μ} I(X_i : X_{−i})`.
    pub rhs: f64,
    /// Per-`k'` inner expectations.
    pub per_k_prime: Vec<f64>,
    pub exact: bool,
    /// Standard error of `lhs` in Monte Carlo mode.
    pub std_error: Option<f64>,
    pub best: Option<DerandomizedChoice>,
    /// Asserted only in exact mode.
    pub holds: Option<bool>,
}

const MC_SAMPLES: usize = 20_000;

/// Exact (or, beyond `policy.max_enumeration` tuples, seeded Monte Carlo)
/// evaluation of the self-decoupling inequality for site weights `mu`.
pub fn self_decoupling(p: &Distribution, mu: &[f64], k: usize, seed: u64, policy: &NumericPolicy) -> Result<DecouplingReport> {
    let n = p.n_vars();
    if mu.len() != n || mu.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Invalid("site weights must be nonnegative, one per variable".into()));
    }
    let total: f64 = mu.iter().sum();
    let mu: Vec<f64> = mu.iter().map(|w| w / total).collect();
    let supp: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    if k == 0 || k >= supp.len() {
        return Err(Error::Contract(format!("need 0 < k < |supp μ| = {}, got k = {k}", supp.len())));
    }
    let mut cache = EntropyCache::new(p);
    let full = mask_of(&(0..n).collect::<Vec<_>>());
    let rhs = supp
        .iter()
        .map(|&i| mu[i] * cache.cmi(1 << i, full & !(1 << i), 0))
        .sum::<f64>()
        / k as f64;

    let count: usize = (0..k)
        .map(|kp| supp.len() * (supp.len() - 1) * binomial(supp.len() - 2, kp))
        .fold(0usize, |a, b| a.saturating_add(b));
    let exact = count <= policy.max_enumeration;
    let mut per_k_prime = Vec::with_capacity(k);
    let mut variance = 0.0;
    let mut best: Option<DerandomizedChoice> = None;
    for kp in 0..k {
        if exact {
            let mut num = 0.0;
            let mut den = 0.0;
            for c in combinations(&supp, kp) {
                let wc: f64 = c.iter().map(|&v| mu[v]).product();
                let cm = mask_of(&c);
                let rest: Vec<usize> = supp.iter().copied().filter(|v| !c.contains(v)).collect();
                let (mut cnum, mut cden) = (0.0, 0.0);
                for &a in &rest {
                    for &b in &rest {
                        if a != b {
                            let w = mu[a] * mu[b];
                            let i = cache.cmi(1 << a, 1 << b, cm);
                            cnum += w * i;
                            cden += w;
                        }
                    }
                }
                num += wc * cnum;
                den += wc * cden;
                let value = cnum / cden;
                if best.as_ref().is_none_or(|b| value < b.value) {
                    best = Some(DerandomizedChoice { k_prime: kp, conditioned: c.clone(), value });
                }
            }
            per_k_prime.push(num / den);
        } else {
            let mut rng = child(seed, kp as u64);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..MC_SAMPLES {
                let tuple = sample_distinct(&mu, kp + 2, &mut rng);
                let i = cache.cmi(1 << tuple[0], 1 << tuple[1], mask_of(&tuple[2..]));
                s += i;
                s2 += i * i;
            }
            let mean = s / MC_SAMPLES as f64;
            variance += (s2 / MC_SAMPLES as f64 - mean * mean).max(0.0) / MC_SAMPLES as f64;
            per_k_prime.push(mean);
        }
    }
    let lhs = per_k_prime.iter().sum::<f64>() / k as f64;
    Ok(DecouplingReport {
        k,
        lhs,
        rhs,
        per_k_prime,
        exact,
        std_error: (!exact).then(|| variance.sqrt() / k as f64),
        best,
        holds: exact.then_some(lhs <= rhs + 1e-12),
    })
}

/// Rejection sampling from `μ^{∧m}`: i.i.d. draws, kept only if distinct.
fn sample_distinct(mu: &[f64], m: usize, rng: &mut crate::rng::Rng) -> Vec<usize> {
    loop {
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            let mut u = rng.random::<f64>();
            let mut pick = mu.len() - 1;
            for (i, &w) in mu.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            out.push(pick);
        }
        let mut sorted = out.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == m {
            return out;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockDecouplingReport {
    pub k: usize,
    /// `(1/k) Σ_{k'<k} E_w E_{i≠w} E_{(b,c)} I(X_i : Y_b | Y_c)` with `b, c` in block `w`.
    pub lhs_lemma: f64,
    /// `E_i E_{a∉V_i∪C} I(X_i : Y_a | Y_{c^{B(a)}})` at the selected `k'` and sites.
    pub lhs_derandomized: f64,
    /// `(1/k) E_{i≠j} I(X_i : X_j)`.
    pub rhs: f64,
    pub k_prime: usize,
    /// Selected conditioning sites, one list per block.
    pub conditioned: Vec<Vec<usize>>,
    pub holds: bool,
}

/// Exact block self-decoupling with uniform weights over blocks and sites.
pub fn block_self_decoupling(p: &Distribution, partition: &BlockPartition, k: usize, policy: &NumericPolicy) -> Result<BlockDecouplingReport> {
    if partition.n_sites() != p.n_vars() {
        return Err(Error::DimensionMismatch("partition does not cover the variables".into()));
    }
    let m = partition
        .uniform_size()
        .ok_or_else(|| Error::InvalidSpec("block decoupling needs equal blocks".into()))?;
    let nb = partition.len();
    if nb < 2 || k == 0 || k >= m {
        return Err(Error::Contract(format!("need at least two blocks and 0 < k < m = {m}, got k = {k}")));
    }
    let work = nb * (nb - 1) * (0..k).map(|kp| binomial(m, kp) * m).sum::<usize>();
    if work > policy.max_enumeration {
        return Err(Error::InstanceTooLarge { entries: work, cap: policy.max_enumeration });
    }
    let masks: Vec<u64> = partition.blocks().iter().map(|b| mask_of(b)).collect();
    let mut cache = EntropyCache::new(p);
    let mut rhs = 0.0;
    for i in 0..nb {
        for j in 0..nb {
            if i != j {
                rhs += cache.cmi(masks[i], masks[j], 0);
            }
        }
    }
    rhs /= (nb * (nb - 1) * k) as f64;

    let mut lemma = 0.0;
    let mut best: Option<(f64, usize, Vec<Vec<usize>>)> = None;
    for kp in 0..k {
        let mut avg_over_blocks = 0.0;
        let mut min_over_blocks = 0.0;
        let mut chosen = Vec::with_capacity(nb);
        for (w, block) in partition.blocks().iter().enumerate() {
            let subsets = combinations(block, kp);
            let mut sum = 0.0;
            let mut block_best: Option<(f64, Vec<usize>)> = None;
            for c in subsets.iter() {
                let cm = mask_of(c);
                let mut f = 0.0;
                let mut cnt = 0usize;
                for (i, &xi) in masks.iter().enumerate() {
                    if i == w {
                        continue;
                    }
                    for &a in block.iter().filter(|a| !c.contains(a)) {
                        f += cache.cmi(xi, 1 << a, cm);
                        cnt += 1;
                    }
                }
                let f = f / cnt as f64;
                sum += f;
                if block_best.as_ref().is_none_or(|(v, _)| f < *v) {
                    block_best = Some((f, c.clone()));
                }
            }
            avg_over_blocks += sum / subsets.len() as f64;
            let (v, c) = block_best.expect("at least one subset");
            min_over_blocks += v;
            chosen.push(c);
        }
        lemma += avg_over_blocks / nb as f64;
        let derand = min_over_blocks / nb as f64;
        if best.as_ref().is_none_or(|(v, _, _)| derand < *v) {
            best = Some((derand, kp, chosen));
        }
    }
    let lhs_lemma = lemma / k as f64;
    let (lhs_derandomized, k_prime, conditioned) = best.expect("k ≥ 1");
    Ok(BlockDecouplingReport {
        k,
        lhs_lemma,
        lhs_derandomized,
        rhs,
        k_prime,
        conditioned,
        holds: lhs_lemma <= rhs + 1e-12 && lhs_derandomized <= rhs + 1e-12,
    })
}
