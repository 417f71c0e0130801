use crate::scalar::Real;
use crate::tensor::{hermitian_eig, partial_trace, DensityMatrix};
use crate::{Error, NumericPolicy, Result};

/// Von Neumann entropy `−tr ρ ln ρ` in nats.
pub fn von_neumann<T: Real>(rho: &DensityMatrix<T>, policy: &NumericPolicy) -> Result<T> {
    let e = hermitian_eig(rho.matrix(), policy)?;
    Ok(e.values.iter().filter(|&&v| v > T::zero()).map(|&v| -v * v.ln()).sum())
}

/// Entropy of the marginal on `sites`.
pub fn marginal_entropy<T: Real>(rho: &DensityMatrix<T>, sites: &[usize], policy: &NumericPolicy) -> Result<T> {
    if sites.is_empty() {
        return Ok(T::zero());
    }
    von_neumann(&partial_trace(rho, sites), policy)
}

fn check_disjoint(n: usize, groups: &[&[usize]]) -> Result<()> {
    let mut seen = vec![false; n];
    for g in groups {
        for &v in *g {
            if v >= n || seen[v] {
                return Err(Error::Invalid(format!("site groups overlap or exceed {n} sites")));
            }
            seen[v] = true;
        }
    }
    Ok(())
}

/// Multipartite quantum mutual information `Σ S(Q_g) − S(Q_1…Q_k)`.
pub fn quantum_mutual_information<T: Real>(rho: &DensityMatrix<T>, groups: &[&[usize]], policy: &NumericPolicy) -> Result<T> {
    check_disjoint(rho.n_sites(), groups)?;
    let mut s = T::zero();
    let mut union = Vec::new();
    for g in groups {
        s = s + marginal_entropy(rho, g, policy)?;
        union.extend_from_slice(g);
    }
    Ok(s - marginal_entropy(rho, &union, policy)?)
}

/// `I(A : B | C) = S(AC) + S(BC) − S(ABC) − S(C)`.
pub fn quantum_cmi<T: Real>(rho: &DensityMatrix<T>, a: &[usize], b: &[usize], c: &[usize], policy: &NumericPolicy) -> Result<T> {
    check_disjoint(rho.n_sites(), &[a, b, c])?;
    let join = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let ac = join(a, c);
    let bc = join(b, c);
    let abc = join(&ac, b);
    Ok(marginal_entropy(rho, &ac, policy)? + marginal_entropy(rho, &bc, policy)?
        - marginal_entropy(rho, &abc, policy)?
        - marginal_entropy(rho, c, policy)?)
}
