use serde::Serialize;

use super::{for_each_outcome, Povm};
use crate::random::traceless_hermitian;
use crate::rng::child;
use crate::tensor::trace_norm;
use crate::{Matrix, NumericPolicy, Result};

/// `‖ξ‖₁ / ‖Λ^{⊗k}(ξ)‖₁` for an operator `ξ` on `k` copies of `ℂ^d`.
pub fn distortion_ratio(povm: &Povm, xi: &Matrix, k: usize, policy: &NumericPolicy) -> Result<f64> {
    let dims = vec![povm.d(); k];
    let sites: Vec<usize> = (0..k).collect();
    let mut l1 = 0.0;
    for_each_outcome(xi, &dims, &sites, povm, &mut |_, m| l1 += m[(0, 0)].re.abs());
    Ok(trace_norm(xi, policy)? / l1)
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    pub k: usize,
    pub trials: usize,
    pub estimate: f64,
    /// `(18 d)^{k/2}`.
    pub bound: f64,
    pub holds: bool,
}

/// Largest ratio found over `trials` random traceless Hermitian starts, each
/// refined by a short accept-if-better random walk.
pub fn distortion_estimate(povm: &Povm, k: usize, trials: usize, seed: u64, policy: &NumericPolicy) -> Result<DistortionReport> {
    let dim = povm.d().pow(k as u32);
    policy.check_entries(dim * dim * povm.outcomes().pow(k as u32))?;
    let mut best = 0.0f64;
    for t in 0..trials {
        let mut rng = child(seed, t as u64);
        let mut xi = traceless_hermitian(dim, &mut rng);
        let mut value = distortion_ratio(povm, &xi, k, policy)?;
        let mut step = 0.3;
        for _ in 0..40 {
            let mut cand = xi.clone();
            cand.axpy(crate::scalar::C::new(step, 0.0), &traceless_hermitian(dim, &mut rng));
            let v = distortion_ratio(povm, &cand, k, policy)?;
            if v > value {
                value = v;
                xi = cand;
                step *= 1.2;
            } else {
                step *= 0.8;
            }
        }
        best = best.max(value);
    }
    let bound = (18.0 * povm.d() as f64).powf(k as f64 / 2.0);
    Ok(DistortionReport { k, trials, estimate: best, bound, holds: best <= bound })
}
