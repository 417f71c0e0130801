use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pauli::PauliString;
use super::problem::MomentProblem;
use super::anderson::Anderson;
use super::dense::{min_eigenvalue, psd_projection, psd_projection_with_min};
use crate::scalar::C;
use crate::{Error, Matrix, NumericPolicy, Result};

const REPAIR_ROUNDS: usize = 4;
const ANDERSON_MEMORY: usize = 5;
/// Residual-balancing: ρ is doubled or halved when primal and dual residuals
/// differ by more than this factor, checked every `ADAPT_EVERY` iterations.
const BALANCE: f64 = 1.5;
const ADAPT_EVERY: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Target width of the certified interval `[lower_bound, objective]`.
    pub tol: f64,
    pub max_iters: usize,
    pub psd_tol: f64,
    /// Iterations between certificate evaluations.
    pub check_every: usize,
}

impl SdpOptions {
    pub fn from_policy(policy: &NumericPolicy) -> Self {
        Self { tol: policy.sdp_tol, max_iters: policy.sdp_max_iters, psd_tol: policy.sdp_psd_tol, check_every: 20 }
    }
}

/// Feasible moment vector with a certified lower bound on the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSolution {
    pub n: usize,
    pub k: usize,
    /// Real expectations, ordered like `MomentProblem::moments`.
    pub m: Vec<f64>,
    /// Objective of `m` (an upper bound on the relaxation value).
    pub objective: f64,
    pub lower_bound: f64,
    /// `max(0, −λ_min)` of the moment matrix.
    pub psd_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    n: usize,
    k: usize,
    m: BTreeMap<String, f64>,
    objective: f64,
    lower_bound: f64,
    psd_residual: f64,
    iterations: usize,
    converged: bool,
}

impl MomentSolution {
    pub fn gap(&self) -> f64 {
        self.objective - self.lower_bound
    }

    pub fn moment_matrix(&self, problem: &MomentProblem) -> Matrix {
        problem.moment_matrix(&self.m)
    }

    /// Solution of an actual state's moments; the certificate is trivial.
    pub fn from_moments(problem: &MomentProblem, m: Vec<f64>) -> Result<Self> {
        if m.len() != problem.moments().len() || (m[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("moment vector must match the problem and have m_I = 1".into()));
        }
        let lo = min_eigenvalue(&problem.moment_matrix(&m))?;
        Ok(Self {
            n: problem.n(),
            k: problem.k(),
            objective: problem.objective_value(&m),
            lower_bound: f64::NEG_INFINITY,
            psd_residual: (-lo).max(0.0),
            iterations: 0,
            converged: true,
            m,
        })
    }

    pub fn to_json(&self, problem: &MomentProblem) -> String {
        let file = SolutionFile {
            n: self.n,
            k: self.k,
            m: problem.moments().iter().zip(&self.m).map(|(p, &v)| (p.label(), v)).collect(),
            objective: self.objective,
            lower_bound: self.lower_bound,
            psd_residual: self.psd_residual,
            iterations: self.iterations,
            converged: self.converged,
        };
        serde_json::to_string_pretty(&file).expect("plain data")
    }

    pub fn from_json(problem: &MomentProblem, text: &str) -> Result<Self> {
        let file: SolutionFile = serde_json::from_str(text)?;
        if file.n != problem.n() || file.k != problem.k() {
            return Err(Error::DimensionMismatch("solution level or size differs from problem".into()));
        }
        let mut m = vec![0.0; problem.moments().len()];
        for (label, v) in &file.m {
            let p = PauliString::parse(file.n, label)?;
            let i = problem.moment_index(&p).ok_or_else(|| Error::Invalid(format!("{label} above level")))?;
            m[i] = *v;
        }
        Ok(Self {
            n: file.n,
            k: file.k,
            m,
            objective: file.objective,
            lower_bound: file.lower_bound,
            psd_residual: file.psd_residual,
            iterations: file.iterations,
            converged: file.converged,
        })
    }
}

/// ADMM on `min c·m  s.t.  M(m) = Z, Z ⪰ 0, m_I = 1`, with `Y` the
/// multiplier of `M(m) = Z`.
///
/// Iterates are certified periodically: `m` shrunk by `1/(1+ε)` toward the
/// identity is feasible (upper bound), and `S = −Y ⪰ 0` gives the Lagrangian
/// lower bound `c_I − tr S − Σ_c |c_c − ⟨S, B_c⟩|` using `|m_c| ≤ 1`.
/// Runs until the interval is narrower than `tol`; otherwise returns the best
/// certified iterate flagged not converged.
pub fn solve_sdp(problem: &MomentProblem, options: &SdpOptions) -> Result<MomentSolution> {
    let side = problem.side();
    let cost = problem.objective_coefficients();
    let counts = problem.counts();
    let nm = cost.len();

    let mut rho = 0.1;
    let mut accel = Anderson::new(ANDERSON_MEMORY);

    // Fixed-point state x = (Z, U = Y/ρ), flattened.
    let mut x = pack(&Matrix::identity(side), &Matrix::zeros(side, side));
    let mut last_plain: Option<(Vec<f64>, f64)> = None;

    let mut best_ub = f64::INFINITY;
    let mut best_m = vec![0.0; nm];
    best_m[0] = 1.0;
    let mut best_lb = f64::NEG_INFINITY;
    let mut iterations = 0;

    while iterations < options.max_iters {
        iterations += 1;
        let (z, u) = unpack(&x, side);
        // m-update: each B_c has disjoint support, so the least-squares step is diagonal.
        let target = problem.adjoint(&z.sub(&u));
        let mut m = vec![0.0; nm];
        m[0] = 1.0;
        for c in 1..nm {
            m[c] = (target[c] - cost[c] / rho) / counts[c] as f64;
        }
        let mm = problem.moment_matrix(&m);
        let w = mm.add(&u).hermitize();
        let z_new = psd_projection(&w)?;
        // U = W − Π(W) stays negative semidefinite.
        let u_new = w.sub(&z_new);
        let tx = pack(&z_new, &u_new);
        let g: Vec<f64> = tx.iter().zip(&x).map(|(a, b)| a - b).collect();
        let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();

        // Safeguard: an extrapolated point must not increase the residual.
        if let Some((plain, norm)) = last_plain.take() {
            if g_norm > norm {
                accel.reset();
                x = plain;
                continue;
            }
        }

        let primal = mm.sub(&z_new).frobenius_norm();
        let dual = rho * z_new.sub(&z).frobenius_norm();
        // Certificates cost several eigendecompositions; check rarely while far out.
        let near = primal + dual < 1e-3;
        let every = if near { options.check_every } else { 5 * options.check_every };
        if iterations % every == 0 || iterations == options.max_iters {
            // The projected iterate averaged onto the moment classes is often
            // nearer the cone than m itself; certify both.
            let from_z = problem.adjoint(&z_new);
            let scale = from_z[0] / counts[0] as f64;
            let mut candidates = vec![m.clone()];
            if scale > 0.0 {
                candidates.push(from_z.iter().zip(counts).map(|(v, &n)| v / (n as f64 * scale)).collect());
            }
            for candidate in &candidates {
                let (ub, shrunk) = certified_upper(problem, candidate)?;
                if ub < best_ub {
                    best_ub = ub;
                    best_m = shrunk;
                }
            }
            best_lb = best_lb.max(certified_lower(problem, &u_new.scale(rho))?);
            if best_ub - best_lb <= options.tol {
                break;
            }
        }
        if iterations % ADAPT_EVERY == 0 && (primal > BALANCE * dual || dual > BALANCE * primal) {
            // Y is kept fixed across the change of ρ.
            let factor = if primal > BALANCE * dual { 2.0 } else { 0.5 };
            rho *= factor;
            accel.reset();
            x = pack(&z_new, &u_new.scale(1.0 / factor));
            continue;
        }
        let next = accel.step(x, g);
        last_plain = Some((tx, g_norm));
        x = next;
    }
    let lo = min_eigenvalue(&problem.moment_matrix(&best_m))?;
    Ok(MomentSolution {
        n: problem.n(),
        k: problem.k(),
        objective: problem.objective_value(&best_m),
        lower_bound: best_lb,
        psd_residual: (-lo).max(0.0),
        iterations,
        converged: best_ub - best_lb <= options.tol && (-lo) <= options.psd_tol,
        m: best_m,
    })
}

fn pack(z: &Matrix, u: &Matrix) -> Vec<f64> {
    z.as_slice().iter().chain(u.as_slice()).flat_map(|c| [c.re, c.im]).collect()
}

fn unpack(x: &[f64], side: usize) -> (Matrix, Matrix) {
    let len = side * side;
    let read = |off: usize| {
        let data = (0..len).map(|i| C::new(x[2 * (off + i)], x[2 * (off + i) + 1])).collect();
        Matrix::from_vec(side, side, data).expect("square")
    };
    (read(0), read(len))
}

/// Feasible point obtained by mixing toward the maximally mixed moments.
fn certified_upper(problem: &MomentProblem, m: &[f64]) -> Result<(f64, Vec<f64>)> {
    let lo = min_eigenvalue(&problem.moment_matrix(m))?;
    // Small margin so the shrunk matrix is PSD despite eigenvalue rounding.
    let eps = if lo < 0.0 { -lo * (1.0 + 1e-9) + 1e-14 } else { 0.0 };
    let shrunk: Vec<f64> = m.iter().enumerate().map(|(c, &x)| if c == 0 { 1.0 } else { x / (1.0 + eps) }).collect();
    Ok((problem.objective_value(&shrunk), shrunk))
}

/// Lagrangian lower bounds from `S = −Y ⪰ 0`. The box bound uses
/// `|m_c| ≤ 1`; the repaired bound moves `S` onto the dual equality
/// constraints (`S' = S + Σ_c r_c B_c / |B_c|`) and pays `side · λ_min(S')⁻`.
/// Repair and PSD projection alternate for a few rounds; every round yields a
/// valid bound and the best is kept.
fn certified_lower(problem: &MomentProblem, y: &Matrix) -> Result<f64> {
    let cost = problem.objective_coefficients();
    let counts = problem.counts();
    let side = problem.side() as f64;
    let mut s = y.scale(-1.0);
    let mut best = f64::NEG_INFINITY;
    for round in 0..REPAIR_ROUNDS {
        let inner = problem.adjoint(&s);
        let residual: Vec<f64> = (0..cost.len()).map(|c| if c == 0 { 0.0 } else { cost[c] - inner[c] }).collect();
        let base = cost[0] - s.trace().re;
        if round == 0 {
            best = base - residual.iter().map(|r| r.abs()).sum::<f64>();
        }
        let scaled: Vec<f64> = residual.iter().zip(counts).map(|(r, &n)| r / n as f64).collect();
        let repaired = s.add(&problem.moment_matrix(&scaled)).hermitize();
        let (projected, lo) = psd_projection_with_min(&repaired)?;
        // Guard against eigenvalue rounding in the shift.
        let shift = (-lo).max(0.0) + 1e-13 * repaired.frobenius_norm();
        best = best.max(cost[0] - repaired.trace().re - shift * side);
        s = projected;
    }
    Ok(best)
}
