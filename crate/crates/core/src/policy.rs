//! Numeric tolerances, caps and iteration limits, gathered in one record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    /// Hermiticity tolerance for `M = M†` checks.
    pub hermitian_tol: f64,
    /// Allowed deviation of a density matrix trace from one.
    pub trace_tol: f64,
    /// Smallest eigenvalue a density matrix may have.
    pub psd_tol: f64,
    /// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
    pub jacobi_tol: f64,
    pub jacobi_max_sweeps: usize,
    /// Largest dense matrix, in entries, any routine will allocate.
    pub max_entries: usize,
    /// Mean-field sweep convergence threshold on energy change.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
    pub restarts: usize,
    /// Allowed PSD violation of a returned moment matrix.
    pub sdp_psd_tol: f64,
    /// Target width of the certified objective interval.
    pub sdp_tol: f64,
    pub sdp_max_iters: usize,
    /// Pseudo-probabilities below this are treated as negative mass.
    pub clip_floor: f64,
    /// Clipped pseudo-probability mass above which a rounding run is flagged.
    pub clip_flag: f64,
    /// Largest tuple space enumerated exactly.
    pub max_enumeration: usize,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            hermitian_tol: 1e-12,
            trace_tol: 1e-10,
            psd_tol: 1e-10,
            jacobi_tol: 1e-11,
            jacobi_max_sweeps: 100,
            max_entries: 1 << 22,
            sweep_tol: 1e-10,
            max_sweeps: 500,
            restarts: 16,
            sdp_psd_tol: 1e-7,
            sdp_tol: 1e-6,
            sdp_max_iters: 20_000,
            clip_floor: -1e-9,
            clip_flag: 1e-6,
            max_enumeration: 1_000_000,
        }
    }
}

impl NumericPolicy {
    pub fn check_entries(&self, entries: usize) -> crate::Result<()> {
        if entries > self.max_entries {
            Err(crate::Error::InstanceTooLarge {
                entries,
                cap: self.max_entries,
            })
        } else {
            Ok(())
        }
    }
}
