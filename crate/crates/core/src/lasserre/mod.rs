//! Moment relaxations over Pauli strings and rounding to product states.

mod anderson;
mod dense;
mod pauli;
mod problem;
mod report;
mod rounding;
mod solver;

pub use pauli::{phase, strings_up_to_weight, two_qubit_expansion, Pauli, PauliString};
pub use problem::{build_moment_problem, MomentProblem};
pub use solver::{solve_sdp, MomentSolution, SdpOptions};
pub use rounding::{bloch_vector, propagation_sampling, RoundingReport, RoundingRun};
pub use report::{basis_side, sdp_sandwich, threshold_rank_certificate, LevelRecord, SandwichReport, ThresholdRankReport, SIDE_CAP};
