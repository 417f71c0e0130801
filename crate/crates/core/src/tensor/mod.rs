//! Dense complex linear algebra over small multi-qudit registers.

mod density;
mod eig;
mod matrix;

pub use density::{nearest_density_matrix, partial_trace, partial_trace_matrix, trace_distance, DensityMatrix};
pub(crate) use density::strides;
pub use eig::{hermitian_eig, hermitian_eig_warm, lowest_eigenpair, symmetric_eigenvalues, trace_norm, Eigen};
pub use matrix::{gates, kron, kron_vec, ComplexMatrix};
