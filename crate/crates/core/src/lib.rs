//! Product-state approximation laboratory for 2-local qudit Hamiltonians.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex linear algebra, generic over [`Real`].
//! * [`hamiltonian`]: interaction graphs, instance ensembles, exact ground energies.
//! * [`meanfield`]: product and block-product variational sweeps and bound reports.
//! * [`measurement`]: informationally complete POVMs, reconstruction, distortion.
//! * [`infotools`]: entropies, decoupling experiments, conditioned product states,
//!   de Finetti experiments.
//! * [`lasserre`]: Pauli moment relaxations, an ADMM solver and propagation sampling.
//!
//! Linear algebra and the entropy primitives are generic over the scalar; the
//! aliases below fix the precision used by the experiment layers.

pub mod error;
pub mod hamiltonian;
pub mod infotools;
pub mod lasserre;
pub mod meanfield;
pub mod measurement;
pub mod policy;
pub mod random;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
pub use scalar::Real;

/// Working precision of the experiment layers.
pub type Scalar = f64;
pub type Complex64 = num_complex::Complex<f64>;
pub type Matrix = tensor::ComplexMatrix<f64>;
pub type Matrix32 = tensor::ComplexMatrix<f32>;
pub type Density = tensor::DensityMatrix<f64>;
pub type Density32 = tensor::DensityMatrix<f32>;
pub type Distribution = infotools::JointDistribution<f64>;
pub type Distribution32 = infotools::JointDistribution<f32>;

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
