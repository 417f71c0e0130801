//! Informationally complete measurements and the measure-and-reconstruct
//! channels built from them.

mod channel;
mod distortion;
mod povm;
mod reconstruct;

pub use channel::{condition_on_outcomes, conjugate_site, contract_site, for_each_outcome, luders_site, measure_channel};
pub use distortion::{distortion_estimate, distortion_ratio, DistortionReport};
pub use povm::{bloch_state, icosahedral_povm, icosahedron_vertices, random_povm, Povm};
pub use reconstruct::{hermitian_basis, ReconstructionMap};
