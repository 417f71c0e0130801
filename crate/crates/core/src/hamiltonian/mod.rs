//! Interaction graphs, Hamiltonian instances and the exact ground-energy oracle.

mod graph;
mod instance;
mod io;
mod partition;

pub use graph::{Edge, InteractionGraph, WalkStats};
pub use instance::{build_instance, draw_term, operator_norm, Ensemble, Family, GeneratorSpec, HamiltonianInstance, InstanceMeta};
pub(crate) use instance::embed_two_site;
pub use partition::BlockPartition;
