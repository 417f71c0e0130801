//! Entropies, decoupling experiments, conditioned product states and de Finetti
//! experiments.

mod conditioning;
mod decoupling;
mod definetti;
mod distribution;
mod entropy;
mod identities;

pub use distribution::{mask_of, shannon, EntropyCache, JointDistribution};
pub use entropy::{marginal_entropy, quantum_cmi, quantum_mutual_information, von_neumann};
pub use identities::{check_info_identities, IdentityReport};
pub(crate) use decoupling::combinations;
pub use decoupling::{block_self_decoupling, self_decoupling, BlockDecouplingReport, DecouplingReport, DerandomizedChoice};
pub use definetti::{
    conditioning_records, definetti_classical, definetti_quantum, definetti_symmetric, is_permutation_symmetric, ConditioningRecord,
    DeFinettiReport, SymmetricReport, TCheck,
};
pub use conditioning::{clustered_bound, conditioned_product_state, ConditionedProductState, EdgeKind, EdgeRecord, StepRecord};
