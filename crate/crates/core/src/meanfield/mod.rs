//! Variational search over product and block-product states.

mod report;
mod state;
mod sweep;

pub use report::{
    basic_bound, bound_check_basic, bound_check_clustered, bound_check_weighted, weighted_bound, BoundReport,
    ClusteredReport,
};
pub use state::{product_energy, ProductState};
pub use sweep::{descend, meanfield_sweep, random_product_state, SweepTrace};
