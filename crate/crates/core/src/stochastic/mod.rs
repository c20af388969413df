//! Euler-Maruyama path ensembles, Feynman-Kac estimates, and numerical checks
//! that stochastic expectations equal the matching Green's-function
//! convolutions.
//!
//! All simulations run on a single simulation clock `s` with the backward
//! drift convention `b = -v`: a caller modelling a physical velocity `v`
//! passes `b(x, s) = -v(x, s)`.
//!
//! Every path draws from its own random stream derived from `(seed,
//! path_index)`, so ensembles are bit-identical for any thread count.

mod bridge;
mod feynman_kac;
mod identities;
mod paths;
pub mod rng;
mod stats;

pub use bridge::{
    bridge_check_boundary, bridge_check_forcing, bridge_check_initial, half_line_kernel,
    half_line_wall_flux, BridgeReport,
};
pub use feynman_kac::feynman_kac_estimate;
pub use identities::{lognormal_identity_check, rid_identity, LognormalCheck};
pub use paths::{
    sample_paths, sample_paths_with, Boundary, FirstPassage, McParams, PathEnsemble, SdeSpec,
};
pub use stats::{ks_normal, pairwise_sum, variance_estimate, Estimate, KS_CRITICAL_95};
