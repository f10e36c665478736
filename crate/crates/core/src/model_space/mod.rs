//! Densities over finite alphabets and the divergence, affinity and distance
//! computations between them.

mod density;
mod divergence;
pub mod file;

pub use density::{FiniteDensity, IndexSet, ModelFamily, Prior, NORMALIZATION_TOL};
pub use divergence::{
    alpha_affinity, alpha_log_affinity, gen_hellinger_sq, kl_divergence, kl_neighborhood,
    kl_neighborhood_mass, kl_projection, kl_projection_onto_hull, log_ratio_moments,
    sup_alpha_log_affinity, HullProjection, KLProjection, SupAlpha, PROJECTION_TIE_TOL,
};
pub(crate) use divergence::ratio_column;
