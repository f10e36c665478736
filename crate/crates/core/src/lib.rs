//! Desk-scale laboratory for posterior contraction under misspecification.
//!
//! Everything lives on a finite alphabet with a finite prior, so every
//! expectation is an exact sum and every posterior is exact. The crate covers
//! the KL projection `p*` of the truth onto a model family, α-affinity
//! coverings of `{d(P, P*) ≥ r}` certified over convex hulls, the sequential
//! posterior in likelihood-ratio form, numerical checks of the martingale
//! identity and the resulting supermartingale decay, and replicated
//! contraction experiments.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiment layer and the CLI use.

pub mod covering;
pub mod error;
pub mod experiment;
pub mod model_space;
pub mod posterior;
pub mod sampling;
mod scalar;
mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{log_sum_exp, Scalar};
pub use simplex::{SimplexMax, DEFAULT_MAX_ITER};

pub use model_space::IndexSet;

pub type Density = model_space::FiniteDensity<f64>;
pub type Family = model_space::ModelFamily<f64>;
pub type PriorWeights = model_space::Prior<f64>;
pub type Projection = model_space::KLProjection<f64>;
pub type State = posterior::PosteriorState<f64>;
pub type Model<'a> = posterior::PosteriorModel<'a, f64>;
pub type Element = covering::CoverElement<f64>;
pub type Cover = covering::Covering<f64>;
pub type Shell = covering::ShellSpec<f64>;
