//! Abstract evolutionary systems with weighted-in-time well-posedness checks,
//! degenerate parabolic limits and the eddy-current approximation of Maxwell's equations.

pub mod degenerate_parabolic;
pub mod discrete_complex;
pub mod eddy_current;
pub mod error;
pub mod evo_core;
pub mod exact_rank;
pub mod linalg;
pub mod maxwell_limit;
pub mod presets;
pub mod scalar;
pub mod sources;
pub mod subspaces;
pub mod weighted_time;

pub use error::{Error, Result};
pub use scalar::{ExactField, ModPrime, Real};

pub type WeightedTimeGrid64 = weighted_time::WeightedTimeGrid<f64>;
pub type TimeSignal64 = weighted_time::TimeSignal<f64>;
pub type Subspace64 = subspaces::Subspace<f64>;
pub type EvoProblem64 = evo_core::EvoProblem<f64>;
pub type DegenerateProblem64 = degenerate_parabolic::DegenerateProblem<f64>;
pub type EddyProblem64 = eddy_current::EddyProblem<f64>;
