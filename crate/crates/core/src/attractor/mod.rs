//! Tail estimates, truncation convergence, set semidistance and weighted
//! spaces.

mod tail;
mod truncation;
mod weights;

pub use tail::{
    cutoff_derivative, cutoff_mass, cutoff_theta, tail_audit, tail_constants, tail_mass,
    CutoffSpec, TailReport,
};
pub use truncation::{semidistance, truncation_delta, TruncationReport};
pub use weights::{
    damping_condition, damping_condition_coupled, weight_constants, weighted_audit,
    weighted_norm, weighted_tail, WeightFamily, WeightSpec, WeightedReport, MAX_WEIGHT_EXPONENT,
};
