//! Weighted log-concave maximum-likelihood density estimation.

mod fit;
pub mod jkernel;
mod sample;

pub use fit::{
    cdf, eval_log_density, fit_weighted_logconcave, fit_weighted_logconcave_from, objective, FitOptions,
    LogConcaveFit, CONCAVITY_TOL,
};
pub use jkernel::{j_partials, j_value, JPartials};
pub use sample::{WeightedSample, WEIGHT_FLOOR};
