//! Maximum-likelihood estimation of the two-component mixture
//! `g(x) = (1 - p) f0(x) + p f(x)` where `f0` is known and `f` is an unknown
//! log-concave density.
//!
//! The estimator is an EM algorithm ([`em::run_em`]) whose M-step is a
//! weighted log-concave MLE ([`logconcave::fit_weighted_logconcave`]).

pub mod density;
pub mod em;
pub mod error;
pub mod identifiability;
pub mod io;
pub mod logconcave;
pub mod numeric;
pub mod rng;
pub mod simulation;
pub mod special;
pub mod tstats;

pub use density::{KnownComponentSpec, MixtureModelSpec, MixtureSample, TabulatedKnownComponent, UnknownComponentSpec};
pub use em::{EmConfig, EmResult};
pub use error::{Error, Result};
pub use identifiability::{check_identifiability, IdentifiabilityReport, Verdict};
pub use logconcave::{FitOptions, LogConcaveFit, WeightedSample};
pub use rng::RngSeed;
