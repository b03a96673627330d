//! Shared inputs for the benchmarks.

use lcmix::simulation::ScenarioSpec;
use lcmix::{KnownComponentSpec, RngSeed};

/// One replication of a benchmark model with its known component.
pub fn model_sample(model: u8, p: f64, n: usize, seed: u64) -> (Vec<f64>, KnownComponentSpec) {
    let spec = ScenarioSpec::new(model, p, n, 1, RngSeed(seed));
    let data = spec.replication_sample(0).expect("valid scenario");
    let f0 = lcmix::simulation::model_catalog(model).expect("valid model").f0;
    (data.values, f0)
}
