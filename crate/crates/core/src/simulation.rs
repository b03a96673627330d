//! Monte-Carlo harness for the six benchmark mixtures.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{KnownComponentSpec, MixtureModelSpec, MixtureSample, UnknownComponentSpec};
use crate::em::{classification_error, estimate_mu, run_em, EmConfig};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// One of the six benchmark mixtures, with `p` left free.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkModel {
    pub id: u8,
    pub f0: KnownComponentSpec,
    pub f: UnknownComponentSpec,
    /// Mean of the unknown component.
    pub true_mu: f64,
}

impl BenchmarkModel {
    pub fn with_p(&self, p: f64) -> Result<MixtureModelSpec> {
        MixtureModelSpec::new(p, self.f0.clone(), self.f)
    }
}

/// Model 1: N(0,2) vs N(3,1). Model 2: U(0,1) vs Beta(1,5). Model 3: Exp(1)
/// vs Exp(1)+2. Model 4: N(0,1) vs χ²(3)+2. Model 5: N(0,1) vs Exp(0.5)+3.
/// Model 6: N(0,1) vs t(5)+3.
pub fn model_catalog(id: u8) -> Result<BenchmarkModel> {
    let std_normal = KnownComponentSpec::Normal { mu: 0.0, sigma: 1.0 };
    let (f0, f) = match id {
        1 => (
            KnownComponentSpec::Normal { mu: 0.0, sigma: 2.0 },
            UnknownComponentSpec::Normal { mu: 3.0, sigma: 1.0 },
        ),
        2 => (KnownComponentSpec::Uniform { a: 0.0, b: 1.0 }, UnknownComponentSpec::Beta15),
        3 => (
            KnownComponentSpec::Exponential { lambda: 1.0 },
            UnknownComponentSpec::ShiftedExponential { lambda: 1.0, shift: 2.0 },
        ),
        4 => (std_normal, UnknownComponentSpec::ShiftedChiSq3 { shift: 2.0 }),
        5 => (
            std_normal,
            UnknownComponentSpec::ShiftedExponential { lambda: 0.5, shift: 3.0 },
        ),
        6 => (std_normal, UnknownComponentSpec::ShiftedT5 { shift: 3.0 }),
        other => return Err(Error::UnknownModel(other)),
    };
    Ok(BenchmarkModel {
        id,
        true_mu: f.mean(),
        f0,
        f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model_id: u8,
    pub p: f64,
    pub n: usize,
    pub reps: usize,
    pub base_seed: RngSeed,
    pub em_config: EmConfig,
}

impl ScenarioSpec {
    pub fn new(model_id: u8, p: f64, n: usize, reps: usize, base_seed: RngSeed) -> Self {
        ScenarioSpec {
            model_id,
            p,
            n,
            reps,
            base_seed,
            em_config: EmConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        model_catalog(self.model_id)?;
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("p = {} outside (0, 1)", self.p)));
        }
        if self.n < 10 {
            return Err(Error::invalid(format!("n = {} below 10", self.n)));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        self.em_config.validate()
    }

    /// Data of replication `r`; depends only on `(base_seed, r)`.
    pub fn replication_sample(&self, r: usize) -> Result<MixtureSample> {
        let model = model_catalog(self.model_id)?.with_p(self.p)?;
        Ok(model.sample(self.n, self.base_seed.child(r as u64)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub p_hat: f64,
    pub mu_hat: f64,
    pub cla_error: f64,
}

/// One replication. Errors, non-convergence and component collapse all
/// count as failures.
pub fn run_replication(spec: &ScenarioSpec, r: usize) -> Result<ReplicationOutcome> {
    let f0 = model_catalog(spec.model_id)?.f0;
    let data = spec.replication_sample(r)?;
    let res = run_em(&data.values, &f0, &spec.em_config)?;
    if !res.converged {
        return Err(Error::ReplicationFailed {
            index: r,
            reason: format!("EM did not converge in {} iterations", res.iterations),
        });
    }
    if let Some(d) = res.degenerate {
        return Err(Error::ReplicationFailed {
            index: r,
            reason: format!("degenerate estimate {d:?}"),
        });
    }
    Ok(ReplicationOutcome {
        p_hat: res.p_hat,
        mu_hat: estimate_mu(&data.values, &res.omega)?,
        cla_error: classification_error(&res.omega, &data.labels)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub bias_p: f64,
    pub mse_p: f64,
    pub bias_mu: f64,
    pub mse_mu: f64,
    pub mean_cla_error: f64,
    pub true_mu: f64,
    pub failures: usize,
}

/// Aggregates replication outcomes in index order.
pub fn summarize(outcomes: &[Result<ReplicationOutcome>], true_p: f64, true_mu: f64) -> Result<ScenarioSummary> {
    let ok: Vec<&ReplicationOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(Error::AllReplicationsFailed(outcomes.len()));
    }
    let k = ok.len() as f64;
    let mean = |f: &dyn Fn(&ReplicationOutcome) -> f64| ok.iter().map(|o| f(o)).sum::<f64>() / k;
    Ok(ScenarioSummary {
        bias_p: mean(&|o| o.p_hat) - true_p,
        mse_p: mean(&|o| (o.p_hat - true_p).powi(2)),
        bias_mu: mean(&|o| o.mu_hat) - true_mu,
        mse_mu: mean(&|o| (o.mu_hat - true_mu).powi(2)),
        mean_cla_error: mean(&|o| o.cla_error),
        true_mu,
        failures: outcomes.len() - ok.len(),
    })
}

/// Every replication of `spec` in index order, run in parallel on the
/// current rayon pool.
pub fn run_replications(spec: &ScenarioSpec) -> Result<Vec<Result<ReplicationOutcome>>> {
    spec.validate()?;
    Ok((0..spec.reps).into_par_iter().map(|r| run_replication(spec, r)).collect())
}

/// Runs all replications and aggregates them. The result does not depend
/// on the thread count.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioSummary> {
    let outcomes = run_replications(spec)?;
    summarize(&outcomes, spec.p, model_catalog(spec.model_id)?.true_mu)
}

/// Every (model, p, n) cell of the full benchmark grid with `K = 200`.
pub fn full_profile(base_seed: RngSeed, em_config: EmConfig) -> Vec<ScenarioSpec> {
    let mut specs = Vec::new();
    for model_id in 1..=6u8 {
        for &p in &[0.2, 0.5, 0.8] {
            for &n in &[250usize, 500, 1000] {
                specs.push(ScenarioSpec {
                    model_id,
                    p,
                    n,
                    reps: 200,
                    base_seed,
                    em_config,
                });
            }
        }
    }
    specs
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: u8,
    pub p: f64,
    pub n: usize,
    pub reps: usize,
    pub bias_p: f64,
    pub mse_p: f64,
    pub bias_mu: f64,
    pub mse_mu: f64,
    pub mean_cla_error: f64,
    pub failures: usize,
}

impl SummaryRow {
    pub fn new(spec: &ScenarioSpec, summary: &ScenarioSummary) -> Self {
        SummaryRow {
            model: spec.model_id,
            p: spec.p,
            n: spec.n,
            reps: spec.reps,
            bias_p: summary.bias_p,
            mse_p: summary.mse_p,
            bias_mu: summary.bias_mu,
            mse_mu: summary.mse_mu,
            mean_cla_error: summary.mean_cla_error,
            failures: summary.failures,
        }
    }
}

/// Rows ordered by model, then `p`, then `n`.
pub fn summary_table(mut rows: Vec<SummaryRow>) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    rows.sort_by(|a, b| {
        a.model
            .cmp(&b.model)
            .then(a.p.total_cmp(&b.p))
            .then(a.n.cmp(&b.n))
    });
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_summary_json<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}
