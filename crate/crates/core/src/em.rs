//! EM estimation of `(p, f)` with `f` log-concave.

use serde::{Deserialize, Serialize};

use crate::density::KnownComponentSpec;
use crate::error::{Error, Result};
use crate::logconcave::{fit_weighted_logconcave, fit_weighted_logconcave_from, FitOptions, LogConcaveFit, WeightedSample};
use crate::numeric::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub p_init: f64,
    /// Relative log-likelihood change that ends the iteration.
    pub tol_loglik: f64,
    pub max_iters: usize,
    pub fit_options: FitOptions,
    /// Minimum `Σ(1 - ωᵢ) / n` before the unknown component counts as
    /// collapsed.
    pub min_component_mass: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            p_init: 0.5,
            tol_loglik: 1e-8,
            max_iters: 500,
            fit_options: FitOptions::default(),
            min_component_mass: 1e-6,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_init > 0.0 && self.p_init < 1.0) {
            return Err(Error::invalid(format!("p_init {} outside (0, 1)", self.p_init)));
        }
        if !(self.tol_loglik > 0.0) || !(self.min_component_mass > 0.0) {
            return Err(Error::invalid("EM tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        self.fit_options.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    /// Every observation was attributed to `f0`; `p̂ = 0`.
    AllKnown,
    /// Every observation was attributed to `f`; `p̂ = 1`.
    AllUnknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub p_hat: f64,
    pub f_hat: LogConcaveFit,
    /// Posterior probability that each observation came from `f0`, at
    /// `(p̂, f̂)`, in input order.
    pub omega: Vec<f64>,
    /// Log-likelihood of every iterate, starting with the initial one.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: Option<Degenerate>,
}

/// Responsibilities toward `f0` from densities.
pub fn e_step(p: f64, f0_vals: &[f64], f_vals: &[f64]) -> Result<Vec<f64>> {
    if f0_vals.len() != f_vals.len() {
        return Err(Error::LengthMismatch(f0_vals.len(), f_vals.len()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p = {p} outside [0, 1]")));
    }
    f0_vals
        .iter()
        .zip(f_vals)
        .enumerate()
        .map(|(i, (&a, &b))| {
            let known = (1.0 - p) * a;
            let denom = known + p * b;
            if denom > 0.0 {
                Ok(known / denom)
            } else {
                Err(Error::ZeroMixtureDensity { index: i, x: f64::NAN })
            }
        })
        .collect()
}

/// Responsibility toward `f0` from log-densities; `None` if both terms vanish.
fn responsibility(p: f64, log_f0: f64, log_f: f64) -> Option<f64> {
    let a = (1.0 - p).ln() + log_f0;
    let b = p.ln() + log_f;
    let total = log_add_exp(a, b);
    if total == f64::NEG_INFINITY {
        None
    } else {
        Some((a - total).exp())
    }
}

fn e_step_log(p: f64, data: &[f64], log_f0: &[f64], fit: &LogConcaveFit) -> Result<Vec<f64>> {
    data.iter()
        .zip(log_f0)
        .enumerate()
        .map(|(i, (&x, &l0))| {
            responsibility(p, l0, fit.log_density(x)).ok_or(Error::ZeroMixtureDensity { index: i, x })
        })
        .collect()
}

fn log_likelihood(p: f64, data: &[f64], log_f0: &[f64], fit: &LogConcaveFit) -> Result<f64> {
    let lp = p.ln();
    let lq = (1.0 - p).ln();
    let mut total = 0.0;
    for (i, (&x, &l0)) in data.iter().zip(log_f0).enumerate() {
        let term = log_add_exp(lq + l0, lp + fit.log_density(x));
        if term == f64::NEG_INFINITY {
            return Err(Error::ZeroMixtureDensity { index: i, x });
        }
        total += term;
    }
    Ok(total)
}

/// Maximizes the log-likelihood over `p` with the fit held fixed. At an
/// interior optimum `p = mean(1 - ω(p))` holds exactly.
fn profile_p(data: &[f64], log_f0: &[f64], fit: &LogConcaveFit) -> f64 {
    let score = |p: f64| -> f64 {
        data.iter()
            .zip(log_f0)
            .map(|(&x, &l0)| {
                let lf = fit.log_density(x);
                if l0 == f64::NEG_INFINITY {
                    1.0 / p
                } else if lf > l0 {
                    let inv = (l0 - lf).exp();
                    (1.0 - inv) / ((1.0 - p) * inv + p)
                } else {
                    let r = (lf - l0).exp();
                    (r - 1.0) / ((1.0 - p) + p * r)
                }
            })
            .sum()
    };
    if score(1.0) >= 0.0 {
        return 1.0;
    }
    if score(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `p = mean(1 - ω)`.
pub fn m_step_p(omega: &[f64]) -> Result<f64> {
    if omega.is_empty() {
        return Err(Error::EmptyInput);
    }
    if omega.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::invalid("responsibilities must lie in [0, 1]"));
    }
    Ok(omega.iter().map(|w| 1.0 - w).sum::<f64>() / omega.len() as f64)
}

fn unknown_weights(points: &[f64], omega: &[f64], min_component_mass: f64) -> Result<WeightedSample> {
    if points.len() != omega.len() {
        return Err(Error::LengthMismatch(points.len(), omega.len()));
    }
    let weights: Vec<f64> = omega.iter().map(|w| 1.0 - w).collect();
    let mass: f64 = weights.iter().sum();
    let threshold = min_component_mass * points.len() as f64;
    if !(mass >= threshold) {
        return Err(Error::ComponentCollapsed { mass, threshold });
    }
    WeightedSample::new(points, &weights)
}

/// Weighted log-concave fit with weights `1 - ωᵢ`.
pub fn m_step_f(
    points: &[f64],
    omega: &[f64],
    opts: &FitOptions,
    min_component_mass: f64,
) -> Result<LogConcaveFit> {
    let sample = unknown_weights(points, omega, min_component_mass)?;
    fit_weighted_logconcave(&sample, opts)
}

/// Runs EM from the unweighted log-concave MLE of `data` and `p = p_init`.
pub fn run_em(data: &[f64], f0: &KnownComponentSpec, config: &EmConfig) -> Result<EmResult> {
    config.validate()?;
    f0.validate()?;
    let mut distinct = data.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::DegenerateSample(distinct.len()));
    }
    let n = data.len() as f64;
    let log_f0: Vec<f64> = data.iter().map(|&x| f0.log_pdf(x)).collect();

    let mut fit = fit_weighted_logconcave(&WeightedSample::uniform(data)?, &config.fit_options)?;
    let mut p = config.p_init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut degenerate = None;
    let mut iterations = 0;

    loop {
        let ll = log_likelihood(p, data, &log_f0, &fit)?;
        if let Some(&prev) = trace.last() {
            let change: f64 = ll - prev;
            if change.abs() <= config.tol_loglik * (1.0 + f64::abs(prev)) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations >= config.max_iters {
            break;
        }
        iterations += 1;

        let omega = e_step_log(p, data, &log_f0, &fit)?;
        let p_next = m_step_p(&omega)?;
        match unknown_weights(data, &omega, config.min_component_mass) {
            Ok(sample) => {
                fit = fit_weighted_logconcave_from(&sample, &fit, &config.fit_options)?;
                p = p_next;
            }
            Err(Error::ComponentCollapsed { .. }) => {
                p = 0.0;
                degenerate = Some(Degenerate::AllKnown);
                converged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    if degenerate.is_none() {
        let refined = profile_p(data, &log_f0, &fit);
        if refined != p {
            p = refined;
            trace.push(log_likelihood(p, data, &log_f0, &fit)?);
        }
    }
    let mut omega = e_step_log(p, data, &log_f0, &fit)?;
    if degenerate.is_none() {
        if p == 0.0 {
            degenerate = Some(Degenerate::AllKnown);
        } else if p == 1.0 || omega.iter().sum::<f64>() < config.min_component_mass * n {
            degenerate = Some(Degenerate::AllUnknown);
            p = 1.0;
            omega = e_step_log(p, data, &log_f0, &fit)?;
        }
    }
    Ok(EmResult {
        p_hat: p,
        f_hat: fit,
        omega,
        loglik_trace: trace,
        iterations,
        converged,
        degenerate,
    })
}

impl EmResult {
    /// Mixture log-likelihood at `(p̂, f̂)`.
    pub fn log_likelihood(&self, data: &[f64], f0: &KnownComponentSpec) -> Result<f64> {
        let log_f0: Vec<f64> = data.iter().map(|&x| f0.log_pdf(x)).collect();
        log_likelihood(self.p_hat, data, &log_f0, &self.f_hat)
    }

    /// Mixture density `(1 - p̂) f0(x) + p̂ f̂(x)`.
    pub fn mixture_density(&self, x: f64, f0: &KnownComponentSpec) -> f64 {
        (1.0 - self.p_hat) * f0.pdf(x) + self.p_hat * self.f_hat.density(x)
    }
}

/// Posterior probability that `x` came from the unknown component.
pub fn posterior_unknown(result: &EmResult, x: f64, f0: &KnownComponentSpec) -> Result<f64> {
    responsibility(result.p_hat, f0.log_pdf(x), result.f_hat.log_density(x))
        .map(|w| 1.0 - w)
        .ok_or(Error::ZeroMixtureDensity { index: 0, x })
}

/// `Σ(1 - ŵᵢ) xᵢ / Σ(1 - ŵᵢ)`.
pub fn estimate_mu(x: &[f64], w_hat: &[f64]) -> Result<f64> {
    if x.len() != w_hat.len() {
        return Err(Error::LengthMismatch(x.len(), w_hat.len()));
    }
    let mass: f64 = w_hat.iter().map(|w| 1.0 - w).sum();
    if !(mass > 0.0) {
        return Err(Error::AllWeightsKnown);
    }
    Ok(x.iter().zip(w_hat).map(|(x, w)| (1.0 - w) * x).sum::<f64>() / mass)
}

/// Mean squared difference between posteriors and true origins
/// (`true` = known component).
pub fn classification_error(w_hat: &[f64], labels: &[bool]) -> Result<f64> {
    if w_hat.len() != labels.len() {
        return Err(Error::LengthMismatch(w_hat.len(), labels.len()));
    }
    if w_hat.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sq: f64 = w_hat
        .iter()
        .zip(labels)
        .map(|(w, &l)| {
            let d = w - if l { 1.0 } else { 0.0 };
            d * d
        })
        .sum();
    Ok(sq / w_hat.len() as f64)
}
