//! Active-set Newton solver for the weighted log-concave MLE.
//!
//! Maximizes `ψ(φ) = Σ wᵢ φ(xᵢ) − ∫ e^φ + 1` over concave `φ` that are linear
//! between consecutive sample points. Interior points where `φ` has no kink
//! are the active concavity constraints; the remaining points are knots and
//! `φ` is parameterized by its values there.

use serde::{Deserialize, Serialize};

use super::jkernel::{j_partials, j_value};
use super::sample::WeightedSample;
use crate::error::{Error, Result};

/// Tolerance on slope-sequence violations of a returned fit.
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol_kkt: f64,
    pub max_outer_iters: usize,
    pub max_newton_iters: usize,
    pub armijo_c: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol_kkt: 1e-8,
            max_outer_iters: 200,
            max_newton_iters: 50,
            armijo_c: 0.25,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_kkt > 0.0) {
            return Err(Error::invalid("tol_kkt must be positive"));
        }
        if self.max_outer_iters == 0 || self.max_newton_iters == 0 {
            return Err(Error::invalid("iteration caps must be at least 1"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::invalid("armijo_c must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A piecewise-linear concave log-density on `[knots.first, knots.last]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcaveFit {
    pub knots: Vec<f64>,
    pub phi: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl LogConcaveFit {
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// `φ(x)`, `-inf` outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return f64::NEG_INFINITY;
        }
        let j = self.knots.partition_point(|&k| k <= x).clamp(1, self.knots.len() - 1);
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        let (p0, p1) = (self.phi[j - 1], self.phi[j]);
        if x == x1 {
            return p1;
        }
        p0 + (x - x0) / (x1 - x0) * (p1 - p0)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.phi.windows(2))
            .map(|(k, p)| (p[1] - p[0]) / (k[1] - k[0]))
            .collect()
    }

    /// Exact `∫ e^φ` over the support.
    pub fn integral(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.phi.windows(2))
            .map(|(k, p)| (k[1] - k[0]) * j_value(p[0], p[1]))
            .sum()
    }

    /// Exact distribution function, normalized by the total mass.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let mut acc = 0.0;
        for (k, p) in self.knots.windows(2).zip(self.phi.windows(2)) {
            if x >= k[1] {
                acc += (k[1] - k[0]) * j_value(p[0], p[1]);
            } else {
                let px = self.log_density(x);
                acc += (x - k[0]) * j_value(p[0], px);
                break;
            }
        }
        (acc / self.integral()).clamp(0.0, 1.0)
    }

    /// Largest increase between successive slopes (zero for a concave fit).
    pub fn concavity_violation(&self) -> f64 {
        self.slopes()
            .windows(2)
            .map(|s| s[1] - s[0])
            .fold(0.0, f64::max)
    }
}

pub fn eval_log_density(fit: &LogConcaveFit, x: f64) -> f64 {
    fit.log_density(x)
}

pub fn cdf(fit: &LogConcaveFit, x: f64) -> f64 {
    fit.cdf(x)
}

/// Index of each knot within the sample's points.
fn knot_indices(sample: &WeightedSample, knots: &[f64]) -> Result<Vec<usize>> {
    let pts = sample.points();
    let mut idx = Vec::with_capacity(knots.len());
    for &k in knots {
        match pts.binary_search_by(|p| p.total_cmp(&k)) {
            Ok(i) => idx.push(i),
            Err(_) => return Err(Error::KnotsNotSubset(k)),
        }
    }
    if idx.len() < 2 || idx[0] != 0 || idx[idx.len() - 1] != pts.len() - 1 {
        return Err(Error::invalid("knots must include both end points of the sample"));
    }
    if idx.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("knots must be strictly ascending"));
    }
    Ok(idx)
}

/// Knot weights after distributing each point's weight onto its bracketing
/// knots by linear interpolation, so that `Σ wᵢ φ(xᵢ) = Σ Wⱼ φ(tⱼ)`.
fn effective_weights(x: &[f64], w: &[f64], knots: &[usize]) -> Vec<f64> {
    let mut eff = vec![0.0; knots.len()];
    for (j, pair) in knots.windows(2).enumerate() {
        let (l, r) = (pair[0], pair[1]);
        let (xl, xr) = (x[l], x[r]);
        if j == 0 {
            eff[0] += w[l];
        }
        eff[j + 1] += w[r];
        for i in l + 1..r {
            let lam = (x[i] - xl) / (xr - xl);
            eff[j] += (1.0 - lam) * w[i];
            eff[j + 1] += lam * w[i];
        }
    }
    eff
}

fn reduced_objective(x: &[f64], knots: &[usize], eff: &[f64], theta: &[f64]) -> f64 {
    let linear: f64 = eff.iter().zip(theta).map(|(w, t)| w * t).sum();
    let integral: f64 = knots
        .windows(2)
        .zip(theta.windows(2))
        .map(|(k, t)| (x[k[1]] - x[k[0]]) * j_value(t[0], t[1]))
        .sum();
    linear - integral + 1.0
}

/// `ψ` for the piecewise-linear function through `(knots, phi)`.
pub fn objective(sample: &WeightedSample, knots: &[f64], phi: &[f64]) -> Result<f64> {
    if knots.len() != phi.len() {
        return Err(Error::LengthMismatch(knots.len(), phi.len()));
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("phi must be finite"));
    }
    let idx = knot_indices(sample, knots)?;
    let eff = effective_weights(sample.points(), sample.weights(), &idx);
    Ok(reduced_objective(sample.points(), &idx, &eff, phi))
}

/// Solves `A d = rhs` for symmetric tridiagonal `A` (diagonal `diag`,
/// off-diagonal `off`). Returns `None` on a non-positive pivot.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let tiny = |i: usize| 1e-14 * diag[i].abs().max(f64::MIN_POSITIVE);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot > tiny(0)) {
        return None;
    }
    c[0] = if n > 1 { off[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - off[i - 1] * c[i - 1];
        if !(pivot > tiny(i)) {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / pivot;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Steps shorter than this are treated as zero.
const MIN_STEP: f64 = 1e-14;

struct ActiveSet<'a> {
    x: &'a [f64],
    w: &'a [f64],
    span: f64,
    knots: Vec<usize>,
    theta: Vec<f64>,
    eff: Vec<f64>,
    opts: FitOptions,
}

struct Derivatives {
    grad: Vec<f64>,
    /// Negated Hessian, tridiagonal and positive definite.
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl<'a> ActiveSet<'a> {
    fn new(sample: &'a WeightedSample, knots: Vec<usize>, theta: Vec<f64>, opts: FitOptions) -> Self {
        let x = sample.points();
        let w = sample.weights();
        let eff = effective_weights(x, w, &knots);
        ActiveSet {
            x,
            w,
            span: x[x.len() - 1] - x[0],
            knots,
            theta,
            eff,
            opts,
        }
    }

    fn value(&self, theta: &[f64]) -> f64 {
        reduced_objective(self.x, &self.knots, &self.eff, theta)
    }

    fn derivatives(&self) -> Derivatives {
        let k = self.knots.len();
        let mut grad = self.eff.clone();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k - 1];
        for j in 0..k - 1 {
            let h = self.x[self.knots[j + 1]] - self.x[self.knots[j]];
            let p = j_partials(self.theta[j], self.theta[j + 1]);
            grad[j] -= h * p.da;
            grad[j + 1] -= h * p.db;
            diag[j] += h * p.daa;
            diag[j + 1] += h * p.dbb;
            off[j] = h * p.dab;
        }
        Derivatives { grad, diag, off }
    }

    fn newton_direction(&self, der: &Derivatives) -> Option<Vec<f64>> {
        if let Some(d) = solve_tridiagonal(&der.diag, &der.off, &der.grad) {
            return Some(d);
        }
        let max_diag = der.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut delta = 1e-12 * (1.0 + max_diag);
        for _ in 0..8 {
            let diag: Vec<f64> = der.diag.iter().map(|d| d + delta).collect();
            if let Some(d) = solve_tridiagonal(&diag, &der.off, &der.grad) {
                return Some(d);
            }
            delta *= 100.0;
        }
        None
    }

    fn slope(&self, theta: &[f64], j: usize) -> f64 {
        (theta[j + 1] - theta[j]) / (self.x[self.knots[j + 1]] - self.x[self.knots[j]])
    }

    /// Concavity slack at interior knot `j`.
    fn slack(&self, theta: &[f64], j: usize) -> f64 {
        self.slope(theta, j - 1) - self.slope(theta, j)
    }

    /// Largest `t <= 1` keeping `theta + t d` concave, and the knot that
    /// blocks it if any.
    fn max_feasible_step(&self, d: &[f64]) -> (f64, Option<usize>) {
        let mut t_max = 1.0;
        let mut blocking = None;
        for j in 1..self.knots.len() - 1 {
            let rate = self.slack(d, j);
            if rate < 0.0 {
                let t = self.slack(&self.theta, j).max(0.0) / -rate;
                if t <= t_max {
                    t_max = t;
                    blocking = Some(j);
                }
            }
        }
        (t_max, blocking)
    }

    fn drop_knot(&mut self, j: usize) {
        self.knots.remove(j);
        self.theta.remove(j);
        self.eff = effective_weights(self.x, self.w, &self.knots);
    }

    /// Backtracking line search from `t0` along `d`. Returns the accepted
    /// step and trial point.
    fn armijo(&self, d: &[f64], t0: f64, slope: f64) -> Option<(f64, Vec<f64>)> {
        let f0 = self.value(&self.theta);
        let mut t = t0;
        while t >= MIN_STEP {
            let trial: Vec<f64> = self.theta.iter().zip(d).map(|(a, b)| a + t * b).collect();
            let f = self.value(&trial);
            if f.is_finite() && f >= f0 + self.opts.armijo_c * t * slope {
                return Some((t, trial));
            }
            t *= 0.5;
        }
        None
    }

    /// Newton iterations on the current face. Knots whose concavity
    /// constraint becomes binding are dropped. Returns the final reduced
    /// gradient norm.
    fn newton(&mut self) -> f64 {
        let mut iters = 0;
        loop {
            let der = self.derivatives();
            let gnorm = der.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if iters >= self.opts.max_newton_iters {
                return gnorm;
            }
            let Some(d) = self.newton_direction(&der) else {
                return gnorm;
            };
            // A small gradient is not enough: near-zero weights leave
            // directions so flat that the gradient vanishes long before
            // the objective stops improving. The Newton decrement `g·d`
            // bounds the remaining gain.
            let slope: f64 = der.grad.iter().zip(&d).map(|(g, v)| g * v).sum();
            let tol = self.opts.tol_kkt;
            if !(slope > 0.0) || (gnorm <= tol && slope <= tol * tol) {
                return gnorm;
            }
            let (t_max, blocking) = self.max_feasible_step(&d);
            if t_max < MIN_STEP {
                if let Some(j) = blocking {
                    self.drop_knot(j);
                    continue;
                }
            }
            iters += 1;
            let Some((t, trial)) = self.armijo(&d, t_max, slope) else {
                return gnorm;
            };
            self.theta = trial;
            if t == t_max {
                if let Some(j) = blocking {
                    self.drop_knot(j);
                }
            }
        }
    }

    /// φ at every sample point.
    fn phi_at_points(&self) -> Vec<f64> {
        let mut phi = vec![0.0; self.x.len()];
        for (j, pair) in self.knots.windows(2).enumerate() {
            let (l, r) = (pair[0], pair[1]);
            let (tl, tr) = (self.theta[j], self.theta[j + 1]);
            let h = self.x[r] - self.x[l];
            for i in l..=r {
                let lam = (self.x[i] - self.x[l]) / h;
                phi[i] = tl + lam * (tr - tl);
            }
            phi[r] = tr;
        }
        phi
    }

    /// Directional derivative of `ψ` along the hinge `-(x - xᵢ)₊ / span`
    /// for every sample point. Positive values at non-knots mean releasing
    /// that constraint increases `ψ`; the constraint multiplier is the
    /// negation.
    fn hinge_derivatives(&self) -> Vec<f64> {
        let m = self.x.len();
        let phi = self.phi_at_points();
        let mut out = vec![0.0; m];
        // Tail integrals from the right: mass, first moment about x_i, and
        // the weighted counterparts.
        let mut mass = 0.0;
        let mut moment = 0.0;
        let mut wmass = 0.0;
        let mut wmoment = 0.0;
        for i in (0..m - 1).rev() {
            let h = self.x[i + 1] - self.x[i];
            let p = j_partials(phi[i], phi[i + 1]);
            moment += h * mass + h * h * p.db;
            mass += h * j_value(phi[i], phi[i + 1]);
            wmass += self.w[i + 1];
            wmoment += h * wmass;
            out[i] = (moment - wmoment) / self.span;
        }
        out
    }

    /// Most promising constraint to release: `(point index, derivative)`.
    fn release_candidate(&self) -> Option<(usize, f64)> {
        let hinge = self.hinge_derivatives();
        let mut best: Option<(usize, f64)> = None;
        let mut next_knot = 1;
        for (i, &v) in hinge.iter().enumerate().take(self.x.len() - 1).skip(1) {
            while self.knots[next_knot] < i {
                next_knot += 1;
            }
            if self.knots[next_knot] == i {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// Makes point `i` a knot and takes an ascent step along its hinge,
    /// which only ever increases the new knot's concavity slack.
    fn release(&mut self, i: usize) {
        let pos = self.knots.partition_point(|&k| k < i);
        let (l, r) = (self.knots[pos - 1], self.knots[pos]);
        let lam = (self.x[i] - self.x[l]) / (self.x[r] - self.x[l]);
        let value = self.theta[pos - 1] + lam * (self.theta[pos] - self.theta[pos - 1]);
        self.knots.insert(pos, i);
        self.theta.insert(pos, value);
        self.eff = effective_weights(self.x, self.w, &self.knots);

        let xi = self.x[i];
        let d: Vec<f64> = self
            .knots
            .iter()
            .map(|&k| -(self.x[k] - xi).max(0.0) / self.span)
            .collect();
        let der = self.derivatives();
        let slope: f64 = der.grad.iter().zip(&d).map(|(g, v)| g * v).sum();
        if !(slope > 0.0) {
            return;
        }
        let mut curvature = 0.0;
        for j in 0..d.len() {
            curvature += der.diag[j] * d[j] * d[j];
            if j + 1 < d.len() {
                curvature += 2.0 * der.off[j] * d[j] * d[j + 1];
            }
        }
        let t0 = if curvature > 0.0 { slope / curvature } else { 1.0 };
        if let Some((_, trial)) = self.armijo(&d, t0, slope) {
            self.theta = trial;
        }
    }

    fn kkt_residual(&self) -> f64 {
        let gnorm = self
            .derivatives()
            .grad
            .iter()
            .fold(0.0f64, |m, g| m.max(g.abs()));
        let release = self.release_candidate().map_or(0.0, |(_, v)| v.max(0.0));
        gnorm.max(release)
    }

    fn run(mut self) -> LogConcaveFit {
        let tol = self.opts.tol_kkt;
        let mut converged = false;
        for _ in 0..self.opts.max_outer_iters {
            let gnorm = self.newton();
            if gnorm > tol {
                continue;
            }
            match self.release_candidate() {
                Some((i, v)) if v > tol => self.release(i),
                _ => {
                    converged = true;
                    break;
                }
            }
        }
        // Exact renormalization: shifting φ by -ln ∫e^φ never decreases ψ.
        let integral: f64 = self
            .knots
            .windows(2)
            .zip(self.theta.windows(2))
            .map(|(k, t)| (self.x[k[1]] - self.x[k[0]]) * j_value(t[0], t[1]))
            .sum();
        let shift = integral.ln();
        for t in self.theta.iter_mut() {
            *t -= shift;
        }
        let kkt_residual = self.kkt_residual();
        LogConcaveFit {
            knots: self.knots.iter().map(|&k| self.x[k]).collect(),
            objective: self.value(&self.theta),
            phi: self.theta,
            kkt_residual,
            converged: converged && kkt_residual <= tol,
        }
    }
}

/// Weighted log-concave maximum-likelihood fit, starting from the best
/// log-linear density on the sample span.
pub fn fit_weighted_logconcave(sample: &WeightedSample, opts: &FitOptions) -> Result<LogConcaveFit> {
    opts.validate()?;
    let m = sample.len();
    if m < 2 {
        return Err(Error::DegenerateSample(m));
    }
    let (lo, hi) = sample.span();
    let flat = -(hi - lo).ln();
    let solver = ActiveSet::new(sample, vec![0, m - 1], vec![flat, flat], *opts);
    Ok(solver.run())
}

/// Like [`fit_weighted_logconcave`] but starts from an existing fit whose
/// knots are sample points (typically the previous EM iterate). Falls back
/// to the log-linear start when they are not.
pub fn fit_weighted_logconcave_from(
    sample: &WeightedSample,
    start: &LogConcaveFit,
    opts: &FitOptions,
) -> Result<LogConcaveFit> {
    opts.validate()?;
    let usable = start.phi.len() == start.knots.len() && start.phi.iter().all(|p| p.is_finite());
    match knot_indices(sample, &start.knots) {
        Ok(idx) if usable => {
            let solver = ActiveSet::new(sample, idx, start.phi.clone(), *opts);
            Ok(solver.run())
        }
        _ => fit_weighted_logconcave(sample, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_fit() -> LogConcaveFit {
        let s = WeightedSample::new(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
        fit_weighted_logconcave(&s, &FitOptions::default()).unwrap()
    }

    #[test]
    fn objective_of_uniform_two_point() {
        let s = WeightedSample::new(&[1.0, 3.0], &[0.3, 0.7]).unwrap();
        let v = -(2f64.ln());
        let psi = objective(&s, &[1.0, 3.0], &[v, v]).unwrap();
        assert!((psi - v).abs() < 1e-15);
        let s = WeightedSample::new(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!(objective(&s, &[0.0, 1.0], &[0.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_foreign_knots() {
        let s = WeightedSample::uniform(&[0.0, 0.5, 1.0]).unwrap();
        assert!(matches!(
            objective(&s, &[0.0, 0.7, 1.0], &[0.0, 0.0, 0.0]),
            Err(Error::KnotsNotSubset(_))
        ));
        assert!(objective(&s, &[0.0, 0.5], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn equal_weight_two_points_is_uniform() {
        let fit = two_point_fit();
        for &p in &fit.phi {
            assert!((p + 2f64.ln()).abs() < 1e-12);
        }
        assert!(fit.converged);
    }

    #[test]
    fn evaluation_and_cdf() {
        let fit = two_point_fit();
        assert_eq!(fit.log_density(0.5), f64::NEG_INFINITY);
        assert_eq!(fit.log_density(3.0), fit.phi[1]);
        assert_eq!(fit.log_density(1.0), fit.phi[0]);
        assert!((fit.log_density(2.0) - 0.5 * (fit.phi[0] + fit.phi[1])).abs() < 1e-15);
        assert_eq!(fit.cdf(0.0), 0.0);
        assert_eq!(fit.cdf(1.0), 0.0);
        assert!((fit.cdf(3.0) - 1.0).abs() < 1e-6);
        assert!((fit.cdf(2.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unequal_two_point_weights_tilt_the_density() {
        let s = WeightedSample::new(&[0.0, 1.0], &[0.9, 0.1]).unwrap();
        let fit = fit_weighted_logconcave(&s, &FitOptions::default()).unwrap();
        assert!(fit.phi[0] > fit.phi[1]);
        assert!((fit.integral() - 1.0).abs() < 1e-9);
        // Stationarity: w = ∂/∂φ ∫ e^φ at each end.
        let p = j_partials(fit.phi[0], fit.phi[1]);
        assert!((p.da - 0.9).abs() < 1e-8 && (p.db - 0.1).abs() < 1e-8);
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [4.0, 4.0, 4.0];
        let off = [1.0, 1.0];
        let x = solve_tridiagonal(&diag, &off, &[5.0, 6.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(solve_tridiagonal(&[0.0, 1.0], &[0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn invalid_options() {
        let s = WeightedSample::uniform(&[0.0, 1.0]).unwrap();
        let bad = FitOptions { tol_kkt: 0.0, ..Default::default() };
        assert!(fit_weighted_logconcave(&s, &bad).is_err());
        let bad = FitOptions { max_outer_iters: 0, ..Default::default() };
        assert!(fit_weighted_logconcave(&s, &bad).is_err());
    }
}
