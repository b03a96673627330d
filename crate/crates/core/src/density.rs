//! Known-component families, the unknown-component families used by the
//! benchmark models, and their samplers.

use std::path::Path;

use rand::Rng;
use rand_distr::{self as rd, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logconcave::jkernel::j_value;
use crate::rng::RngSeed;
use crate::special::{ln_gamma, student_t_ln_pdf};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Accepted deviation of a tabulated density's trapezoid integral from one.
pub const TABULATED_MASS_TOL: f64 = 1e-3;

/// A known density `f0` with piecewise-linear log-density on a finite grid.
/// Zero outside `[grid.first, grid.last]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedRaw", into = "TabulatedRaw")]
pub struct TabulatedKnownComponent {
    grid: Vec<f64>,
    log_density: Vec<f64>,
    /// Exact cumulative mass at each grid point, for inverse-CDF sampling.
    cum_mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TabulatedRaw {
    grid: Vec<f64>,
    log_density: Vec<f64>,
}

impl TryFrom<TabulatedRaw> for TabulatedKnownComponent {
    type Error = Error;
    fn try_from(raw: TabulatedRaw) -> Result<Self> {
        TabulatedKnownComponent::new(raw.grid, raw.log_density)
    }
}

impl From<TabulatedKnownComponent> for TabulatedRaw {
    fn from(t: TabulatedKnownComponent) -> Self {
        TabulatedRaw {
            grid: t.grid,
            log_density: t.log_density,
        }
    }
}

impl TabulatedKnownComponent {
    pub fn new(grid: Vec<f64>, log_density: Vec<f64>) -> Result<Self> {
        if grid.len() != log_density.len() {
            return Err(Error::LengthMismatch(grid.len(), log_density.len()));
        }
        if grid.len() < 2 {
            return Err(Error::invalid("tabulated density needs at least two grid points"));
        }
        if grid.iter().chain(&log_density).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated grid and log-density must be finite"));
        }
        if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "tabulated grid not strictly ascending at index {}",
                i + 1
            )));
        }
        let trapezoid: f64 = grid
            .windows(2)
            .zip(log_density.windows(2))
            .map(|(g, l)| 0.5 * (g[1] - g[0]) * (l[0].exp() + l[1].exp()))
            .sum();
        if (trapezoid - 1.0).abs() > TABULATED_MASS_TOL {
            return Err(Error::invalid(format!(
                "tabulated density integrates to {trapezoid}, expected 1 within {TABULATED_MASS_TOL}"
            )));
        }
        let mut cum_mass = Vec::with_capacity(grid.len());
        cum_mass.push(0.0);
        let mut acc = 0.0;
        for (g, l) in grid.windows(2).zip(log_density.windows(2)) {
            acc += (g[1] - g[0]) * j_value(l[0], l[1]);
            cum_mass.push(acc);
        }
        Ok(TabulatedKnownComponent {
            grid,
            log_density,
            cum_mass,
        })
    }

    /// Reads a two-column CSV `x,log_density` with a one-line header.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut grid = Vec::new();
        let mut log_density = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::parse(line, format!("expected 2 fields, found {}", rec.len())));
            }
            let x: f64 = crate::io::parse_field(&rec[0], line, "x")?;
            let l: f64 = crate::io::parse_field(&rec[1], line, "log_density")?;
            if let Some(&prev) = grid.last() {
                if x <= prev {
                    return Err(Error::parse(line, "x must be strictly ascending"));
                }
            }
            grid.push(x);
            log_density.push(l);
        }
        Self::new(grid, log_density)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn support(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return f64::NEG_INFINITY;
        }
        let j = self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        let (l0, l1) = (self.log_density[j - 1], self.log_density[j]);
        let t = (x - x0) / (x1 - x0);
        l0 + t * (l1 - l0)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cum_mass.last().unwrap();
        let u = rng.random::<f64>() * total;
        let j = self
            .cum_mass
            .partition_point(|&c| c <= u)
            .clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        let (l0, l1) = (self.log_density[j - 1], self.log_density[j]);
        let width = x1 - x0;
        let within = u - self.cum_mass[j - 1];
        // Invert ∫_0^s width·exp(l0 + k r) dr over s ∈ [0, 1].
        let k = l1 - l0;
        let scaled = within / (width * l0.exp());
        let s = if k.abs() < 1e-12 {
            scaled
        } else {
            (scaled * k).ln_1p() / k
        };
        x0 + width * s.clamp(0.0, 1.0)
    }
}

/// The fully specified component `f0` of the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KnownComponentSpec {
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Exponential { lambda: f64 },
    StudentT { nu: f64 },
    Tabulated(TabulatedKnownComponent),
}

impl KnownComponentSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        let s = KnownComponentSpec::Normal { mu, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let s = KnownComponentSpec::Uniform { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        let s = KnownComponentSpec::Exponential { lambda };
        s.validate()?;
        Ok(s)
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        let s = KnownComponentSpec::StudentT { nu };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        use KnownComponentSpec::*;
        let ok = match *self {
            Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Uniform { a, b } => a.is_finite() && b.is_finite() && b > a,
            Exponential { lambda } => lambda.is_finite() && lambda > 0.0,
            StudentT { nu } => nu.is_finite() && nu > 0.0,
            Tabulated(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid known component {self:?}")))
        }
    }

    /// Parses `normal:MU,SIGMA`, `uniform:A,B`, `exp:LAMBDA`, `t:NU` or
    /// `table:PATH`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("f0 spec `{spec}` lacks `family:` prefix")))?;
        let name = name.trim().to_ascii_lowercase();
        if name == "table" {
            return Ok(KnownComponentSpec::Tabulated(
                TabulatedKnownComponent::from_csv_path(args.trim())?,
            ));
        }
        let nums = args
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number `{s}` in f0 spec `{spec}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "f0 family `{name}` takes {n} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        match name.as_str() {
            "normal" | "n" => {
                arity(2)?;
                Self::normal(nums[0], nums[1])
            }
            "uniform" | "unif" => {
                arity(2)?;
                Self::uniform(nums[0], nums[1])
            }
            "exp" | "exponential" => {
                arity(1)?;
                Self::exponential(nums[0])
            }
            "t" | "student_t" => {
                arity(1)?;
                Self::student_t(nums[0])
            }
            other => Err(Error::invalid(format!("unknown f0 family `{other}`"))),
        }
    }

    /// Support as a closed interval (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        use KnownComponentSpec::*;
        match self {
            Normal { .. } | StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Uniform { a, b } => (*a, *b),
            Exponential { .. } => (0.0, f64::INFINITY),
            Tabulated(t) => t.support(),
        }
    }

    /// Log-density; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        use KnownComponentSpec::*;
        match self {
            Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -LN_SQRT_2PI - sigma.ln() - 0.5 * z * z
            }
            Uniform { a, b } => {
                if (*a..=*b).contains(&x) {
                    -(b - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Exponential { lambda } => {
                if x >= 0.0 {
                    lambda.ln() - lambda * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            StudentT { nu } => student_t_ln_pdf(*nu, x),
            Tabulated(t) => t.ln_pdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use KnownComponentSpec::*;
        match self {
            Normal { mu, sigma } => rd::Normal::new(*mu, *sigma).unwrap().sample(rng),
            Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Exponential { lambda } => rd::Exp::new(*lambda).unwrap().sample(rng),
            StudentT { nu } => rd::StudentT::new(*nu).unwrap().sample(rng),
            Tabulated(t) => t.draw(rng),
        }
    }

    pub fn sample(&self, n: usize, seed: RngSeed) -> Vec<f64> {
        let mut rng = seed.rng();
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Convenience wrapper matching the operation name.
pub fn log_pdf_known(spec: &KnownComponentSpec, x: f64) -> f64 {
    spec.log_pdf(x)
}

pub fn sample_known(spec: &KnownComponentSpec, n: usize, seed: RngSeed) -> Vec<f64> {
    spec.sample(n, seed)
}

/// Families used for the unknown component in the benchmark models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum UnknownComponentSpec {
    Normal { mu: f64, sigma: f64 },
    ShiftedExponential { lambda: f64, shift: f64 },
    /// Beta(1, 5).
    Beta15,
    /// χ²(3) + shift.
    ShiftedChiSq3 { shift: f64 },
    /// t(5) + shift.
    ShiftedT5 { shift: f64 },
}

impl UnknownComponentSpec {
    pub fn validate(&self) -> Result<()> {
        use UnknownComponentSpec::*;
        let ok = match *self {
            Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            ShiftedExponential { lambda, shift } => lambda > 0.0 && lambda.is_finite() && shift.is_finite(),
            Beta15 => true,
            ShiftedChiSq3 { shift } | ShiftedT5 { shift } => shift.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid unknown component {self:?}")))
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        use UnknownComponentSpec::*;
        match *self {
            Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -LN_SQRT_2PI - sigma.ln() - 0.5 * z * z
            }
            ShiftedExponential { lambda, shift } => {
                let y = x - shift;
                if y >= 0.0 {
                    lambda.ln() - lambda * y
                } else {
                    f64::NEG_INFINITY
                }
            }
            Beta15 => {
                if (0.0..=1.0).contains(&x) {
                    5f64.ln() + 4.0 * (-x).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ShiftedChiSq3 { shift } => {
                let y = x - shift;
                if y > 0.0 {
                    0.5 * y.ln() - 0.5 * y - 1.5 * 2f64.ln() - ln_gamma(1.5)
                } else {
                    f64::NEG_INFINITY
                }
            }
            ShiftedT5 { shift } => student_t_ln_pdf(5.0, x - shift),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn mean(&self) -> f64 {
        use UnknownComponentSpec::*;
        match *self {
            Normal { mu, .. } => mu,
            ShiftedExponential { lambda, shift } => 1.0 / lambda + shift,
            Beta15 => 1.0 / 6.0,
            ShiftedChiSq3 { shift } => 3.0 + shift,
            ShiftedT5 { shift } => shift,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        use UnknownComponentSpec::*;
        match *self {
            Normal { .. } | ShiftedT5 { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ShiftedExponential { shift, .. } | ShiftedChiSq3 { shift } => (shift, f64::INFINITY),
            Beta15 => (0.0, 1.0),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use UnknownComponentSpec::*;
        match *self {
            Normal { mu, sigma } => rd::Normal::new(mu, sigma).unwrap().sample(rng),
            ShiftedExponential { lambda, shift } => rd::Exp::new(lambda).unwrap().sample(rng) + shift,
            Beta15 => {
                let u: f64 = rng.random();
                // 1 - (1 - u)^(1/5)
                -((-u).ln_1p() / 5.0).exp_m1()
            }
            // χ²(3) = Gamma(shape 1.5, scale 2); rand_distr uses Marsaglia–Tsang.
            ShiftedChiSq3 { shift } => rd::Gamma::new(1.5, 2.0).unwrap().sample(rng) + shift,
            ShiftedT5 { shift } => rd::StudentT::new(5.0).unwrap().sample(rng) + shift,
        }
    }
}

/// `g = (1 - p) f0 + p f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModelSpec {
    pub p: f64,
    pub f0: KnownComponentSpec,
    pub f: UnknownComponentSpec,
}

/// Draws from a mixture. `labels[i]` is `true` when draw `i` came from the
/// known component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSample {
    pub values: Vec<f64>,
    pub labels: Vec<bool>,
}

impl MixtureModelSpec {
    pub fn new(p: f64, f0: KnownComponentSpec, f: UnknownComponentSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("mixing proportion {p} outside [0, 1]")));
        }
        f0.validate()?;
        f.validate()?;
        Ok(MixtureModelSpec { p, f0, f })
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let a = (1.0 - self.p).ln() + self.f0.log_pdf(x);
        let b = self.p.ln() + self.f.log_pdf(x);
        crate::numeric::log_add_exp(a, b)
    }

    pub fn sample(&self, n: usize, seed: RngSeed) -> MixtureSample {
        let mut rng = seed.rng();
        let mut values = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let unknown = rng.random::<f64>() < self.p;
            let x = if unknown {
                self.f.draw(&mut rng)
            } else {
                self.f0.draw(&mut rng)
            };
            values.push(x);
            labels.push(!unknown);
        }
        MixtureSample { values, labels }
    }
}

pub fn sample_mixture(model: &MixtureModelSpec, n: usize, seed: RngSeed) -> MixtureSample {
    model.sample(n, seed)
}
