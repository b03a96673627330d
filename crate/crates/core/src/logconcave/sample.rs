use serde::Serialize;

use crate::error::{Error, Result};

/// Relative weight floor: each weight is at least `WEIGHT_FLOOR / m`.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Strictly ascending support points with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Sorts, merges tied points (summing their weights), normalizes, and
    /// floors every weight at `1e-10 / m` before renormalizing.
    ///
    /// Weights must be finite and non-negative with a positive total.
    pub fn new(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch(points.len(), weights.len()));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("point {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!("weight {i} is negative or not finite")));
        }
        let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut xs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut ws: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match xs.last() {
                Some(&last) if last == x => *ws.last_mut().unwrap() += w,
                _ => {
                    xs.push(x);
                    ws.push(w);
                }
            }
        }
        if xs.len() < 2 {
            return Err(Error::DegenerateSample(xs.len()));
        }
        let total: f64 = ws.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights sum to zero"));
        }
        let floor = WEIGHT_FLOOR / xs.len() as f64;
        for w in ws.iter_mut() {
            *w = (*w / total).max(floor);
        }
        let total: f64 = ws.iter().sum();
        for w in ws.iter_mut() {
            *w /= total;
        }
        Ok(WeightedSample {
            points: xs,
            weights: ws,
        })
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        Self::new(points, &vec![1.0; points.len()])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }
}
