//! Particles, populations and the softmax weighting shared by every optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// One candidate decision vector: the flattened controls `u_0 .. u_{T-1}`,
/// `T * n_a` entries laid out step-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlTrajectory(Vec<f64>);

impl ControlTrajectory {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("control trajectory must have at least one entry");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("control entry {i} is not finite ({})", values[i]));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Skips the finiteness scan; for values produced by the update rules.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &Self) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

impl AsRef<[f64]> for ControlTrajectory {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `N` particles sharing one dimension, optionally with their evaluated costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    particles: Vec<ControlTrajectory>,
    costs: Option<Vec<f64>>,
    iteration: usize,
}

impl Population {
    pub fn new(particles: Vec<ControlTrajectory>, iteration: usize) -> Result<Self> {
        let Some(first) = particles.first() else {
            return invalid("population must contain at least one particle");
        };
        let dim = first.dim();
        if let Some(i) = particles.iter().position(|p| p.dim() != dim) {
            return invalid(format!(
                "particle {i} has dimension {}, expected {dim}",
                particles[i].dim()
            ));
        }
        Ok(Self {
            particles,
            costs: None,
            iteration,
        })
    }

    /// Builds a population from raw rows, validating every entry.
    pub fn from_rows(rows: Vec<Vec<f64>>, iteration: usize) -> Result<Self> {
        let particles = rows
            .into_iter()
            .map(ControlTrajectory::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(particles, iteration)
    }

    /// `n` particles drawn uniformly from the box `[low, high)`; particle `i`
    /// uses stream coordinate `(0, i)`.
    pub fn uniform_box(low: &[f64], high: &[f64], n: usize, rng: &RngStream) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return invalid("box bounds must be non-empty and of equal length");
        }
        if low.iter().zip(high).any(|(l, h)| !(l <= h && l.is_finite() && h.is_finite())) {
            return invalid("box bounds must be finite with low <= high");
        }
        let particles = (0..n)
            .map(|i| {
                let mut r = rng.at(0, i as u64);
                ControlTrajectory(low.iter().zip(high).map(|(l, h)| r.uniform(*l, *h)).collect())
            })
            .collect();
        Self::new(particles, 0)
    }

    /// `n` particles `mean + sigma * eps`; particle `i` uses stream coordinate `(0, i)`.
    pub fn gaussian(mean: &ControlTrajectory, sigma: f64, n: usize, rng: &RngStream) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid(format!("sigma must be nonnegative, got {sigma}"));
        }
        let particles = (0..n)
            .map(|i| {
                let eps = rng.at(0, i as u64).standard_normals(mean.dim());
                ControlTrajectory(mean.0.iter().zip(eps).map(|(m, e)| m + sigma * e).collect())
            })
            .collect();
        Self::new(particles, 0)
    }

    pub fn with_costs(mut self, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != self.particles.len() {
            return invalid(format!(
                "{} costs for {} particles",
                costs.len(),
                self.particles.len()
            ));
        }
        if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
            return invalid(format!("cost {i} is not finite ({})", costs[i]));
        }
        self.costs = Some(costs);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].dim()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn particles(&self) -> &[ControlTrajectory] {
        &self.particles
    }

    pub fn particle(&self, i: usize) -> &ControlTrajectory {
        &self.particles[i]
    }

    pub fn costs(&self) -> Option<&[f64]> {
        self.costs.as_deref()
    }

    pub fn is_evaluated(&self) -> bool {
        self.costs.is_some()
    }

    pub(crate) fn evaluated_costs(&self) -> Result<&[f64]> {
        self.costs
            .as_deref()
            .ok_or_else(|| Error::State("population costs have not been evaluated".into()))
    }

    pub fn mean_cost(&self) -> Option<f64> {
        self.costs
            .as_ref()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
    }

    /// Diagonal length of the componentwise bounding box of the particles.
    pub fn diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim()];
        let mut hi = vec![f64::NEG_INFINITY; self.dim()];
        for p in &self.particles {
            for ((l, h), x) in lo.iter_mut().zip(hi.iter_mut()).zip(&p.0) {
                *l = l.min(*x);
                *h = h.max(*x);
            }
        }
        lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
    }

    /// Arithmetic mean of the particles.
    pub fn centroid(&self) -> ControlTrajectory {
        let n = self.len() as f64;
        let mut mean = vec![0.0; self.dim()];
        for p in &self.particles {
            for (m, x) in mean.iter_mut().zip(&p.0) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        ControlTrajectory(mean)
    }

    pub fn into_particles(self) -> Vec<ControlTrajectory> {
        self.particles
    }
}

/// Temperature of the exponential weighting; larger is more selective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxConfig {
    pub rho: f64,
}

impl SoftmaxConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return invalid(format!("temperature rho must be positive and finite, got {rho}"));
        }
        Ok(Self { rho })
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Wraps raw weights, checking nonnegativity and unit sum.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("weight vector must be non-empty");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and nonnegative");
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {sum}, expected 1"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.0.iter().enumerate() {
            if *w > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// `w_i = exp(-rho (c_i - min c)) / sum_k exp(-rho (c_k - min c))`.
///
/// Subtracting the minimum leaves the weights unchanged but keeps the
/// exponent in `(-inf, 0]`, so it never overflows.
pub fn softmax_weights(costs: &[f64], cfg: SoftmaxConfig) -> Result<WeightVector> {
    if costs.is_empty() {
        return invalid("cannot weight an empty cost vector");
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return invalid(format!("cost {i} is not finite ({})", costs[i]));
    }
    if !(cfg.rho > 0.0) {
        return invalid(format!("temperature rho must be positive, got {}", cfg.rho));
    }
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = costs.iter().map(|c| (-cfg.rho * (c - min)).exp()).collect();
    // The minimum contributes exp(0) = 1, so the sum is at least 1.
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    Ok(WeightVector(w))
}

/// Weighted average `sum_i w_i u_i` of the particles.
///
/// Accumulated as offsets from the heaviest particle: identical particles give
/// that particle back bit-for-bit and the large-`rho` limit is exact.
pub fn consensus_point(pop: &Population, w: &WeightVector) -> Result<ControlTrajectory> {
    weighted_mean(pop.particles(), w.as_slice())
}

pub(crate) fn weighted_mean(particles: &[ControlTrajectory], w: &[f64]) -> Result<ControlTrajectory> {
    if w.len() != particles.len() {
        return invalid(format!(
            "{} weights for {} particles",
            w.len(),
            particles.len()
        ));
    }
    let anchor_idx = w
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if *x > w[best] { i } else { best });
    let anchor = particles[anchor_idx].as_slice();
    let dim = anchor.len();
    let mut acc = vec![0.0; dim];
    for (p, wi) in particles.iter().zip(w) {
        if *wi == 0.0 {
            continue;
        }
        for ((a, x), base) in acc.iter_mut().zip(p.as_slice()).zip(anchor) {
            *a += wi * (x - base);
        }
    }
    let out = (0..dim)
        .map(|d| {
            let (lo, hi) = particles.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), p| (lo.min(p.0[d]), hi.max(p.0[d])),
            );
            // Rounding can leave the hull by an ulp.
            (anchor[d] + acc[d]).clamp(lo, hi)
        })
        .collect();
    Ok(ControlTrajectory(out))
}

/// Lowest-cost particle as `(index, cost)`; lowest index on ties.
pub fn best_particle(pop: &Population) -> Result<(usize, f64)> {
    let costs = pop.evaluated_costs()?;
    Ok(argmin(costs))
}

pub(crate) fn argmin(costs: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[best] {
            best = i;
        }
    }
    (best, costs[best])
}
