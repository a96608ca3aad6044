//! Quantities from the convergence analysis, made computable: the Lyapunov
//! function of a population, Monte-Carlo smoothing surrogates, the
//! decay-rate threshold and iteration bound, and two Gaussian identities
//! (Fisher information of the mean, KL divergence at equal covariance).
//!
//! Monte-Carlo sample `m` is always drawn from stream coordinate `(0, m)`,
//! and sums are reduced in sample order, so results do not depend on the
//! thread count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizers::{factorize, Covariance};
use crate::population::{ControlTrajectory, Population};
use crate::problems::Objective;
use crate::rng::RngStream;

/// A Monte-Carlo mean with its plug-in standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub sample_count: usize,
}

/// `V = (1/N) Σ ½‖u_i − u*‖²`, the mean half squared distance to `u_star`.
pub fn lyapunov_v(pop: &Population, u_star: &ControlTrajectory) -> Result<f64> {
    if pop.dim() != u_star.dim() {
        return invalid(format!(
            "population dimension {} does not match u* dimension {}",
            pop.dim(),
            u_star.dim()
        ));
    }
    let target = u_star.as_slice();
    let total: f64 = pop
        .particles()
        .iter()
        .map(|p| {
            0.5 * p
                .as_slice()
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok(total / pop.len() as f64)
}

fn lower_factor(sigma: &Covariance, dim: usize) -> Result<Covariance> {
    if sigma.dim() != dim {
        return invalid(format!(
            "covariance is {0}x{0} but the mean has dimension {1}",
            sigma.dim(),
            dim
        ));
    }
    factorize(sigma, 1.0)
}

fn apply(factor: &Covariance, z: &[f64], out: &mut [f64]) {
    match factor {
        Covariance::Diagonal(d) => {
            for ((o, a), zk) in out.iter_mut().zip(d).zip(z) {
                *o += a * zk;
            }
        }
        Covariance::Dense(a) => {
            for (j, zj) in z.iter().enumerate() {
                for i in j..out.len() {
                    out[i] += a[(i, j)] * zj;
                }
            }
        }
    }
}

/// Costs at `M` samples of `N(mean, sigma)`, in sample order.
fn sampled_costs<P: Objective + ?Sized>(
    problem: &P,
    mean: &ControlTrajectory,
    sigma: &Covariance,
    samples: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    if samples < 2 {
        return invalid("at least two samples are required");
    }
    if mean.dim() != problem.dim() {
        return invalid(format!(
            "mean dimension {} does not match problem dimension {}",
            mean.dim(),
            problem.dim()
        ));
    }
    let factor = lower_factor(sigma, mean.dim())?;
    let costs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|m| {
            let z = rng.at(0, m as u64).standard_normals(mean.dim());
            let mut x = mean.as_slice().to_vec();
            apply(&factor, &z, &mut x);
            problem.cost(&x)
        })
        .collect();
    if let Some(m) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::Evaluation {
            iteration: 0,
            particle: m,
            value: costs[m],
        });
    }
    Ok(costs)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Smoothing surrogate `E[J(u)]` for `u ~ N(mean, sigma)`.
pub fn surrogate_mc<P: Objective + ?Sized>(
    problem: &P,
    mean: &ControlTrajectory,
    sigma: &Covariance,
    samples: usize,
    rng: &RngStream,
) -> Result<SurrogateEstimate> {
    let costs = sampled_costs(problem, mean, sigma, samples, rng)?;
    let (value, standard_error) = mean_and_se(&costs);
    Ok(SurrogateEstimate {
        value,
        standard_error,
        sample_count: samples,
    })
}

/// Log-exponential surrogate `-(1/rho) log E[exp(-rho J(u))]`, evaluated
/// with a min shift. Uses the same samples as [`surrogate_mc`] for equal
/// arguments. The standard error comes from the delta method.
pub fn log_surrogate_mc<P: Objective + ?Sized>(
    problem: &P,
    mean: &ControlTrajectory,
    sigma: &Covariance,
    rho: f64,
    samples: usize,
    rng: &RngStream,
) -> Result<SurrogateEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return invalid(format!("rho must be positive and finite, got {rho}"));
    }
    let costs = sampled_costs(problem, mean, sigma, samples, rng)?;
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = costs.iter().map(|c| (-rho * (c - min)).exp()).collect();
    let (wbar, se_w) = mean_and_se(&w);
    Ok(SurrogateEstimate {
        value: min - wbar.ln() / rho,
        standard_error: se_w / (rho * wbar),
        sample_count: samples,
    })
}

/// Smallest drift rate for which the Lyapunov decay exponent
/// `2λ − n_a·T·σ²` is positive: returns `n_a·T·σ²/2`.
pub fn check_lambda(sigma: f64, n_a: usize, horizon: usize) -> f64 {
    (n_a * horizon) as f64 * sigma * sigma / 2.0
}

/// Inputs of the iteration bound [`min_iterations_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub lambda: f64,
    pub sigma: f64,
    pub n_a: usize,
    pub horizon: usize,
    /// Slack factor in `[0, 1)`.
    pub theta: f64,
    /// Lyapunov value of the initial population.
    pub v0: f64,
    /// Target Lyapunov value, in `(0, v0]`.
    pub v_floor: f64,
}

impl DecayParams {
    /// `2λ − n_a·T·σ²`.
    pub fn exponent(&self) -> f64 {
        2.0 * self.lambda - (self.n_a * self.horizon) as f64 * self.sigma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta) {
            return invalid(format!("theta must lie in [0, 1), got {}", self.theta));
        }
        if !(self.v_floor > 0.0 && self.v_floor <= self.v0 && self.v0.is_finite()) {
            return invalid(format!(
                "need 0 < v_floor <= v0, got v_floor = {}, v0 = {}",
                self.v_floor, self.v0
            ));
        }
        if !(self.lambda >= 0.0 && self.sigma >= 0.0) {
            return invalid("lambda and sigma must be nonnegative");
        }
        let threshold = check_lambda(self.sigma, self.n_a, self.horizon);
        if !(self.lambda > threshold) {
            return Err(Error::Precondition(format!(
                "lambda = {} does not exceed the threshold n_a*T*sigma^2/2 = {threshold}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Iterations after which the Lyapunov value is expected below `v_floor`:
/// `1/(1−θ) · 1/(2λ − n_a·T·σ²) · log(v0 / v_floor)`.
pub fn min_iterations_estimate(p: &DecayParams) -> Result<f64> {
    p.validate()?;
    Ok((p.v0 / p.v_floor).ln() / ((1.0 - p.theta) * p.exponent()))
}

fn check_spd(sigma: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return invalid("covariance must be a non-empty square matrix");
    }
    if (sigma - sigma.transpose()).amax() > 1e-12 * sigma.amax().max(1.0) {
        return invalid("covariance is not symmetric");
    }
    sigma.clone().cholesky().ok_or(Error::Singular)
}

/// `½ (μ₁ − μ₀)ᵀ Σ⁻¹ (μ₁ − μ₀)`, the KL divergence between two Gaussians
/// sharing the covariance `sigma`.
pub fn gaussian_kl_same_cov(mu0: &[f64], mu1: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    let chol = check_spd(sigma)?;
    if mu0.len() != sigma.nrows() || mu1.len() != sigma.nrows() {
        return invalid("mean dimensions do not match the covariance");
    }
    let delta = DVector::from_iterator(mu0.len(), mu1.iter().zip(mu0).map(|(a, b)| a - b));
    let solved = chol.solve(&delta);
    Ok(0.5 * delta.dot(&solved))
}

/// Monte-Carlo estimate of the same KL divergence: the mean of
/// `log p₀(x) − log p₁(x)` over `x ~ N(μ₀, Σ)`.
pub fn gaussian_kl_mc(
    mu0: &[f64],
    mu1: &[f64],
    sigma: &DMatrix<f64>,
    samples: usize,
    rng: &RngStream,
) -> Result<SurrogateEstimate> {
    let chol = check_spd(sigma)?;
    let dim = sigma.nrows();
    if mu0.len() != dim || mu1.len() != dim {
        return invalid("mean dimensions do not match the covariance");
    }
    if samples < 2 {
        return invalid("at least two samples are required");
    }
    let l = chol.l();
    let terms: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|m| {
            let z = DVector::from_vec(rng.at(0, m as u64).standard_normals(dim));
            // x − μ₀ = L z, so (x − μ₀)ᵀΣ⁻¹(x − μ₀) = ‖z‖².
            let x0 = &l * &z;
            let x1 = DVector::from_iterator(dim, (0..dim).map(|k| x0[k] + mu0[k] - mu1[k]));
            let w = l.solve_lower_triangular(&x1).expect("nonsingular factor");
            0.5 * (w.norm_squared() - z.norm_squared())
        })
        .collect();
    let (value, standard_error) = mean_and_se(&terms);
    Ok(SurrogateEstimate {
        value,
        standard_error,
        sample_count: samples,
    })
}

/// `(1/M) Σ s sᵀ` with scores `s = Σ⁻¹(x − μ)` of `M` samples
/// `x ~ N(μ, Σ)`; estimates the Fisher information `Σ⁻¹` of the mean.
pub fn empirical_fisher_gaussian_mean(sigma: &DMatrix<f64>, samples: usize, rng: &RngStream) -> Result<DMatrix<f64>> {
    let chol = check_spd(sigma)?;
    let dim = sigma.nrows();
    if samples < 10 * dim * dim {
        return invalid(format!("need at least {} samples, got {samples}", 10 * dim * dim));
    }
    let lt = chol.l().transpose();
    // s = Σ⁻¹ L z = L⁻ᵀ z
    let scores: Vec<DVector<f64>> = (0..samples)
        .into_par_iter()
        .map(|m| {
            let z = DVector::from_vec(rng.at(0, m as u64).standard_normals(dim));
            lt.solve_upper_triangular(&z).expect("nonsingular factor")
        })
        .collect();
    let mut acc = DMatrix::zeros(dim, dim);
    for s in &scores {
        for j in 0..dim {
            for i in j..dim {
                acc[(i, j)] += s[i] * s[j];
            }
        }
    }
    for j in 0..dim {
        for i in j + 1..dim {
            acc[(j, i)] = acc[(i, j)];
        }
    }
    Ok(acc / samples as f64)
}
