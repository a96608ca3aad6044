//! Parametric baselines that search with a single Gaussian: MPPI (path
//! integral mean update), CMA (elite mean and covariance adaptation without
//! evolution paths) and CEM (CMA with uniform elite weights).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate_population;
use super::record::{Recorder, RunRecord, StopReason, StoppingRule};
use crate::error::{invalid, Error, Result};
use crate::population::{softmax_weights, weighted_mean, ControlTrajectory, Population, SoftmaxConfig};
use crate::problems::Objective;
use crate::rng::RngStream;

/// Covariance or factor storage. Diagonal matrices keep only their diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Covariance {
    pub fn isotropic(dim: usize, variance: f64) -> Self {
        Self::Diagonal(vec![variance; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Self::Diagonal(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            Self::Dense(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.iter().sum(),
            Self::Dense(m) => m.trace(),
        }
    }
}

/// Lower-triangular `A` with `scale² A Aᵀ = sigma`.
///
/// Cholesky first; if that fails the matrix is checked for semidefiniteness
/// and factored through its eigendecomposition, re-triangularized by QR.
pub(crate) fn factorize(sigma: &Covariance, scale: f64) -> Result<Covariance> {
    let inv2 = 1.0 / (scale * scale);
    match sigma {
        Covariance::Diagonal(d) => {
            if let Some(v) = d.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *v });
            }
            Ok(Covariance::Diagonal(d.iter().map(|v| (v * inv2).sqrt()).collect()))
        }
        Covariance::Dense(m) => {
            let target = m * inv2;
            if let Some(chol) = target.clone().cholesky() {
                return Ok(Covariance::Dense(chol.l()));
            }
            let eig = target.symmetric_eigen();
            let min = eig.eigenvalues.min();
            if min < -1e-10 {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: min / inv2 });
            }
            let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
            // M = diag(roots) Vᵀ satisfies MᵀM = target; with M = QR, Rᵀ is the factor.
            let m = DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
            let r = m.qr().r();
            Ok(Covariance::Dense(r.transpose()))
        }
    }
}

/// Gaussian search distribution `N(mean, covariance)` with
/// `covariance = step² · factor · factorᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSearchState {
    pub mean: ControlTrajectory,
    pub covariance: Covariance,
    pub factor: Covariance,
    pub step: f64,
    /// Number of elite particles used by the CMA and CEM updates.
    pub elite_count: usize,
}

impl GaussianSearchState {
    pub fn new(mean: ControlTrajectory, covariance: Covariance, step: f64, elite_count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return invalid(format!("step must be positive, got {step}"));
        }
        if covariance.dim() != mean.dim() {
            return invalid(format!(
                "covariance is {0}x{0} but the mean has dimension {1}",
                covariance.dim(),
                mean.dim()
            ));
        }
        if let Covariance::Dense(m) = &covariance {
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return invalid("covariance is not symmetric");
            }
        }
        if elite_count == 0 {
            return invalid("elite_count must be at least 1");
        }
        let factor = factorize(&covariance, step)?;
        Ok(Self {
            mean,
            covariance,
            factor,
            step,
            elite_count,
        })
    }

    /// Builds the state from a factor instead; `step` may be zero here.
    pub fn from_factor(mean: ControlTrajectory, factor: DMatrix<f64>, step: f64, elite_count: usize) -> Result<Self> {
        if !(step >= 0.0) || factor.nrows() != mean.dim() || factor.ncols() != mean.dim() {
            return invalid("factor must be dim x dim and step nonnegative");
        }
        let covariance = Covariance::Dense(&factor * factor.transpose() * (step * step));
        Ok(Self {
            mean,
            covariance,
            factor: Covariance::Dense(factor),
            step,
            elite_count: elite_count.max(1),
        })
    }

    pub fn isotropic(mean: ControlTrajectory, sigma: f64, elite_count: usize) -> Result<Self> {
        let dim = mean.dim();
        Self::new(mean, Covariance::isotropic(dim, sigma * sigma), 1.0, elite_count)
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// RMS standard deviation over coordinates.
    pub fn rms_scale(&self) -> f64 {
        (self.covariance.trace() / self.dim() as f64).sqrt()
    }
}

/// Draws `n` particles `mean + step · factor · eps_i` with `eps_i` from
/// stream coordinate `(iteration, i)`.
pub fn sample_gaussian_population(
    state: &GaussianSearchState,
    n: usize,
    iteration: usize,
    rng: &RngStream,
) -> Result<Population> {
    if n == 0 {
        return invalid("population size must be at least 1");
    }
    let dim = state.dim();
    let eps: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| rng.at(iteration as u64, i as u64).standard_normals(dim))
        .collect();
    let mean = state.mean.as_slice();
    let particles = match &state.factor {
        Covariance::Diagonal(d) => eps
            .into_iter()
            .map(|e| {
                let u = (0..dim).map(|k| mean[k] + state.step * (d[k] * e[k])).collect();
                ControlTrajectory::from_vec_unchecked(u)
            })
            .collect(),
        Covariance::Dense(a) => {
            let e = DMatrix::from_fn(dim, n, |k, i| eps[i][k]);
            let ae = a * e;
            (0..n)
                .map(|i| {
                    let u = (0..dim).map(|k| mean[k] + state.step * ae[(k, i)]).collect();
                    ControlTrajectory::from_vec_unchecked(u)
                })
                .collect()
        }
    };
    Population::new(particles, iteration)
}

/// Path-integral mean update on an already evaluated sample population:
/// the new mean is the softmax-weighted average; the covariance is kept.
pub fn mppi_mean_update(
    state: &GaussianSearchState,
    pop: &Population,
    softmax: SoftmaxConfig,
) -> Result<GaussianSearchState> {
    check_dims(state, pop)?;
    let w = softmax_weights(pop.evaluated_costs()?, softmax)?;
    Ok(GaussianSearchState {
        mean: weighted_mean(pop.particles(), w.as_slice())?,
        ..state.clone()
    })
}

/// Samples `n` controls around the mean, evaluates them, and applies
/// [`mppi_mean_update`].
pub fn mppi_update<P: Objective + ?Sized>(
    state: &GaussianSearchState,
    problem: &P,
    n: usize,
    softmax: SoftmaxConfig,
    iteration: usize,
    rng: &RngStream,
) -> Result<GaussianSearchState> {
    let pop = sample_gaussian_population(state, n, iteration, rng)?;
    let pop = evaluate_population(problem, pop)?;
    mppi_mean_update(state, &pop, softmax)
}

fn check_dims(state: &GaussianSearchState, pop: &Population) -> Result<()> {
    if pop.dim() != state.dim() {
        return invalid(format!(
            "population dimension {} does not match search dimension {}",
            pop.dim(),
            state.dim()
        ));
    }
    Ok(())
}

/// Elite indices: the `k` lowest costs, ties broken by lower index.
fn elites(costs: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..costs.len()).collect();
    idx.sort_by(|a, b| costs[*a].total_cmp(&costs[*b]).then(a.cmp(b)));
    idx.truncate(k);
    idx
}

/// Shared CMA/CEM update with elite weights `w`:
///
/// ```text
/// y_i    = u_i - mean
/// mean'  = mean + alpha · sum_i w_i y_i
/// Sigma' = (1 - alpha) Sigma + alpha · sum_i w_i y_i y_iᵀ
/// ```
fn elite_update(
    state: &GaussianSearchState,
    pop: &Population,
    elite_idx: &[usize],
    w: &[f64],
    alpha: f64,
) -> Result<GaussianSearchState> {
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    if alpha == 0.0 {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let mean = state.mean.as_slice();
    let ys: Vec<Vec<f64>> = elite_idx
        .iter()
        .map(|&i| pop.particle(i).as_slice().iter().zip(mean).map(|(u, m)| u - m).collect())
        .collect();

    let mut shift = vec![0.0; dim];
    for (y, wi) in ys.iter().zip(w) {
        for (s, yk) in shift.iter_mut().zip(y) {
            *s += wi * yk;
        }
    }
    let new_mean: Vec<f64> = mean.iter().zip(&shift).map(|(m, s)| m + alpha * s).collect();

    let mut sigma = state.covariance.to_dense() * (1.0 - alpha);
    for (y, wi) in ys.iter().zip(w) {
        let c = alpha * wi;
        for j in 0..dim {
            let cy = c * y[j];
            if cy == 0.0 {
                continue;
            }
            for k in j..dim {
                sigma[(k, j)] += cy * y[k];
            }
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            sigma[(j, k)] = sigma[(k, j)];
        }
    }
    let covariance = Covariance::Dense(sigma);
    let factor = factorize(&covariance, state.step)?;
    Ok(GaussianSearchState {
        mean: ControlTrajectory::from_vec_unchecked(new_mean),
        covariance,
        factor,
        step: state.step,
        elite_count: state.elite_count,
    })
}

fn elite_set(state: &GaussianSearchState, pop: &Population) -> Result<Vec<usize>> {
    check_dims(state, pop)?;
    let costs = pop.evaluated_costs()?;
    if state.elite_count > costs.len() {
        return invalid(format!(
            "elite_count {} exceeds population size {}",
            state.elite_count,
            costs.len()
        ));
    }
    Ok(elites(costs, state.elite_count))
}

/// CMA update: softmax weights over the elite costs.
pub fn cma_update(
    state: &GaussianSearchState,
    pop: &Population,
    alpha: f64,
    softmax: SoftmaxConfig,
) -> Result<GaussianSearchState> {
    let idx = elite_set(state, pop)?;
    let costs = pop.evaluated_costs()?;
    let elite_costs: Vec<f64> = idx.iter().map(|&i| costs[i]).collect();
    let w = softmax_weights(&elite_costs, softmax)?;
    elite_update(state, pop, &idx, w.as_slice(), alpha)
}

/// CEM update: uniform weights `1 / N_e` over the elites.
pub fn cem_update(state: &GaussianSearchState, pop: &Population, alpha: f64) -> Result<GaussianSearchState> {
    let idx = elite_set(state, pop)?;
    let w = vec![1.0 / idx.len() as f64; idx.len()];
    elite_update(state, pop, &idx, &w, alpha)
}

/// Which Gaussian update to iterate, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GaussianMethod {
    Mppi { softmax: SoftmaxConfig },
    Cma { alpha: f64, softmax: SoftmaxConfig },
    Cem { alpha: f64 },
}

impl GaussianMethod {
    fn update(&self, state: &GaussianSearchState, pop: &Population) -> Result<GaussianSearchState> {
        match *self {
            Self::Mppi { softmax } => mppi_mean_update(state, pop, softmax),
            Self::Cma { alpha, softmax } => cma_update(state, pop, alpha, softmax),
            Self::Cem { alpha } => cem_update(state, pop, alpha),
        }
    }
}

/// Iterates sample → evaluate → update.
///
/// If `init` is given it replaces the sampled population of the first
/// iteration, so several methods can start from the same particles.
pub fn run_gaussian_method<P: Objective + ?Sized>(
    method: GaussianMethod,
    problem: &P,
    state0: GaussianSearchState,
    n: usize,
    stop: &StoppingRule,
    rng: &RngStream,
    init: Option<Population>,
) -> Result<RunRecord> {
    stop.validate()?;
    if state0.dim() != problem.dim() {
        return invalid(format!(
            "search dimension {} does not match problem dimension {}",
            state0.dim(),
            problem.dim()
        ));
    }
    if let Some(p) = &init {
        if p.len() != n || p.dim() != problem.dim() {
            return invalid("initial population does not match population size and dimension");
        }
    }
    let mut init = init;
    let mut state = state0;
    let mut recorder = Recorder::new();
    let mut reason = StopReason::MaxIterations;
    let mut last_pop = None;

    for r in 0..stop.max_iterations {
        let pop = match init.take() {
            Some(p) => Population::new(p.into_particles(), r)?,
            None => sample_gaussian_population(&state, n, r, rng)?,
        };
        let pop = evaluate_population(problem, pop)?;
        recorder.record(&pop, problem.cost(state.mean.as_slice()), state.rms_scale())?;
        let next = method.update(&state, &pop)?;
        let displacement = (r > 0).then(|| state.mean.distance(&next.mean));
        let hit = stop.tolerance_hit(displacement, pop.diameter());
        state = next;
        last_pop = Some(pop);
        if let Some(hit) = hit {
            reason = hit;
            break;
        }
    }
    let pop = last_pop.expect("max_iterations >= 1");
    Ok(recorder.finish(pop, state.mean, reason, Vec::new()))
}
