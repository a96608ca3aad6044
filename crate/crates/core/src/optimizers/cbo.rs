//! Consensus-based optimization.
//!
//! Each particle follows the Euler–Maruyama discretization of
//!
//! ```text
//! du = -lambda (u - ubar) dt + sigma D(u - ubar) dW
//! ```
//!
//! where `ubar` is the softmax-weighted consensus point. The drift pulls every
//! particle toward the consensus; the diffusion scales with the particle's
//! distance from it, so far particles explore more and the noise vanishes as
//! the population agrees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{Recorder, RunRecord, StopReason, StoppingRule};
use super::evaluate_population;
use crate::diagnostics::check_lambda;
use crate::error::{invalid, Result};
use crate::population::{consensus_point, softmax_weights, ControlTrajectory, Population, SoftmaxConfig};
use crate::problems::Objective;
use crate::rng::RngStream;

/// Shape of the diffusion coefficient `D(v)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// `D(v) = |v|_2`, one scalar for all coordinates.
    #[default]
    Isotropic,
    /// `D(v) = diag(|v_1|, ..., |v_d|)`.
    Anisotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CboParams {
    /// Drift rate toward the consensus point.
    pub lambda: f64,
    /// Noise intensity at the first iteration.
    pub sigma0: f64,
    /// Euler–Maruyama step.
    pub dt: f64,
    /// Multiplicative per-iteration decay of sigma.
    pub sigma_decay: f64,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    pub softmax: SoftmaxConfig,
    /// If set, rho is ramped linearly from `softmax.rho` to this value over the run.
    #[serde(default)]
    pub rho_final: Option<f64>,
}

impl CboParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.lambda >= 0.0) {
            return invalid(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        let ldt = self.lambda * self.dt;
        if ldt > 1.0 + 1e-12 {
            return invalid(format!("lambda * dt must lie in (0, 1], got {ldt}"));
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return invalid(format!("sigma0 must be nonnegative, got {}", self.sigma0));
        }
        if !(self.sigma_decay > 0.0 && self.sigma_decay <= 1.0) {
            return invalid(format!("sigma_decay must lie in (0, 1], got {}", self.sigma_decay));
        }
        SoftmaxConfig::new(self.softmax.rho)?;
        if let Some(r) = self.rho_final {
            SoftmaxConfig::new(r)?;
        }
        Ok(())
    }

    /// Decay factor that takes sigma to 1% of its initial value after `iterations` steps.
    pub fn default_decay(iterations: usize) -> f64 {
        0.01f64.powf(1.0 / iterations.max(1) as f64)
    }

    fn rho_at(&self, iteration: usize, max_iterations: usize) -> f64 {
        match self.rho_final {
            Some(end) if max_iterations > 1 => {
                let t = iteration as f64 / (max_iterations - 1) as f64;
                self.softmax.rho + (end - self.softmax.rho) * t
            }
            _ => self.softmax.rho,
        }
    }
}

/// One CBO iteration on an evaluated population, using `params.sigma0` as
/// the current noise intensity and `params.softmax` for the consensus.
pub fn cbo_step(pop: &Population, params: &CboParams, rng: &RngStream) -> Result<Population> {
    params.validate()?;
    let w = softmax_weights(pop.evaluated_costs()?, params.softmax)?;
    let consensus = consensus_point(pop, &w)?;
    Ok(euler_maruyama(pop, &consensus, params, rng))
}

fn euler_maruyama(
    pop: &Population,
    consensus: &ControlTrajectory,
    params: &CboParams,
    rng: &RngStream,
) -> Population {
    let keep = 1.0 - params.lambda * params.dt;
    let noise = params.sigma0 * params.dt.sqrt();
    let ubar = consensus.as_slice();
    let iteration = pop.iteration() as u64;
    let particles = pop
        .particles()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let eps = rng.at(iteration, i as u64).standard_normals(ubar.len());
            let diff: Vec<f64> = p.as_slice().iter().zip(ubar).map(|(u, c)| u - c).collect();
            let next = match params.noise_mode {
                NoiseMode::Isotropic => {
                    let scale = noise * norm(&diff);
                    (0..diff.len())
                        .map(|k| ubar[k] + keep * diff[k] + scale * eps[k])
                        .collect()
                }
                NoiseMode::Anisotropic => (0..diff.len())
                    .map(|k| ubar[k] + keep * diff[k] + (noise * diff[k].abs()) * eps[k])
                    .collect(),
            };
            ControlTrajectory::from_vec_unchecked(next)
        })
        .collect();
    Population::new(particles, pop.iteration() + 1).expect("shape preserved")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Consensus-based sampling: every particle is redrawn around the consensus,
/// `u' = ubar + dt·D(u - ubar)·dW`.
///
/// This is the `lambda·dt = 1`, `sigma = sqrt(dt)` instance of [`cbo_step`]
/// and consumes the same random stream coordinates.
pub fn cbs_step(
    pop: &Population,
    dt: f64,
    softmax: SoftmaxConfig,
    noise_mode: NoiseMode,
    rng: &RngStream,
) -> Result<Population> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    let w = softmax_weights(pop.evaluated_costs()?, softmax)?;
    let consensus = consensus_point(pop, &w)?;
    let ubar = consensus.as_slice();
    let iteration = pop.iteration() as u64;
    let particles = pop
        .particles()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let eps = rng.at(iteration, i as u64).standard_normals(ubar.len());
            let diff: Vec<f64> = p.as_slice().iter().zip(ubar).map(|(u, c)| u - c).collect();
            let next = match noise_mode {
                NoiseMode::Isotropic => {
                    let scale = dt * norm(&diff);
                    (0..diff.len()).map(|k| ubar[k] + scale * eps[k]).collect()
                }
                NoiseMode::Anisotropic => (0..diff.len())
                    .map(|k| ubar[k] + (dt * diff[k].abs()) * eps[k])
                    .collect(),
            };
            ControlTrajectory::from_vec_unchecked(next)
        })
        .collect();
    Population::new(particles, pop.iteration() + 1)
}

/// Runs CBO from `init` until the stopping rule fires.
///
/// Every iteration evaluates the population once, logs a row, and takes one
/// step; sigma is multiplied by `sigma_decay` after each step.
pub fn run_cbo<P: Objective + ?Sized>(
    problem: &P,
    init: Population,
    params: &CboParams,
    stop: &StoppingRule,
    rng: &RngStream,
) -> Result<RunRecord> {
    params.validate()?;
    stop.validate()?;
    if init.dim() != problem.dim() {
        return invalid(format!(
            "initial population dimension {} does not match problem dimension {}",
            init.dim(),
            problem.dim()
        ));
    }
    let mut warnings = Vec::new();
    let threshold = check_lambda(params.sigma0, problem.dim(), 1);
    if params.lambda <= threshold {
        let msg = format!(
            "lambda = {} is at or below dim * sigma^2 / 2 = {threshold}; the Lyapunov decay rate is not positive at the initial sigma",
            params.lambda
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut recorder = Recorder::new();
    let mut pop = init;
    let mut current = *params;
    let mut previous: Option<ControlTrajectory> = None;
    let mut reason = StopReason::MaxIterations;
    let mut consensus = ControlTrajectory::zeros(problem.dim());

    for r in 0..stop.max_iterations {
        let evaluated = evaluate_population(problem, pop)?;
        current.softmax.rho = params.rho_at(r, stop.max_iterations);
        let w = softmax_weights(evaluated.evaluated_costs()?, current.softmax)?;
        consensus = consensus_point(&evaluated, &w)?;
        recorder.record(&evaluated, problem.cost(consensus.as_slice()), current.sigma0)?;

        let displacement = previous.as_ref().map(|p| p.distance(&consensus));
        if let Some(hit) = stop.tolerance_hit(displacement, evaluated.diameter()) {
            reason = hit;
            pop = evaluated;
            break;
        }
        pop = euler_maruyama(&evaluated, &consensus, &current, rng);
        current.sigma0 *= params.sigma_decay;
        previous = Some(consensus.clone());
    }
    Ok(recorder.finish(pop, consensus, reason, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::Population;

    fn params(lambda: f64, sigma: f64, dt: f64) -> CboParams {
        CboParams {
            lambda,
            sigma0: sigma,
            dt,
            sigma_decay: 1.0,
            noise_mode: NoiseMode::Isotropic,
            softmax: SoftmaxConfig::new(1.0).unwrap(),
            rho_final: None,
        }
    }

    fn evaluated(rows: Vec<Vec<f64>>, costs: Vec<f64>) -> Population {
        Population::from_rows(rows, 0).unwrap().with_costs(costs).unwrap()
    }

    #[test]
    fn drift_only_halves_offset() {
        // particle [2] with a far cheaper particle [0] pinning the consensus
        let pop = evaluated(vec![vec![0.0], vec![2.0]], vec![0.0, 1e6]);
        let out = cbo_step(&pop, &params(0.5, 0.0, 1.0), &RngStream::new(1)).unwrap();
        assert_eq!(out.particle(1).as_slice(), &[1.0]);
        assert_eq!(out.particle(0).as_slice(), &[0.0]);
        assert_eq!(out.iteration(), 1);
        assert!(!out.is_evaluated());
    }

    #[test]
    fn full_contraction_collapses_onto_consensus() {
        let pop = evaluated(
            vec![vec![1.0, -2.0], vec![0.3, 4.0], vec![-5.0, 0.5]],
            vec![1.0, 2.0, 0.5],
        );
        let p = params(2.0, 0.0, 0.5);
        let w = softmax_weights(pop.costs().unwrap(), p.softmax).unwrap();
        let c = consensus_point(&pop, &w).unwrap();
        let out = cbo_step(&pop, &p, &RngStream::new(3)).unwrap();
        for q in out.particles() {
            assert_eq!(q, &c);
        }
    }

    #[test]
    fn identical_particles_stay_put() {
        let row = vec![0.7, -1.1, 3.0];
        let pop = evaluated(vec![row.clone(); 4], vec![2.0; 4]);
        for mode in [NoiseMode::Isotropic, NoiseMode::Anisotropic] {
            let p = CboParams { noise_mode: mode, ..params(0.3, 5.0, 0.1) };
            let out = cbo_step(&pop, &p, &RngStream::new(7)).unwrap();
            for q in out.particles() {
                assert_eq!(q.as_slice(), row.as_slice());
            }
        }
    }

    #[test]
    fn single_particle_cbs_is_identity() {
        let pop = evaluated(vec![vec![1.5, -2.0]], vec![3.0]);
        let out = cbs_step(&pop, 0.3, SoftmaxConfig::new(1.0).unwrap(), NoiseMode::Isotropic, &RngStream::new(2))
            .unwrap();
        assert_eq!(out.particle(0).as_slice(), &[1.5, -2.0]);
    }

    #[test]
    fn cbs_small_dt_collapses() {
        let pop = evaluated(vec![vec![0.0], vec![10.0], vec![-4.0]], vec![1.0, 2.0, 3.0]);
        let soft = SoftmaxConfig::new(1.0).unwrap();
        let w = softmax_weights(pop.costs().unwrap(), soft).unwrap();
        let c = consensus_point(&pop, &w).unwrap();
        let out = cbs_step(&pop, 1e-12, soft, NoiseMode::Isotropic, &RngStream::new(2)).unwrap();
        for q in out.particles() {
            assert!((q.as_slice()[0] - c.as_slice()[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn diffusion_variance_matches_coefficient() {
        // lambda = 0, sigma = 1, dt = 1, offset 3: u' = u + 3 dW, variance 9
        let n = 100_000;
        let mut rows = vec![vec![0.0]];
        rows.extend(std::iter::repeat_n(vec![3.0], n));
        let mut costs = vec![0.0];
        costs.extend(std::iter::repeat_n(1000.0, n));
        let pop = evaluated(rows, costs);
        let p = CboParams {
            softmax: SoftmaxConfig::new(1e6).unwrap(),
            ..params(0.0, 1.0, 1.0)
        };
        let out = cbo_step(&pop, &p, &RngStream::new(11)).unwrap();
        let xs: Vec<f64> = out.particles()[1..].iter().map(|q| q.as_slice()[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
        assert!((var - 9.0).abs() < 0.27, "variance {var}");
    }

    #[test]
    fn rejects_unevaluated_and_bad_params() {
        let pop = Population::from_rows(vec![vec![0.0]], 0).unwrap();
        assert!(cbo_step(&pop, &params(1.0, 1.0, 0.1), &RngStream::new(0)).is_err());
        let pop = evaluated(vec![vec![0.0]], vec![0.0]);
        assert!(cbo_step(&pop, &params(20.0, 1.0, 0.1), &RngStream::new(0)).is_err());
        assert!(cbo_step(&pop, &params(1.0, -1.0, 0.1), &RngStream::new(0)).is_err());
        let bad_decay = CboParams { sigma_decay: 0.0, ..params(1.0, 1.0, 0.1) };
        assert!(cbo_step(&pop, &bad_decay, &RngStream::new(0)).is_err());
    }

    #[test]
    fn default_decay_reaches_one_percent() {
        let d = CboParams::default_decay(250);
        assert!((d.powi(250) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rho_ramp_endpoints() {
        let p = CboParams { rho_final: Some(100.0), ..params(1.0, 1.0, 0.1) };
        assert_eq!(p.rho_at(0, 11), 1.0);
        assert_eq!(p.rho_at(10, 11), 100.0);
        assert!((p.rho_at(5, 11) - 50.5).abs() < 1e-12);
    }
}
