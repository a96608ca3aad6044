//! Consensus-based optimization (CBO) for zero-order trajectory optimization,
//! together with the sampling baselines it is usually compared against
//! (MPPI, CMA, CEM, consensus-based sampling), benchmark problems and
//! diagnostics for the convergence theory.
//!
//! ```
//! use cbo_core::{run_cbo, CboParams, HimmelblauProblem, Population, RngStream, StoppingRule};
//!
//! let problem = HimmelblauProblem::new(0.1).unwrap();
//! let rng = RngStream::new(7);
//! let init = Population::uniform_box(&[-6.0, -6.0], &[6.0, 6.0], 200, &rng.with_run(1)).unwrap();
//! let params = CboParams {
//!     lambda: 1.0,
//!     sigma0: 0.8,
//!     dt: 0.1,
//!     sigma_decay: CboParams::default_decay(200),
//!     noise_mode: Default::default(),
//!     softmax: cbo_core::SoftmaxConfig::new(10.0).unwrap(),
//!     rho_final: Some(200.0),
//! };
//! let record = run_cbo(&problem, init, &params, &StoppingRule::iterations(200), &rng).unwrap();
//! assert!(record.best_cost < 1.0);
//! ```

pub mod diagnostics;
mod error;
pub mod optimizers;
mod population;
pub mod problems;
mod rng;

pub use diagnostics::{
    check_lambda, empirical_fisher_gaussian_mean, gaussian_kl_mc, gaussian_kl_same_cov, log_surrogate_mc,
    lyapunov_v, min_iterations_estimate, surrogate_mc, DecayParams, SurrogateEstimate,
};
pub use error::{Error, Result};
pub use optimizers::{
    cbo_step, cbs_step, cem_update, cma_update, evaluate_population, mppi_mean_update, mppi_update, run_cbo,
    run_gaussian_method, sample_gaussian_population, CboParams, Covariance, GaussianMethod, GaussianSearchState,
    IterationRow, NoiseMode, RunRecord, StopReason, StoppingRule,
};
pub use population::{
    best_particle, consensus_point, softmax_weights, ControlTrajectory, Population, SoftmaxConfig, WeightVector,
};
pub use problems::{
    generate_environment, himmelblau_penalized, point_mass_rollout, EnvGenConfig, HimmelblauProblem, Objective,
    PointMassEnv, Rollout, HIMMELBLAU_GLOBAL_MINIMIZER,
};
pub use rng::{RngStream, StreamRng};
