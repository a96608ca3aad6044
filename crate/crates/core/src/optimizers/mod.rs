//! Update rules and the iterate-until-stopping drivers.
//!
//! All drivers share one loop shape: evaluate the population, record a
//! [`IterationRow`], test the [`StoppingRule`], update. Cost evaluation is the
//! only parallel region; every random draw comes from a per-particle
//! [`RngStream`](crate::RngStream) coordinate, so results do not depend on the
//! number of worker threads.

mod cbo;
mod gaussian;
mod record;

pub use cbo::{cbo_step, cbs_step, run_cbo, CboParams, NoiseMode};
pub use gaussian::{
    cem_update, cma_update, mppi_mean_update, mppi_update, run_gaussian_method,
    sample_gaussian_population, Covariance, GaussianMethod, GaussianSearchState,
};
pub use record::{IterationRow, RunRecord, StopReason, StoppingRule};
pub(crate) use gaussian::factorize;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::population::Population;
use crate::problems::Objective;

/// Evaluates every particle and attaches the costs.
///
/// Evaluation runs on the current rayon pool; the costs are collected in
/// particle order.
pub fn evaluate_population<P: Objective + ?Sized>(problem: &P, pop: Population) -> Result<Population> {
    if pop.dim() != problem.dim() {
        return invalid(format!(
            "population dimension {} does not match problem dimension {}",
            pop.dim(),
            problem.dim()
        ));
    }
    let costs: Vec<f64> = pop
        .particles()
        .par_iter()
        .map(|p| problem.cost(p.as_slice()))
        .collect();
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::Evaluation {
            iteration: pop.iteration(),
            particle: i,
            value: costs[i],
        });
    }
    pop.with_costs(costs)
}
