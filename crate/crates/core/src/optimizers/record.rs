use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::population::{ControlTrajectory, Population};

/// When to stop iterating. Whichever condition fires first wins;
/// a tolerance of zero disables that test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iterations: usize,
    /// Stop once the consensus point (or mean) moves less than this between iterations.
    #[serde(default)]
    pub consensus_tol: f64,
    /// Stop once the population diameter falls below this.
    #[serde(default)]
    pub diameter_tol: f64,
}

impl StoppingRule {
    pub fn iterations(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            consensus_tol: 0.0,
            diameter_tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return invalid("max_iterations must be at least 1");
        }
        if !(self.consensus_tol >= 0.0 && self.diameter_tol >= 0.0) {
            return invalid("stopping tolerances must be nonnegative");
        }
        Ok(())
    }

    pub(crate) fn tolerance_hit(&self, displacement: Option<f64>, diameter: f64) -> Option<StopReason> {
        if let Some(d) = displacement {
            if d < self.consensus_tol {
                return Some(StopReason::ConsensusStalled);
            }
        }
        if diameter < self.diameter_tol {
            return Some(StopReason::Collapsed);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxIterations,
    ConsensusStalled,
    Collapsed,
}

/// One logged iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    /// Lowest cost in this iteration's population.
    pub best_cost: f64,
    pub mean_cost: f64,
    /// Cost of the consensus point (CBO) or of the search mean (Gaussian methods).
    pub consensus_cost: f64,
    pub population_diameter: f64,
    /// CBO's current sigma, or the RMS standard deviation `sqrt(tr(Sigma) / dim)`.
    pub sigma_or_alpha: f64,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<IterationRow>,
    pub final_population: Population,
    pub final_consensus: ControlTrajectory,
    /// Lowest-cost particle seen over the whole run.
    pub best: ControlTrajectory,
    pub best_cost: f64,
    pub stop_reason: StopReason,
    pub warnings: Vec<String>,
}

impl RunRecord {
    /// Running minimum of the per-iteration best cost.
    pub fn running_best(&self) -> Vec<f64> {
        self.rows
            .iter()
            .scan(f64::INFINITY, |m, r| {
                *m = m.min(r.best_cost);
                Some(*m)
            })
            .collect()
    }

    pub fn last_row(&self) -> &IterationRow {
        self.rows.last().expect("a run records at least one iteration")
    }
}

/// Accumulates rows and the best-ever particle while a driver runs.
pub(crate) struct Recorder {
    start: std::time::Instant,
    pub rows: Vec<IterationRow>,
    pub best: Option<(ControlTrajectory, f64)>,
}

impl Recorder {
    pub fn new() -> Self {
        Self {
            start: std::time::Instant::now(),
            rows: Vec::new(),
            best: None,
        }
    }

    pub fn record(&mut self, pop: &Population, consensus_cost: f64, scale: f64) -> Result<()> {
        let (idx, best_cost) = crate::population::best_particle(pop)?;
        if self.best.as_ref().is_none_or(|(_, c)| best_cost < *c) {
            self.best = Some((pop.particle(idx).clone(), best_cost));
        }
        self.rows.push(IterationRow {
            iteration: pop.iteration(),
            best_cost,
            mean_cost: pop.mean_cost().expect("evaluated"),
            consensus_cost,
            population_diameter: pop.diameter(),
            sigma_or_alpha: scale,
            wallclock_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    pub fn finish(
        self,
        final_population: Population,
        final_consensus: ControlTrajectory,
        stop_reason: StopReason,
        warnings: Vec<String>,
    ) -> RunRecord {
        let (best, best_cost) = self.best.expect("at least one iteration recorded");
        RunRecord {
            rows: self.rows,
            final_population,
            final_consensus,
            best,
            best_cost,
            stop_reason,
            warnings,
        }
    }
}
