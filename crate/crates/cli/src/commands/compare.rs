use std::fmt::Write as _;
use std::fs;

use crate::commands::run::{execute_method, RunOutcome};
use crate::config::{MethodKind, ProblemKind, RunConfig, Streams};
use crate::output::{instance_hash, run_stem, write_run};
use crate::CliError;

/// One cell of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: MethodKind,
    pub env_seed: u64,
    pub seed: u64,
    /// Best cost in the final iteration's population.
    pub final_best_cost: f64,
    /// First iteration whose running best reaches the threshold.
    pub iterations_to_threshold: Option<usize>,
    pub wallclock_ms: f64,
    pub env_hash: String,
    pub stem: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub rows: Vec<SummaryRow>,
    /// Median final best cost per method, in the order methods were given.
    pub medians: Vec<(MethodKind, f64)>,
}

impl ComparisonSummary {
    pub fn median(&self, method: MethodKind) -> Option<f64> {
        self.medians.iter().find(|(m, _)| *m == method).map(|(_, v)| *v)
    }

    /// Final best costs of `method`, ordered by (environment, seed).
    pub fn costs(&self, method: MethodKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.final_best_cost)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("method,env_seed,seed,final_best_cost,iterations_to_threshold,wallclock_ms,env_hash,run\n");
        for r in &self.rows {
            let hit = r.iterations_to_threshold.map(|i| i.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{hit},{:.3},{},{}",
                r.method.name(),
                r.env_seed,
                r.seed,
                r.final_best_cost,
                r.wallclock_ms,
                r.env_hash,
                r.stem
            )
            .unwrap();
        }
        out
    }

    fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<6} {:>8} {:>6} {:>16} {:>10}", "method", "env", "seed", "final best", "ms").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:<6} {:>8} {:>6} {:>16.3} {:>10.0}",
                r.method.name(),
                r.env_seed,
                r.seed,
                r.final_best_cost,
                r.wallclock_ms
            )
            .unwrap();
        }
        for (m, v) in &self.medians {
            writeln!(out, "median {:<6} {v:.3}", m.name()).unwrap();
        }
        out
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every method on every (environment, seed) cell. Within a cell all
/// methods receive the same problem instance and the same initial
/// population.
pub fn compare_runs(cfg: &RunConfig) -> Result<(ComparisonSummary, Vec<RunOutcome>), CliError> {
    let mut methods = cfg.methods.clone();
    methods.dedup();
    cfg.validate(&methods)?;
    let dir = cfg.output_dir();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for env_seed in cfg.env_seeds() {
        let instance = cfg.instance(env_seed)?;
        let hash = instance_hash(&instance);
        for seed in cfg.optimizer_seeds() {
            let streams = Streams::new(seed, env_seed);
            let init = cfg.init.sample(instance.dim(), cfg.population, &streams.init())?;
            for &method in &methods {
                let record = execute_method(cfg, method, &instance, init.clone(), &streams)?;
                let env_tag = (cfg.problem == ProblemKind::Tunnel).then_some(env_seed);
                let stem = run_stem(&instance, method, seed, env_tag);
                let paths = write_run(&dir, &stem, &instance, &record)?;
                if cfg.render {
                    crate::commands::render::render_to(&paths, &instance)?;
                }
                let last = record.last_row();
                let hit = cfg
                    .threshold
                    .and_then(|t| record.running_best().iter().position(|c| *c <= t));
                log::info!("{stem}: final best {}", last.best_cost);
                rows.push(SummaryRow {
                    method,
                    env_seed,
                    seed,
                    final_best_cost: last.best_cost,
                    iterations_to_threshold: hit,
                    wallclock_ms: last.wallclock_ms,
                    env_hash: hash.clone(),
                    stem: stem.clone(),
                });
                outcomes.push(RunOutcome {
                    stem,
                    method,
                    seed,
                    env_seed,
                    instance: instance.clone(),
                    record,
                    paths,
                });
            }
        }
    }
    let medians = methods
        .iter()
        .map(|&m| {
            let costs = rows.iter().filter(|r| r.method == m).map(|r| r.final_best_cost).collect();
            (m, median(costs))
        })
        .collect();
    Ok((ComparisonSummary { rows, medians }, outcomes))
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<ComparisonSummary, CliError> {
    let (summary, _) = compare_runs(cfg)?;
    let dir = cfg.output_dir();
    let path = dir.join(format!("{}_summary.csv", cfg.instance(cfg.env_seeds()[0])?.name()));
    fs::write(&path, summary.to_csv())
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing {}: {e}", path.display())))?;
    print!("{}", summary.table());
    println!("summary -> {}", path.display());
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
