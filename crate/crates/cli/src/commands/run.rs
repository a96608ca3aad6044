use cbo_core::{run_cbo, run_gaussian_method, Population, RunRecord, SoftmaxConfig};

use crate::config::{MethodKind, ProblemInstance, ProblemKind, RunConfig, Streams};
use crate::output::{run_stem, write_run, ArtifactPaths};
use crate::CliError;

pub struct RunOutcome {
    pub stem: String,
    pub method: MethodKind,
    pub seed: u64,
    pub env_seed: u64,
    pub instance: ProblemInstance,
    pub record: RunRecord,
    pub paths: ArtifactPaths,
}

/// Runs `method` from the given initial population.
pub fn execute_method(
    cfg: &RunConfig,
    method: MethodKind,
    instance: &ProblemInstance,
    init: Population,
    streams: &Streams,
) -> Result<RunRecord, CliError> {
    let objective = instance.objective();
    let rng = streams.method(method);
    let stop = cfg.stop.rule();
    let record = match method {
        MethodKind::Cbo => run_cbo(&*objective, init, &cfg.cbo_params()?, &stop, &rng)?,
        MethodKind::Cbs => run_cbs(cfg, &*objective, init, &rng)?,
        _ => {
            let (m, state) = cfg.gaussian_setup(method, instance.dim())?;
            run_gaussian_method(m, &*objective, state, cfg.population, &stop, &rng, Some(init))?
        }
    };
    for w in &record.warnings {
        log::warn!("{}: {w}", method.name());
    }
    Ok(record)
}

/// CBS is CBO with `lambda = 1/dt`, `sigma = sqrt(dt)` and no decay.
fn run_cbs(
    cfg: &RunConfig,
    objective: &dyn cbo_core::Objective,
    init: Population,
    rng: &cbo_core::RngStream,
) -> Result<RunRecord, CliError> {
    let c = &cfg.cbs;
    let params = cbo_core::CboParams {
        lambda: 1.0 / c.dt,
        sigma0: c.dt.sqrt(),
        dt: c.dt,
        sigma_decay: 1.0,
        noise_mode: c.noise_mode,
        softmax: SoftmaxConfig::new(c.rho).map_err(|e| CliError::Config(format!("cbs.rho: {e}")))?,
        rho_final: None,
    };
    Ok(run_cbo(objective, init, &params, &cfg.stop.rule(), rng)?)
}

/// One run of `method` with optimizer seed `seed` on environment `env_seed`,
/// artifacts written to `cfg.output_dir()`.
pub fn run_one(cfg: &RunConfig, method: MethodKind, seed: u64, env_seed: u64) -> Result<RunOutcome, CliError> {
    let instance = cfg.instance(env_seed)?;
    let streams = Streams::new(seed, env_seed);
    let init = cfg.init.sample(instance.dim(), cfg.population, &streams.init())?;
    let record = execute_method(cfg, method, &instance, init, &streams)?;
    let env_tag = (cfg.problem == ProblemKind::Tunnel).then_some(env_seed);
    let stem = run_stem(&instance, method, seed, env_tag);
    let paths = write_run(&cfg.output_dir(), &stem, &instance, &record)?;
    if cfg.render {
        crate::commands::render::render_to(&paths, &instance)?;
    }
    Ok(RunOutcome {
        stem,
        method,
        seed,
        env_seed,
        instance,
        record,
        paths,
    })
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate(&[cfg.method])?;
    let env_seed = cfg.env_seeds()[0];
    let outcome = run_one(cfg, cfg.method, cfg.seed, env_seed)?;
    let last = outcome.record.last_row();
    println!(
        "{}: {} iterations, final best cost {}, best ever {} -> {}",
        outcome.stem,
        outcome.record.rows.len(),
        last.best_cost,
        outcome.record.best_cost,
        outcome.paths.log.display()
    );
    Ok(outcome)
}
