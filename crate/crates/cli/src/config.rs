//! TOML run configuration.
//!
//! Every section has defaults, so a config file only needs to name what it
//! changes. Command-line flags override the file after loading, and
//! [`RunConfig::validate`] runs before any computation.

use std::path::{Path, PathBuf};

use cbo_core::{
    CboParams, ControlTrajectory, EnvGenConfig, GaussianMethod, GaussianSearchState, HimmelblauProblem, NoiseMode,
    PointMassEnv, Population, RngStream, SoftmaxConfig, StoppingRule,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Cbo,
    Cbs,
    Mppi,
    Cma,
    Cem,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cbo => "cbo",
            Self::Cbs => "cbs",
            Self::Mppi => "mppi",
            Self::Cma => "cma",
            Self::Cem => "cem",
        }
    }

    /// Stream id of the method's own random draws; fixed per method so that
    /// results do not depend on the order methods are listed in.
    fn stream_tag(self) -> u64 {
        match self {
            Self::Cbo => 2,
            Self::Cbs => 3,
            Self::Mppi => 4,
            Self::Cma => 5,
            Self::Cem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Himmelblau,
    Tunnel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HimmelblauConfig {
    pub alpha: f64,
}

impl Default for HimmelblauConfig {
    fn default() -> Self {
        Self { alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunnelConfig {
    /// Obstacle layouts; `run` uses the first, `compare` all of them.
    pub env_seeds: Vec<u64>,
    pub horizon: usize,
    pub dt: f64,
    pub gamma_v: f64,
    pub penalty_tunnel: f64,
    pub penalty_obstacle: f64,
    pub obstacles_min: usize,
    pub obstacles_max: usize,
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for TunnelConfig {
    fn default() -> Self {
        let env = PointMassEnv::canonical();
        let gen = EnvGenConfig::canonical(0);
        Self {
            env_seeds: vec![0],
            horizon: env.horizon,
            dt: env.dt,
            gamma_v: env.gamma_v,
            penalty_tunnel: env.penalty_tunnel,
            penalty_obstacle: env.penalty_obstacle,
            obstacles_min: gen.count_min,
            obstacles_max: gen.count_max,
            radius_min: gen.radius_min,
            radius_max: gen.radius_max,
        }
    }
}

impl TunnelConfig {
    pub fn generator(&self, env_seed: u64) -> EnvGenConfig {
        let mut gen = EnvGenConfig::canonical(env_seed);
        gen.base.horizon = self.horizon;
        gen.base.dt = self.dt;
        gen.base.gamma_v = self.gamma_v;
        gen.base.penalty_tunnel = self.penalty_tunnel;
        gen.base.penalty_obstacle = self.penalty_obstacle;
        gen.count_min = self.obstacles_min;
        gen.count_max = self.obstacles_max;
        gen.radius_min = self.radius_min;
        gen.radius_max = self.radius_max;
        gen
    }
}

/// How the shared initial population is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitConfig {
    /// Uniform on a box, given per coordinate or as one scalar for all.
    Uniform { low: f64, high: f64 },
    /// `mean + sigma * N(0, I)`; the mean defaults to zero.
    Gaussian {
        sigma: f64,
        #[serde(default)]
        mean: f64,
    },
}

impl InitConfig {
    pub fn center(&self) -> f64 {
        match *self {
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Gaussian { mean, .. } => mean,
        }
    }

    pub fn sample(&self, dim: usize, n: usize, rng: &RngStream) -> cbo_core::Result<Population> {
        match *self {
            Self::Uniform { low, high } => Population::uniform_box(&vec![low; dim], &vec![high; dim], n, rng),
            Self::Gaussian { sigma, mean } => {
                let center = ControlTrajectory::new(vec![mean; dim])?;
                Population::gaussian(&center, sigma, n, rng)
            }
        }
    }
}

impl Default for InitConfig {
    fn default() -> Self {
        Self::Gaussian { sigma: 1.0, mean: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CboConfig {
    pub lambda: f64,
    pub sigma0: f64,
    pub dt: f64,
    /// Fraction of `sigma0` left after the last iteration; sets the decay.
    pub final_sigma_fraction: f64,
    pub noise_mode: NoiseMode,
    pub rho: f64,
    pub rho_final: Option<f64>,
}

impl Default for CboConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            sigma0: 0.5,
            dt: 0.1,
            final_sigma_fraction: 0.2,
            noise_mode: NoiseMode::Isotropic,
            rho: 10.0,
            rho_final: Some(1000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbsConfig {
    pub dt: f64,
    pub noise_mode: NoiseMode,
    pub rho: f64,
}

impl Default for CbsConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            noise_mode: NoiseMode::Isotropic,
            rho: 10.0,
        }
    }
}

/// Shared settings of the Gaussian baselines. `sigma` is the initial
/// per-coordinate standard deviation; it defaults to the spread of the
/// initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub sigma: Option<f64>,
    pub rho: f64,
    /// Learning rate of the CMA and CEM updates.
    pub alpha: f64,
    pub elite_count: usize,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            rho: 10.0,
            alpha: 0.1,
            elite_count: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub max_iterations: usize,
    pub consensus_tol: f64,
    pub diameter_tol: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            consensus_tol: 0.0,
            diameter_tol: 0.0,
        }
    }
}

impl StopConfig {
    pub fn rule(&self) -> StoppingRule {
        StoppingRule {
            max_iterations: self.max_iterations,
            consensus_tol: self.consensus_tol,
            diameter_tol: self.diameter_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub method: MethodKind,
    /// Methods run by `compare`.
    pub methods: Vec<MethodKind>,
    pub population: usize,
    pub seed: u64,
    /// Optimizer seeds for `compare`; defaults to `[seed]`.
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub render: bool,
    /// Cost level for the iterations-to-threshold column of `compare`.
    pub threshold: Option<f64>,
    pub stop: StopConfig,
    pub init: InitConfig,
    pub himmelblau: HimmelblauConfig,
    pub tunnel: TunnelConfig,
    pub cbo: CboConfig,
    pub cbs: CbsConfig,
    pub mppi: GaussianConfig,
    pub cma: GaussianConfig,
    pub cem: GaussianConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Himmelblau,
            method: MethodKind::Cbo,
            methods: vec![MethodKind::Cbo, MethodKind::Mppi, MethodKind::Cma],
            population: 300,
            seed: 0,
            seeds: Vec::new(),
            output_dir: None,
            render: false,
            threshold: None,
            stop: StopConfig::default(),
            init: InitConfig::Uniform { low: -6.0, high: 6.0 },
            himmelblau: HimmelblauConfig::default(),
            tunnel: TunnelConfig::default(),
            cbo: CboConfig::default(),
            cbs: CbsConfig::default(),
            mppi: GaussianConfig::default(),
            cma: GaussianConfig::default(),
            cem: GaussianConfig {
                alpha: 0.5,
                ..GaussianConfig::default()
            },
        }
    }
}

/// A concrete objective built from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemInstance {
    Himmelblau { alpha: f64 },
    Tunnel(PointMassEnv),
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        match self {
            Self::Himmelblau { .. } => 2,
            Self::Tunnel(env) => env.dim(),
        }
    }

    pub fn objective(&self) -> Box<dyn cbo_core::Objective + Send + Sync> {
        match self {
            Self::Himmelblau { alpha } => Box::new(HimmelblauProblem { alpha: *alpha }),
            Self::Tunnel(env) => Box::new(env.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Himmelblau { .. } => "himmelblau",
            Self::Tunnel(_) => "tunnel",
        }
    }
}

fn check(ok: bool, field: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: {msg}")))
    }
}

fn core_check<T>(field: &str, r: cbo_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("{field}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn optimizer_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn env_seeds(&self) -> Vec<u64> {
        match self.problem {
            ProblemKind::Himmelblau => vec![0],
            ProblemKind::Tunnel => self.tunnel.env_seeds.clone(),
        }
    }

    pub fn instance(&self, env_seed: u64) -> Result<ProblemInstance, CliError> {
        Ok(match self.problem {
            ProblemKind::Himmelblau => ProblemInstance::Himmelblau {
                alpha: self.himmelblau.alpha,
            },
            ProblemKind::Tunnel => ProblemInstance::Tunnel(
                cbo_core::generate_environment(&self.tunnel.generator(env_seed))
                    .map_err(|e| CliError::Runtime(e.into()))?,
            ),
        })
    }

    pub fn cbo_params(&self) -> Result<CboParams, CliError> {
        let c = &self.cbo;
        check(
            c.final_sigma_fraction > 0.0 && c.final_sigma_fraction <= 1.0,
            "cbo.final_sigma_fraction",
            "must lie in (0, 1]",
        )?;
        let iters = self.stop.max_iterations.max(1) as f64;
        let params = CboParams {
            lambda: c.lambda,
            sigma0: c.sigma0,
            dt: c.dt,
            sigma_decay: c.final_sigma_fraction.powf(1.0 / iters),
            noise_mode: c.noise_mode,
            softmax: core_check("cbo.rho", SoftmaxConfig::new(c.rho))?,
            rho_final: c.rho_final,
        };
        core_check("cbo", params.validate())?;
        Ok(params)
    }

    fn gaussian_section(&self, method: MethodKind) -> &GaussianConfig {
        match method {
            MethodKind::Mppi => &self.mppi,
            MethodKind::Cma => &self.cma,
            _ => &self.cem,
        }
    }

    /// Standard deviation of one coordinate of the initial population.
    fn init_spread(&self) -> f64 {
        match self.init {
            InitConfig::Uniform { low, high } => (high - low) / 12f64.sqrt(),
            InitConfig::Gaussian { sigma, .. } => sigma,
        }
    }

    pub fn gaussian_setup(&self, method: MethodKind, dim: usize) -> Result<(GaussianMethod, GaussianSearchState), CliError> {
        let section = method.name();
        let g = self.gaussian_section(method);
        let sigma = g.sigma.unwrap_or_else(|| self.init_spread());
        check(sigma > 0.0 && sigma.is_finite(), &format!("{section}.sigma"), "must be positive")?;
        check(
            (0.0..=1.0).contains(&g.alpha) && g.alpha > 0.0,
            &format!("{section}.alpha"),
            "must lie in (0, 1]",
        )?;
        let softmax = core_check(&format!("{section}.rho"), SoftmaxConfig::new(g.rho))?;
        let m = match method {
            MethodKind::Mppi => GaussianMethod::Mppi { softmax },
            MethodKind::Cma => GaussianMethod::Cma { alpha: g.alpha, softmax },
            MethodKind::Cem => GaussianMethod::Cem { alpha: g.alpha },
            _ => unreachable!("not a Gaussian method"),
        };
        let elites = if method == MethodKind::Mppi { 1 } else { g.elite_count };
        check(
            elites >= 1 && elites <= self.population,
            &format!("{section}.elite_count"),
            format!("must lie in [1, population = {}]", self.population),
        )?;
        let mean = core_check("init", ControlTrajectory::new(vec![self.init.center(); dim]))?;
        let state = core_check(section, GaussianSearchState::isotropic(mean, sigma, elites))?;
        Ok((m, state))
    }

    /// Checks every setting the selected methods will use.
    pub fn validate(&self, methods: &[MethodKind]) -> Result<(), CliError> {
        check(self.population >= 1, "population", "must be at least 1")?;
        core_check("stop", self.stop.rule().validate())?;
        match self.init {
            InitConfig::Uniform { low, high } => {
                check(low < high && low.is_finite() && high.is_finite(), "init", "need finite low < high")?
            }
            InitConfig::Gaussian { sigma, mean } => {
                check(sigma >= 0.0 && sigma.is_finite() && mean.is_finite(), "init.sigma", "must be nonnegative")?
            }
        }
        match self.problem {
            ProblemKind::Himmelblau => core_check("himmelblau.alpha", HimmelblauProblem::new(self.himmelblau.alpha).map(|_| ()))?,
            ProblemKind::Tunnel => {
                let t = &self.tunnel;
                check(!t.env_seeds.is_empty(), "tunnel.env_seeds", "must not be empty")?;
                check(t.horizon >= 1, "tunnel.horizon", "must be at least 1")?;
                check(t.obstacles_min <= t.obstacles_max, "tunnel.obstacles_min", "exceeds obstacles_max")?;
                check(
                    t.radius_min > 0.0 && t.radius_min <= t.radius_max,
                    "tunnel.radius_min",
                    "need 0 < radius_min <= radius_max",
                )?;
                core_check("tunnel", t.generator(0).base.validate())?;
            }
        }
        check(!methods.is_empty(), "methods", "must not be empty")?;
        let dim = match self.problem {
            ProblemKind::Himmelblau => 2,
            ProblemKind::Tunnel => 2 * self.tunnel.horizon,
        };
        for &m in methods {
            match m {
                MethodKind::Cbo => {
                    self.cbo_params()?;
                }
                MethodKind::Cbs => {
                    check(self.cbs.dt > 0.0 && self.cbs.dt.is_finite(), "cbs.dt", "must be positive")?;
                    core_check("cbs.rho", SoftmaxConfig::new(self.cbs.rho))?;
                }
                _ => {
                    self.gaussian_setup(m, dim)?;
                }
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(default_output_dir)
    }
}

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "CBO_BENCH_OUT_DIR";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Random streams of one `(optimizer seed, environment seed)` cell.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    base: RngStream,
    env_seed: u64,
}

impl Streams {
    pub fn new(seed: u64, env_seed: u64) -> Self {
        Self {
            base: RngStream::new(seed),
            env_seed,
        }
    }

    /// Stream of the shared initial population.
    pub fn init(&self) -> RngStream {
        self.base.with_run(self.env_seed << 8 | 1)
    }

    pub fn method(&self, m: MethodKind) -> RngStream {
        self.base.with_run(self.env_seed << 8 | m.stream_tag())
    }
}
