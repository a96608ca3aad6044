//! Benchmark harness behind the `cbo-bench` binary: config loading, seeded
//! runs and comparisons, CSV logs, SVG renders and diagnostic reports.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{MethodKind, ProblemKind, RunConfig};

/// Failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values; exit code 1.
    Config(String),
    /// Failure while computing or writing artifacts; exit code 2.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config error: {msg}"),
            Self::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.into())
    }
}

impl From<cbo_core::Error> for CliError {
    fn from(e: cbo_core::Error) -> Self {
        Self::Runtime(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "cbo-bench", version, about = "Consensus-based optimization benchmarks")]
pub struct Cli {
    /// Worker threads for population evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method on one problem and write its iteration log.
    Run(RunArgs),
    /// Run several methods on shared environments and initial populations.
    Compare(RunArgs),
    /// Render SVGs from the artifacts of earlier runs.
    Render(RenderArgs),
    /// Evaluate theory diagnostics.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// TOML config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Method for `run`; for `compare`, a comma-separated list.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodKind>,
    /// Population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// Optimizer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Artifact directory [default: $CBO_BENCH_OUT_DIR, else ./runs].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write SVG renders.
    #[arg(long)]
    pub render: bool,
}

impl RunArgs {
    /// Loads the config file (or defaults) and applies the flag overrides.
    pub fn resolve(&self, compare: bool) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        match (compare, self.method.as_slice()) {
            (_, []) => {}
            (false, [m]) => cfg.method = *m,
            (false, _) => return Err(CliError::Config("--method: run takes exactly one method".into())),
            (true, ms) => cfg.methods = ms.to_vec(),
        }
        if let Some(n) = self.pop {
            cfg.population = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.seeds.clear();
        }
        if let Some(i) = self.iters {
            cfg.stop.max_iterations = i;
        }
        if let Some(d) = &self.out_dir {
            cfg.output_dir = Some(d.clone());
        }
        cfg.render |= self.render;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Run stems (file names without extension) to render.
    #[arg(required = true)]
    pub runs: Vec<String>,
    /// Directory holding the run artifacts.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagArgs {
    #[command(subcommand)]
    pub check: DiagCommand,
    /// Also write the report as CSV into this directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum DiagCommand {
    /// Smallest admissible drift rate `n_a T sigma^2 / 2`.
    Lambda {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        na: usize,
        #[arg(long = "T")]
        horizon: usize,
    },
    /// Iteration bound for the Lyapunov value to fall below `vfloor`.
    Rstar {
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        v0: f64,
        #[arg(long)]
        vfloor: f64,
        /// Decay exponent `2 lambda - n_a T sigma^2`, given directly.
        #[arg(long, conflicts_with_all = ["lambda", "sigma"])]
        denom: Option<f64>,
        #[arg(long, requires = "sigma")]
        lambda: Option<f64>,
        #[arg(long, requires = "lambda")]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 2)]
        na: usize,
        #[arg(long = "T", default_value_t = 100)]
        horizon: usize,
    },
    /// Monte-Carlo Fisher information of a Gaussian mean against `Sigma^-1`.
    Fisher {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte-Carlo KL divergence of two Gaussians with one covariance against the closed form.
    Kl {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Runs a parsed command on a pool with the requested number of threads.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.into()))?;
    pool.install(|| match cli.command {
        Command::Run(args) => commands::run::cmd_run(&args.resolve(false)?).map(|_| ()),
        Command::Compare(args) => commands::compare::cmd_compare(&args.resolve(true)?).map(|_| ()),
        Command::Render(args) => commands::render::cmd_render(&args).map(|_| ()),
        Command::Diag(args) => commands::diag::cmd_diag(&args).map(|_| ()),
    })
}

/// Parses `args` and executes them, printing errors to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
