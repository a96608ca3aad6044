//! Artifact files written next to each run.
//!
//! For a run stem `S` in the output directory:
//!
//! | file           | content                                             |
//! |----------------|-----------------------------------------------------|
//! | `S.csv`        | one row per iteration ([`CSV_HEADER`])              |
//! | `S_env.toml`   | the problem instance, enough to re-evaluate costs   |
//! | `S_best.csv`   | lowest-cost particle of the run, one entry per row  |
//! | `S_final.csv`  | final population (two-dimensional problems only)    |
//! | `S.svg`        | render, when requested                              |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cbo_core::RunRecord;
use sha2::{Digest, Sha256};

use crate::config::{MethodKind, ProblemInstance};
use crate::CliError;

pub const CSV_HEADER: &str =
    "iteration,best_cost,mean_cost,consensus_cost,population_diameter,sigma_or_alpha,wallclock_ms";

/// File stem of one run.
pub fn run_stem(problem: &ProblemInstance, method: MethodKind, seed: u64, env_seed: Option<u64>) -> String {
    match env_seed {
        Some(e) => format!("{}_{}_e{e}_s{seed}", problem.name(), method.name()),
        None => format!("{}_{}_s{seed}", problem.name(), method.name()),
    }
}

pub struct ArtifactPaths {
    pub log: PathBuf,
    pub env: PathBuf,
    pub best: PathBuf,
    pub final_population: PathBuf,
    pub svg: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self {
            log: dir.join(format!("{stem}.csv")),
            env: dir.join(format!("{stem}_env.toml")),
            best: dir.join(format!("{stem}_best.csv")),
            final_population: dir.join(format!("{stem}_final.csv")),
            svg: dir.join(format!("{stem}.svg")),
        }
    }
}

/// The iteration log. Floats use Rust's shortest round-trip formatting, so
/// equal values always print equal bytes.
pub fn record_csv(record: &RunRecord) -> String {
    let mut out = String::with_capacity(64 * (record.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &record.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3}",
            r.iteration,
            r.best_cost,
            r.mean_cost,
            r.consensus_cost,
            r.population_diameter,
            r.sigma_or_alpha,
            r.wallclock_ms
        )
        .unwrap();
    }
    out
}

pub fn instance_toml(problem: &ProblemInstance) -> String {
    toml::to_string(problem).expect("problem instance serializes")
}

/// Hex SHA-256 of the persisted problem instance.
pub fn instance_hash(problem: &ProblemInstance) -> String {
    hex::encode(Sha256::digest(instance_toml(problem).as_bytes()))
}

pub fn read_instance(path: &Path) -> anyhow::Result<ProblemInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn vector_csv(header: &str, values: &[f64]) -> String {
    let mut out = format!("{header}\n");
    for (k, v) in values.iter().enumerate() {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

pub fn read_vector_csv(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|line| {
            let value = line.split(',').nth(1).context("missing value column")?;
            value.parse::<f64>().with_context(|| format!("bad number {value:?} in {}", path.display()))
        })
        .collect()
}

pub fn read_rows_csv(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|line| {
            line.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().with_context(|| format!("bad number {v:?} in {}", path.display())))
                .collect()
        })
        .collect()
}

/// Writes every artifact of a finished run and returns their paths.
pub fn write_run(dir: &Path, stem: &str, problem: &ProblemInstance, record: &RunRecord) -> Result<ArtifactPaths, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(anyhow::anyhow!("creating {}: {e}", dir.display())))?;
    let paths = ArtifactPaths::new(dir, stem);
    let write = |path: &Path, body: String| {
        fs::write(path, body).map_err(|e| CliError::Runtime(anyhow::anyhow!("writing {}: {e}", path.display())))
    };
    write(&paths.log, record_csv(record))?;
    write(&paths.env, instance_toml(problem))?;
    write(&paths.best, vector_csv("component,value", record.best.as_slice()))?;
    if problem.dim() <= 2 {
        let dim = problem.dim();
        let mut out = String::from("particle");
        for k in 0..dim {
            write!(out, ",u{k}").unwrap();
        }
        out.push('\n');
        for (i, p) in record.final_population.particles().iter().enumerate() {
            write!(out, "{i}").unwrap();
            for v in p.as_slice() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        write(&paths.final_population, out)?;
    }
    Ok(paths)
}

/// The log without its wall-clock column, for byte comparisons.
pub fn strip_wallclock(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(i) => &line[..i],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
