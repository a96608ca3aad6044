use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbo_bench::config::RunConfig;
use cbo_bench::output::{read_instance, read_vector_csv, strip_wallclock, CSV_HEADER};
use cbo_core::point_mass_rollout;
use cbo_core::problems::in_tunnel;

fn bench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbo-bench"))
        .args(args)
        .env("CBO_BENCH_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = bench(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn run_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "--problem", "himmelblau", "--method", "cbo", "--pop", "300", "--seed", "7", "--iters", "120"],
        dir.path(),
    );
    let csv = fs::read_to_string(dir.path().join("himmelblau_cbo_s7.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 120);
    for suffix in ["_env.toml", "_best.csv", "_final.csv"] {
        assert!(dir.path().join(format!("himmelblau_cbo_s7{suffix}")).exists(), "{suffix}");
    }
}

#[test]
fn csv_schema_is_stable() {
    assert_eq!(
        CSV_HEADER,
        "iteration,best_cost,mean_cost,consensus_cost,population_diameter,sigma_or_alpha,wallclock_ms"
    );
}

#[test]
fn reruns_and_thread_counts_give_identical_logs() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let base = ["run", "--problem", "himmelblau", "--method", "cma", "--seed", "3", "--iters", "60"];
    let runs = [vec!["--threads", "1"], vec!["--threads", "1"], vec!["--threads", "8"]];
    let logs: Vec<String> = dirs
        .iter()
        .zip(&runs)
        .map(|(d, extra)| {
            let args: Vec<&str> = base.iter().copied().chain(extra.iter().copied()).collect();
            ok(&args, d.path());
            strip_wallclock(&fs::read_to_string(d.path().join("himmelblau_cma_s3.csv")).unwrap())
        })
        .collect();
    assert_eq!(logs[0], logs[1]);
    assert_eq!(logs[0], logs[2]);
    assert!(!logs[0].contains("wallclock"));
}

#[test]
fn compare_shares_the_initial_population() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["compare", "--problem", "tunnel", "--method", "cbo,mppi,cem", "--pop", "40", "--iters", "3", "--seed", "2"],
        dir.path(),
    );
    assert!(stdout.contains("summary ->"));
    let first_best = |stem: &str| -> String {
        let csv = fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
        csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string()
    };
    let cbo = first_best("tunnel_cbo_e0_s2");
    assert_eq!(cbo, first_best("tunnel_mppi_e0_s2"));
    assert_eq!(cbo, first_best("tunnel_cem_e0_s2"));
    let summary = fs::read_to_string(dir.path().join("tunnel_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let hashes: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(6).unwrap()).collect();
    assert!(hashes.iter().all(|h| *h == hashes[0] && h.len() == 64));
}

fn zero_obstacle_config(dir: &Path) -> PathBuf {
    let mut cfg = RunConfig::default();
    cfg.problem = cbo_bench::config::ProblemKind::Tunnel;
    cfg.tunnel.obstacles_min = 0;
    cfg.tunnel.obstacles_max = 0;
    cfg.population = 60;
    cfg.stop.max_iterations = 10;
    let path = dir.join("empty.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path
}

#[test]
fn render_of_an_empty_tunnel_has_only_the_fixed_primitives() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = zero_obstacle_config(dir.path());
    ok(&["run", "--config", cfg.to_str().unwrap(), "--method", "mppi", "--seed", "1"], dir.path());
    let stem = "tunnel_mppi_e0_s1";
    ok(&["render", stem], dir.path());
    let svg = fs::read_to_string(dir.path().join(format!("{stem}.svg"))).unwrap();
    let count = |tag: &str| svg.matches(tag).count();
    assert_eq!(count("<rect class=\"tunnel\""), 1);
    assert_eq!(count("<line class=\"wall\""), 3);
    assert_eq!(count("<circle class=\"goal\""), 1);
    assert_eq!(count("<polyline"), 1);
    assert_eq!(count("obstacle"), 0);
    assert_eq!(count("<rect") + count("<line") + count("<circle") + count("<polyline") + count("<path"), 6);

    ok(&["render", stem], dir.path());
    assert_eq!(svg, fs::read_to_string(dir.path().join(format!("{stem}.svg"))).unwrap());
}

#[test]
fn render_endpoint_agrees_with_tunnel_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = zero_obstacle_config(dir.path());
    ok(&["run", "--config", cfg.to_str().unwrap(), "--method", "cbo", "--seed", "4", "--render"], dir.path());
    let stem = "tunnel_cbo_e0_s4";
    let env = match read_instance(&dir.path().join(format!("{stem}_env.toml"))).unwrap() {
        cbo_bench::config::ProblemInstance::Tunnel(env) => env,
        other => panic!("unexpected instance {other:?}"),
    };
    let best = read_vector_csv(&dir.path().join(format!("{stem}_best.csv"))).unwrap();
    let rollout = point_mass_rollout(&best, &env).unwrap();
    let svg = fs::read_to_string(dir.path().join(format!("{stem}.svg"))).unwrap();
    let attr = |element: &str, name: &str| -> String {
        let tail = svg.split(element).nth(1).unwrap();
        let value = tail.split(&format!(" {name}=\"")).nth(1).unwrap();
        value.split('"').next().unwrap().to_string()
    };
    let num = |element: &str, name: &str| attr(element, name).parse::<f64>().unwrap();
    let (x, y) = (num("<rect class=\"tunnel\"", "x"), num("<rect class=\"tunnel\"", "y"));
    let (w, h) = (num("<rect class=\"tunnel\"", "width"), num("<rect class=\"tunnel\"", "height"));
    let points = attr("<polyline", "points");
    let (px, py) = points.split(' ').last().unwrap().split_once(',').unwrap();
    let (px, py): (f64, f64) = (px.parse().unwrap(), py.parse().unwrap());
    let drawn_inside = px > x && px < x + w && py > y && py < y + h;
    assert_eq!(drawn_inside, !rollout.breakdown.missed_tunnel);
    assert_eq!(in_tunnel(*rollout.positions.last().unwrap(), &env), !rollout.breakdown.missed_tunnel);
}

#[test]
fn exit_codes_separate_config_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bench(&["run", "--pop", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["run", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["run", "--method", "cbo,cma"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["run", "--config", "/nonexistent.toml"], dir.path()).status.code(), Some(1));
    let missing = bench(&["render", "himmelblau_cbo_s99"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("himmelblau_cbo_s99.csv"));
    assert_eq!(bench(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn diag_reports_match_the_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["diag", "lambda", "--sigma", "0.1", "--na", "2", "--T", "100"], dir.path());
    assert!(out.contains("lambda threshold = 1.000000"), "{out}");
    let out = ok(&["diag", "rstar", "--theta", "0", "--v0", "2.718281828", "--vfloor", "1", "--denom", "1"], dir.path());
    assert!(out.contains("rstar r_star = 1.000000"), "{out}");
    let csv_dir = dir.path().join("diag");
    let out = ok(
        &["diag", "fisher", "--dim", "2", "--samples", "200000", "--seed", "1", "--out-dir", csv_dir.to_str().unwrap()],
        dir.path(),
    );
    let residual: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("fisher relative_frobenius_residual = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 0.05, "{residual}");
    assert!(csv_dir.join("diag_fisher.csv").exists());
    let bad = bench(&["diag", "rstar", "--v0", "2", "--vfloor", "1", "--lambda", "0.1", "--sigma", "1"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("threshold"));
}

#[test]
fn output_dir_defaults_to_the_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    ok(&["run", "--iters", "5", "--seed", "11"], &target);
    assert!(target.join("himmelblau_cbo_s11.csv").exists());
}

#[test]
fn committed_configs_load_and_validate() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate(&cfg.methods).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate(&[cfg.method]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
