use std::fs;
use std::path::PathBuf;

use cbo_core::{himmelblau_penalized, point_mass_rollout, PointMassEnv, HIMMELBLAU_GLOBAL_MINIMIZER};

use crate::config::{default_output_dir, ProblemInstance};
use crate::output::{read_instance, read_rows_csv, read_vector_csv, ArtifactPaths};
use crate::svg::{marching_squares, Svg, Viewport};
use crate::{CliError, RenderArgs};

const WIDTH: f64 = 640.0;
const CONTOUR_LEVELS: [f64; 10] = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0];

/// Walls, tunnel, obstacles, goal and the rolled-out best trajectory.
pub fn tunnel_svg(env: &PointMassEnv, best: &[f64]) -> Result<String, CliError> {
    let rollout = point_mass_rollout(best, env)?;
    let mut min = [-4.5f64, -2.0f64];
    let mut max = [2.0f64, 4.0f64];
    for p in rollout.positions.iter().chain([&env.start, &env.goal]) {
        for k in 0..2 {
            min[k] = min[k].min(p[k] - 0.25);
            max[k] = max[k].max(p[k] + 0.25);
        }
    }
    let mut svg = Svg::new(Viewport::fit(min, max, WIDTH));
    svg.rect(env.tunnel.min, env.tunnel.max, "tunnel", "green");
    for w in &env.walls {
        svg.line(w.a, w.b, "wall");
    }
    for o in &env.obstacles {
        svg.disk(o.center, o.radius, "obstacle", "darkgreen");
    }
    svg.circle(env.goal, 5.0, "goal", "red");
    svg.polyline(&rollout.positions, "trajectory", "blue");
    Ok(svg.finish())
}

/// Contours of the penalized Himmelblau function with the final population.
pub fn himmelblau_svg(alpha: f64, population: &[Vec<f64>]) -> String {
    let (min, max) = ([-6.0, -6.0], [6.0, 6.0]);
    let mut svg = Svg::new(Viewport::fit(min, max, WIDTH));
    let f = |x: f64, y: f64| himmelblau_penalized(x, y, alpha);
    for level in CONTOUR_LEVELS {
        svg.segments(&marching_squares(&f, min, max, 120, level), "contour", "gray");
    }
    for p in population {
        svg.circle([p[0], p[1]], 2.0, "particle", "blue");
    }
    svg.circle(HIMMELBLAU_GLOBAL_MINIMIZER, 4.0, "optimum", "red");
    svg.finish()
}

/// Renders one run's artifacts into `paths.svg`.
pub fn render_to(paths: &ArtifactPaths, instance: &ProblemInstance) -> Result<PathBuf, CliError> {
    let body = match instance {
        ProblemInstance::Tunnel(env) => {
            let best = read_vector_csv(&paths.best).map_err(CliError::Runtime)?;
            tunnel_svg(env, &best)?
        }
        ProblemInstance::Himmelblau { alpha } => {
            let pop = read_rows_csv(&paths.final_population).map_err(CliError::Runtime)?;
            himmelblau_svg(*alpha, &pop)
        }
    };
    fs::write(&paths.svg, body)?;
    Ok(paths.svg.clone())
}

pub fn cmd_render(args: &RenderArgs) -> Result<Vec<PathBuf>, CliError> {
    let dir = args.out_dir.clone().unwrap_or_else(default_output_dir);
    let mut jobs = Vec::new();
    let mut missing = Vec::new();
    for stem in &args.runs {
        let paths = ArtifactPaths::new(&dir, stem);
        for p in [&paths.log, &paths.env] {
            if !p.exists() {
                missing.push(p.clone());
            }
        }
        if paths.env.exists() {
            let instance = read_instance(&paths.env).map_err(CliError::Runtime)?;
            let needed = match instance {
                ProblemInstance::Tunnel(_) => &paths.best,
                ProblemInstance::Himmelblau { .. } => &paths.final_population,
            };
            if !needed.exists() {
                missing.push(needed.clone());
            }
            jobs.push((paths, instance));
        }
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::Runtime(anyhow::anyhow!("missing run artifacts:\n  {}", list.join("\n  "))));
    }
    let mut written = Vec::new();
    for (paths, instance) in jobs {
        let out = render_to(&paths, &instance)?;
        println!("{}", out.display());
        written.push(out);
    }
    Ok(written)
}
