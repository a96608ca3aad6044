use cbo_core::problems::geometry::Point;
use cbo_core::{
    generate_environment, himmelblau_penalized, point_mass_rollout, EnvGenConfig, Objective, PointMassEnv, RngStream,
};

/// Parametric closed-segment intersection, written independently of the
/// library predicate.
fn crosses(p: Point, q: Point, a: Point, b: Point) -> bool {
    let r = [q[0] - p[0], q[1] - p[1]];
    let s = [b[0] - a[0], b[1] - a[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    let ap = [a[0] - p[0], a[1] - p[1]];
    if denom == 0.0 {
        // parallel: only collinear overlap counts
        if ap[0] * r[1] - ap[1] * r[0] != 0.0 {
            return false;
        }
        let rr = r[0] * r[0] + r[1] * r[1];
        if rr == 0.0 {
            let ss = s[0] * s[0] + s[1] * s[1];
            let t = -(ap[0] * s[0] + ap[1] * s[1]) / ss;
            return (0.0..=1.0).contains(&t);
        }
        let t0 = (ap[0] * r[0] + ap[1] * r[1]) / rr;
        let t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / rr;
        return t0.min(t1) <= 1.0 && t0.max(t1) >= 0.0;
    }
    let t = (ap[0] * s[1] - ap[1] * s[0]) / denom;
    let u = (ap[0] * r[1] - ap[1] * r[0]) / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

fn random_controls(dim: usize, scale: f64, rng: &RngStream, k: u64) -> Vec<f64> {
    rng.at(0, k).standard_normals(dim).into_iter().map(|x| scale * x).collect()
}

#[test]
fn no_rollout_step_crosses_a_wall() {
    let env = generate_environment(&EnvGenConfig::canonical(3)).unwrap();
    let rng = RngStream::new(11);
    for k in 0..500 {
        let u = random_controls(env.dim(), 3.0, &rng, k);
        let r = point_mass_rollout(&u, &env).unwrap();
        for pair in r.positions.windows(2) {
            if pair[0] == pair[1] {
                continue;
            }
            for w in &env.walls {
                assert!(!crosses(pair[0], pair[1], w.a, w.b), "controls {k} cross wall {w:?}");
            }
        }
    }
}

#[test]
fn cost_reassembles_from_independent_terms() {
    let env = generate_environment(&EnvGenConfig::canonical(5)).unwrap();
    let rng = RngStream::new(12);
    for k in 0..200 {
        let u = random_controls(env.dim(), 1.5, &rng, k);
        let r = point_mass_rollout(&u, &env).unwrap();
        let distance: f64 = r
            .positions
            .iter()
            .map(|q| (q[0] - env.goal[0]).powi(2) + (q[1] - env.goal[1]).powi(2))
            .sum();
        let velocity: f64 = u.iter().map(|x| x * x).sum();
        let last = r.positions[env.horizon - 1];
        let t = env.tunnel;
        let inside = last[0] > t.min[0] && last[0] < t.max[0] && last[1] > t.min[1] && last[1] < t.max[1];
        let hits = env
            .obstacles
            .iter()
            .filter(|o| {
                r.positions
                    .iter()
                    .any(|q| (q[0] - o.center[0]).powi(2) + (q[1] - o.center[1]).powi(2) < o.radius * o.radius)
            })
            .count();
        let expected = distance
            + env.gamma_v * velocity
            + if inside { 0.0 } else { env.penalty_tunnel }
            + env.penalty_obstacle * hits as f64;
        assert!((r.cost - expected).abs() <= 1e-9 * expected.max(1.0), "{} vs {expected}", r.cost);
    }
}

#[test]
fn rollouts_are_bit_deterministic() {
    let env = generate_environment(&EnvGenConfig::canonical(1)).unwrap();
    let rng = RngStream::new(13);
    for k in 0..1000 {
        let u = random_controls(env.dim(), 1.0, &rng, k);
        assert_eq!(env.cost(&u).to_bits(), env.cost(&u).to_bits());
    }
}

#[test]
fn generated_obstacles_avoid_start_and_tunnel() {
    for seed in 0..100 {
        let cfg = EnvGenConfig::canonical(seed);
        let env = generate_environment(&cfg).unwrap();
        assert!((cfg.count_min..=cfg.count_max).contains(&env.obstacles.len()));
        for o in &env.obstacles {
            assert!((cfg.radius_min..=cfg.radius_max).contains(&o.radius));
            let ds = ((o.center[0] - env.start[0]).powi(2) + (o.center[1] - env.start[1]).powi(2)).sqrt();
            assert!(ds > o.radius, "seed {seed}: obstacle covers the start");
            // nearest point of the tunnel rectangle
            let nx = o.center[0].clamp(env.tunnel.min[0], env.tunnel.max[0]);
            let ny = o.center[1].clamp(env.tunnel.min[1], env.tunnel.max[1]);
            let dt = ((o.center[0] - nx).powi(2) + (o.center[1] - ny).powi(2)).sqrt();
            assert!(dt > o.radius, "seed {seed}: obstacle overlaps the tunnel");
        }
    }
}

#[test]
fn same_seed_same_environment() {
    let a = generate_environment(&EnvGenConfig::canonical(9)).unwrap();
    let b = generate_environment(&EnvGenConfig::canonical(9)).unwrap();
    assert_eq!(a, b);
}

/// A hand-built path over the top of the left wall and down into the tunnel beats
/// parking next to the wall outside it.
#[test]
fn going_around_the_wall_beats_the_tunnel_penalty() {
    let env = PointMassEnv::canonical();
    let waypoints: [Point; 4] = [env.start, [-0.8, 2.3], [0.0, 2.3], env.goal];
    let mut u = Vec::with_capacity(env.dim());
    let legs = [14usize, 8, 12];
    for (leg, steps) in legs.iter().enumerate() {
        let (a, b) = (waypoints[leg], waypoints[leg + 1]);
        for _ in 0..*steps {
            u.push((b[0] - a[0]) / (*steps as f64 * env.dt));
            u.push((b[1] - a[1]) / (*steps as f64 * env.dt));
        }
    }
    u.resize(env.dim(), 0.0);
    let through = point_mass_rollout(&u, &env).unwrap();
    assert!(!through.breakdown.missed_tunnel);
    assert_eq!(through.breakdown.obstacles_hit, 0);

    // cheapest conceivable miss: already parked at the wall for every step
    let parked = [env.tunnel.min[0] - 1e-6, env.goal[1]];
    let d2 = (parked[0] - env.goal[0]).powi(2) + (parked[1] - env.goal[1]).powi(2);
    let miss_floor = env.horizon as f64 * d2 + env.penalty_tunnel;
    assert!(through.cost < miss_floor, "{} vs {miss_floor}", through.cost);
}

#[test]
fn himmelblau_is_positive_away_from_the_minimizer() {
    let rng = RngStream::new(14);
    let mut r = rng.at(0, 0);
    for _ in 0..1_000_000 {
        let (x, y) = (r.uniform(-6.0, 6.0), r.uniform(-6.0, 6.0));
        if (x - 3.0).hypot(y - 2.0) < 1e-6 {
            continue;
        }
        assert!(himmelblau_penalized(x, y, 0.01) > 0.0, "({x}, {y})");
    }
}
