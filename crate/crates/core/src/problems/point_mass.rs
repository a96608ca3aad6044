//! First-order point mass navigating around a wall into a tunnel.
//!
//! The agent state is its planar position; the controls are the velocity
//! components `(v_x, v_y)` for each of the `T` steps. A step that would touch
//! a wall is rejected and the agent stays where it was. Obstacles do not
//! affect motion, they only add a penalty per disk entered.

use serde::{Deserialize, Serialize};

use super::geometry::{dist2, Point, Rect, Segment};
use super::Objective;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
}

impl Obstacle {
    /// Strict interior; a point on the circle is not inside.
    pub fn contains(&self, p: Point) -> bool {
        dist2(p, self.center) < self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassEnv {
    pub start: Point,
    pub goal: Point,
    /// Integration step in seconds.
    pub dt: f64,
    pub horizon: usize,
    /// Weight of the squared-velocity running cost.
    pub gamma_v: f64,
    pub walls: Vec<Segment>,
    pub tunnel: Rect,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    /// Charged once if the last position is outside the tunnel.
    pub penalty_tunnel: f64,
    /// Charged once per distinct obstacle entered.
    pub penalty_obstacle: f64,
    /// Seed the obstacles were generated from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PointMassEnv {
    /// The default layout with no obstacles.
    ///
    /// The tunnel is a 1 m × 1.5 m pocket open at the top. Its left wall
    /// continues 2 m above the opening, so the straight line from the start
    /// to the goal runs into it; its right wall stops at the opening.
    pub fn canonical() -> Self {
        let (x0, x1, y0, y1) = (-0.5, 0.5, -1.5, 0.0);
        Self {
            start: [-3.0, 0.0],
            goal: [0.0, -1.0],
            dt: 0.2,
            horizon: 100,
            gamma_v: 10.0,
            walls: vec![
                Segment::new([x0, y0], [x0, 2.0]),
                Segment::new([x1, y0], [x1, y1]),
                Segment::new([x0, y0], [x1, y0]),
            ],
            tunnel: Rect {
                min: [x0, y0],
                max: [x1, y1],
            },
            obstacles: Vec::new(),
            penalty_tunnel: 1000.0,
            penalty_obstacle: 1000.0,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        if !(self.gamma_v >= 0.0) {
            return invalid(format!("gamma_v must be nonnegative, got {}", self.gamma_v));
        }
        if !self.tunnel.is_valid() {
            return invalid("tunnel rectangle has non-positive extent");
        }
        if !self.tunnel.contains_strict(self.goal) {
            return invalid("goal must lie strictly inside the tunnel");
        }
        if self.tunnel.contains_strict(self.start) {
            return invalid("start must lie outside the tunnel");
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) {
                return invalid(format!("obstacle {i} has non-positive radius"));
            }
            if o.contains(self.start) {
                return invalid(format!("obstacle {i} contains the start point"));
            }
        }
        if self.walls.iter().any(|w| w.intersects(&Segment::new(self.start, self.start))) {
            return invalid("start lies on a wall");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.horizon
    }

    fn blocked(&self, from: Point, to: Point) -> bool {
        let step = Segment::new(from, to);
        self.walls.iter().any(|w| w.intersects(&step))
    }
}

/// One Euler step `q + v·dt`, or `q` itself if the step would touch a wall.
pub fn point_mass_step(q: Point, v: Point, env: &PointMassEnv) -> Point {
    let next = [q[0] + v[0] * env.dt, q[1] + v[1] * env.dt];
    if env.blocked(q, next) {
        q
    } else {
        next
    }
}

pub fn in_tunnel(q: Point, env: &PointMassEnv) -> bool {
    env.tunnel.contains_strict(q)
}

/// Number of distinct obstacles containing at least one of the positions.
pub fn obstacle_hits(positions: &[Point], env: &PointMassEnv) -> usize {
    env.obstacles
        .iter()
        .filter(|o| positions.iter().any(|p| o.contains(*p)))
        .count()
}

/// The separately accumulated terms of the rollout cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// `sum_t |q(t) - goal|²`
    pub distance: f64,
    /// `sum_t |v(t)|²`, unweighted
    pub velocity: f64,
    pub missed_tunnel: bool,
    pub obstacles_hit: usize,
}

impl CostBreakdown {
    pub fn total(&self, env: &PointMassEnv) -> f64 {
        let tunnel = if self.missed_tunnel { env.penalty_tunnel } else { 0.0 };
        self.distance
            + env.gamma_v * self.velocity
            + tunnel
            + env.penalty_obstacle * self.obstacles_hit as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// `q(0) .. q(T-1)`, starting at the start point.
    pub positions: Vec<Point>,
    pub cost: f64,
    pub breakdown: CostBreakdown,
}

/// Simulates the controls and scores the path.
///
/// `cost = sum_{t<T} (|q(t) - goal|² + gamma_v |v(t)|²)
///        + penalty_tunnel·[q(T-1) outside tunnel] + penalty_obstacle·n_hit`
pub fn point_mass_rollout(u: &[f64], env: &PointMassEnv) -> Result<Rollout> {
    if u.len() != env.dim() {
        return invalid(format!(
            "control vector has length {}, expected 2 x horizon = {}",
            u.len(),
            env.dim()
        ));
    }
    let mut positions = Vec::with_capacity(env.horizon);
    let cost = simulate(u, env, |q| positions.push(q));
    let breakdown = CostBreakdown {
        distance: positions.iter().map(|q| dist2(*q, env.goal)).sum(),
        velocity: u.iter().map(|x| x * x).sum(),
        missed_tunnel: !in_tunnel(*positions.last().expect("horizon >= 1"), env),
        obstacles_hit: obstacle_hits(&positions, env),
    };
    Ok(Rollout {
        positions,
        cost,
        breakdown,
    })
}

/// Shared rollout loop; `visit` sees each costed position in order.
fn simulate(u: &[f64], env: &PointMassEnv, mut visit: impl FnMut(Point)) -> f64 {
    let mut hit = vec![false; env.obstacles.len()];
    let mut q = env.start;
    let mut cost = 0.0;
    let mut last = q;
    for (t, v) in u.chunks_exact(2).enumerate() {
        if t > 0 {
            q = point_mass_step(q, [last[0], last[1]], env);
        }
        visit(q);
        for (flag, o) in hit.iter_mut().zip(&env.obstacles) {
            if !*flag && o.contains(q) {
                *flag = true;
            }
        }
        cost += dist2(q, env.goal) + env.gamma_v * (v[0] * v[0] + v[1] * v[1]);
        last = [v[0], v[1]];
    }
    if !in_tunnel(q, env) {
        cost += env.penalty_tunnel;
    }
    cost + env.penalty_obstacle * hit.iter().filter(|h| **h).count() as f64
}

impl Objective for PointMassEnv {
    fn dim(&self) -> usize {
        PointMassEnv::dim(self)
    }

    fn cost(&self, u: &[f64]) -> f64 {
        simulate(u, self, |_| {})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::geometry::segments_intersect;

    fn open_env() -> PointMassEnv {
        let mut env = PointMassEnv::canonical();
        env.dt = 0.1;
        env
    }

    #[test]
    fn canonical_env_is_valid() {
        PointMassEnv::canonical().validate().unwrap();
    }

    #[test]
    fn free_step_and_zero_velocity() {
        let env = open_env();
        let q = point_mass_step([-3.0, 0.0], [1.0, 0.0], &env);
        assert!((q[0] + 2.9).abs() < 1e-15 && q[1] == 0.0);
        assert_eq!(point_mass_step([-3.0, 0.0], [0.0, 0.0], &env), [-3.0, 0.0]);
    }

    #[test]
    fn wall_crossing_step_is_rejected() {
        let env = open_env();
        let q = [-0.6, -1.0];
        let v = [5.0, 0.0];
        let target = [q[0] + v[0] * env.dt, q[1]];
        // independent check that the candidate move really crosses the left wall
        let w = env.walls[0];
        assert!(segments_intersect(q, target, w.a, w.b));
        assert_eq!(point_mass_step(q, v, &env), q);
    }

    #[test]
    fn stationary_rollout_cost() {
        let env = PointMassEnv::canonical();
        let r = point_mass_rollout(&vec![0.0; env.dim()], &env).unwrap();
        let expected = env.horizon as f64 * dist2(env.start, env.goal) + 1000.0;
        assert!((r.cost - expected).abs() < 1e-9);
        assert_eq!(r.positions.len(), env.horizon);
        assert!(r.positions.iter().all(|q| *q == env.start));
    }

    #[test]
    fn constant_velocity_adds_gamma_t_v2() {
        let env = PointMassEnv::canonical();
        let v = [0.3, -0.2];
        let u: Vec<f64> = (0..env.horizon).flat_map(|_| v).collect();
        let r = point_mass_rollout(&u, &env).unwrap();
        let path_only = r.breakdown.distance
            + if r.breakdown.missed_tunnel { 1000.0 } else { 0.0 }
            + 1000.0 * r.breakdown.obstacles_hit as f64;
        let velocity = 10.0 * env.horizon as f64 * (v[0] * v[0] + v[1] * v[1]);
        assert!((r.cost - path_only - velocity).abs() < 1e-9);
    }

    #[test]
    fn obstacles_count_once_each() {
        let mut env = PointMassEnv::canonical();
        env.horizon = 40;
        env.obstacles = vec![
            Obstacle { center: [-2.0, 0.0], radius: 0.3 },
            Obstacle { center: [-1.2, 0.0], radius: 0.3 },
            Obstacle { center: [-2.0, 3.0], radius: 0.3 },
        ];
        // move right at 0.1 m per step, dwelling inside the first two disks
        let u: Vec<f64> = (0..env.horizon).flat_map(|_| [0.5, 0.0]).collect();
        let r = point_mass_rollout(&u, &env).unwrap();
        assert_eq!(r.breakdown.obstacles_hit, 2);
        assert_eq!(obstacle_hits(&r.positions, &env), 2);
        let expected = r.breakdown.distance + 10.0 * r.breakdown.velocity + 1000.0 + 2000.0;
        assert!((r.cost - expected).abs() < 1e-9);
    }

    #[test]
    fn predicates_boundaries() {
        let env = PointMassEnv::canonical();
        assert!(in_tunnel(env.tunnel.center(), &env));
        assert!(!in_tunnel([env.tunnel.max[0], -1.0], &env));
        assert!(!in_tunnel([0.0, env.tunnel.max[1]], &env));
        let mut env = env;
        env.obstacles = vec![Obstacle { center: [1.0, 1.0], radius: 0.5 }];
        assert_eq!(obstacle_hits(&[[1.0, 1.0]], &env), 1);
        assert_eq!(obstacle_hits(&[[1.5, 1.0]], &env), 0);
    }

    #[test]
    fn rollout_rejects_wrong_length() {
        let env = PointMassEnv::canonical();
        assert!(point_mass_rollout(&[0.0; 3], &env).is_err());
    }

    #[test]
    fn objective_matches_rollout_bitwise() {
        let env = PointMassEnv::canonical();
        let u: Vec<f64> = (0..env.dim()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let r = point_mass_rollout(&u, &env).unwrap();
        assert_eq!(env.cost(&u).to_bits(), r.cost.to_bits());
    }

    #[test]
    fn validation_catches_bad_layouts() {
        let mut env = PointMassEnv::canonical();
        env.goal = [3.0, 3.0];
        assert!(env.validate().is_err());
        let mut env = PointMassEnv::canonical();
        env.start = env.tunnel.center();
        assert!(env.validate().is_err());
        let mut env = PointMassEnv::canonical();
        env.obstacles.push(Obstacle { center: env.start, radius: 0.1 });
        assert!(env.validate().is_err());
    }
}
