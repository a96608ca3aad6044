use serde::{Deserialize, Serialize};

use super::geometry::{dist2, Rect};
use super::point_mass::{Obstacle, PointMassEnv};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Random obstacle placement on top of a fixed base layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvGenConfig {
    /// Walls, tunnel, start, goal and penalties; its obstacles are replaced.
    pub base: PointMassEnv,
    pub count_min: usize,
    pub count_max: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Obstacle centers are drawn uniformly from this box.
    pub region: Rect,
    /// Minimum gap between an obstacle's edge and the start point.
    pub start_clearance: f64,
    /// Minimum gap between an obstacle's edge and the tunnel rectangle.
    pub tunnel_clearance: f64,
    pub seed: u64,
    /// Placement attempts per obstacle before giving up.
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_attempts() -> usize {
    1000
}

impl EnvGenConfig {
    pub fn canonical(seed: u64) -> Self {
        Self {
            base: PointMassEnv::canonical(),
            count_min: 6,
            count_max: 10,
            radius_min: 0.2,
            radius_max: 0.4,
            region: Rect {
                min: [-4.0, -1.5],
                max: [1.5, 3.5],
            },
            start_clearance: 0.3,
            tunnel_clearance: 0.1,
            seed,
            max_attempts: default_attempts(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.count_min > self.count_max {
            return bad("count_min exceeds count_max");
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max) {
            return bad("radius range must satisfy 0 < radius_min <= radius_max");
        }
        if !self.region.is_valid() {
            return bad("placement region has non-positive extent");
        }
        if self.start_clearance < 0.0 || self.tunnel_clearance < 0.0 {
            return bad("clearances must be nonnegative");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        Ok(())
    }

    /// Whether an obstacle at this spot respects the exclusion zones.
    pub fn admissible(&self, o: &Obstacle) -> bool {
        let start_gap = o.radius + self.start_clearance;
        if dist2(o.center, self.base.start) <= start_gap * start_gap {
            return false;
        }
        // distance from center to the tunnel rectangle (0 when inside)
        let t = &self.base.tunnel;
        let dx = (t.min[0] - o.center[0]).max(0.0).max(o.center[0] - t.max[0]);
        let dy = (t.min[1] - o.center[1]).max(0.0).max(o.center[1] - t.max[1]);
        let tunnel_gap = o.radius + self.tunnel_clearance;
        dx * dx + dy * dy > tunnel_gap * tunnel_gap
    }
}

/// Draws obstacles for `cfg.base`, deterministically in `cfg.seed`.
pub fn generate_environment(cfg: &EnvGenConfig) -> Result<PointMassEnv> {
    cfg.validate()?;
    let stream = RngStream::new(cfg.seed).with_run(0x0b57_ac1e);
    let mut rng = stream.at(0, 0);
    let count = rng.uniform_int(cfg.count_min, cfg.count_max);
    let mut obstacles = Vec::with_capacity(count);
    for k in 0..count {
        let mut rng = stream.at(1, k as u64);
        let placed = (0..cfg.max_attempts).find_map(|_| {
            let o = Obstacle {
                center: [
                    rng.uniform(cfg.region.min[0], cfg.region.max[0]),
                    rng.uniform(cfg.region.min[1], cfg.region.max[1]),
                ],
                radius: rng.uniform(cfg.radius_min, cfg.radius_max),
            };
            cfg.admissible(&o).then_some(o)
        });
        match placed {
            Some(o) => obstacles.push(o),
            None => {
                return Err(Error::Generation(format!(
                    "could not place obstacle {k} outside the exclusion zones after {} attempts",
                    cfg.max_attempts
                )))
            }
        }
    }
    let env = PointMassEnv {
        obstacles,
        seed: Some(cfg.seed),
        ..cfg.base.clone()
    };
    env.validate()?;
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let a = generate_environment(&EnvGenConfig::canonical(5)).unwrap();
        let b = generate_environment(&EnvGenConfig::canonical(5)).unwrap();
        assert_eq!(a, b);
        let c = generate_environment(&EnvGenConfig::canonical(6)).unwrap();
        assert_ne!(a.obstacles, c.obstacles);
    }

    #[test]
    fn fixed_count_range() {
        let mut cfg = EnvGenConfig::canonical(1);
        cfg.count_min = 8;
        cfg.count_max = 8;
        assert_eq!(generate_environment(&cfg).unwrap().obstacles.len(), 8);
    }

    #[test]
    fn obstacles_respect_exclusions_over_many_seeds() {
        for seed in 0..100 {
            let cfg = EnvGenConfig::canonical(seed);
            let env = generate_environment(&cfg).unwrap();
            assert!((cfg.count_min..=cfg.count_max).contains(&env.obstacles.len()));
            for o in &env.obstacles {
                assert!((cfg.radius_min..=cfg.radius_max).contains(&o.radius));
                // brute-force: sample the disk and check no point is in the tunnel
                for k in 0..64 {
                    let a = k as f64 / 64.0 * std::f64::consts::TAU;
                    for s in [0.0, 0.5, 1.0] {
                        let p = [
                            o.center[0] + s * o.radius * a.cos(),
                            o.center[1] + s * o.radius * a.sin(),
                        ];
                        assert!(!env.tunnel.contains_strict(p), "seed {seed}: obstacle enters tunnel");
                    }
                }
                assert!(dist2(o.center, env.start).sqrt() > o.radius + cfg.start_clearance);
            }
        }
    }

    #[test]
    fn infeasible_region_fails_after_retries() {
        let mut cfg = EnvGenConfig::canonical(0);
        cfg.count_min = 1;
        cfg.region = Rect { min: [-0.4, -1.4], max: [0.4, -0.1] };
        cfg.max_attempts = 50;
        assert!(matches!(generate_environment(&cfg), Err(Error::Generation(_))));
    }
}
