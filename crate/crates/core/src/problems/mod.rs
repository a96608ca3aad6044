//! Cost landscapes: the generic stagewise trajectory problem, the penalized
//! Himmelblau objective and the point-mass tunnel environment.

mod envgen;
pub mod geometry;
mod himmelblau;
mod point_mass;

pub use envgen::{generate_environment, EnvGenConfig};
pub use himmelblau::{himmelblau_penalized, HimmelblauProblem, HIMMELBLAU_GLOBAL_MINIMIZER};
pub use point_mass::{
    in_tunnel, obstacle_hits, point_mass_rollout, point_mass_step, CostBreakdown, Obstacle,
    PointMassEnv, Rollout,
};

/// A zero-order objective over flat decision vectors.
///
/// Implementations must be pure: the same input yields the same cost,
/// bit-for-bit, on any thread.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn cost(&self, u: &[f64]) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn cost(&self, u: &[f64]) -> f64 {
        (**self).cost(u)
    }
}

/// A trajectory problem with stagewise cost
/// `sum_t stage_cost(t, x_t, u_t) + terminal_cost(x_T)` under `x_{t+1} = dynamics(x_t, u_t)`.
pub trait TrajectoryProblem: Sync {
    type State: Clone;

    fn horizon(&self) -> usize;

    fn controls_per_step(&self) -> usize;

    fn initial_state(&self) -> Self::State;

    fn dynamics(&self, x: &Self::State, u: &[f64]) -> Self::State;

    fn stage_cost(&self, t: usize, x: &Self::State, u: &[f64]) -> f64;

    fn terminal_cost(&self, x: &Self::State) -> f64;
}

/// Rolls out a stagewise problem and returns the visited states `x_0 .. x_T`
/// together with the total cost.
pub fn stagewise_rollout<P: TrajectoryProblem>(problem: &P, u: &[f64]) -> (Vec<P::State>, f64) {
    let n_a = problem.controls_per_step();
    assert_eq!(
        u.len(),
        problem.horizon() * n_a,
        "control vector length must be horizon * controls_per_step"
    );
    let mut x = problem.initial_state();
    let mut states = Vec::with_capacity(problem.horizon() + 1);
    let mut cost = 0.0;
    for (t, ut) in u.chunks_exact(n_a).enumerate() {
        cost += problem.stage_cost(t, &x, ut);
        let next = problem.dynamics(&x, ut);
        states.push(std::mem::replace(&mut x, next));
    }
    cost += problem.terminal_cost(&x);
    states.push(x);
    (states, cost)
}

/// Adapts a [`TrajectoryProblem`] to the flat [`Objective`] interface.
#[derive(Debug, Clone)]
pub struct Stagewise<P>(pub P);

impl<P: TrajectoryProblem> Objective for Stagewise<P> {
    fn dim(&self) -> usize {
        self.0.horizon() * self.0.controls_per_step()
    }

    fn cost(&self, u: &[f64]) -> f64 {
        stagewise_rollout(&self.0, u).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar integrator `x' = x + u` driven to 1 with quadratic costs.
    struct Integrator {
        horizon: usize,
    }

    impl TrajectoryProblem for Integrator {
        type State = f64;

        fn horizon(&self) -> usize {
            self.horizon
        }

        fn controls_per_step(&self) -> usize {
            1
        }

        fn initial_state(&self) -> f64 {
            0.0
        }

        fn dynamics(&self, x: &f64, u: &[f64]) -> f64 {
            x + u[0]
        }

        fn stage_cost(&self, _t: usize, x: &f64, u: &[f64]) -> f64 {
            (x - 1.0).powi(2) + 0.1 * u[0] * u[0]
        }

        fn terminal_cost(&self, x: &f64) -> f64 {
            10.0 * (x - 1.0).powi(2)
        }
    }

    #[test]
    fn stagewise_sum_matches_hand_rollout() {
        let p = Integrator { horizon: 3 };
        let u = [0.5, 0.25, 0.5];
        let (states, cost) = stagewise_rollout(&p, &u);
        assert_eq!(states, vec![0.0, 0.5, 0.75, 1.25]);
        let expected = (1.0 + 0.1 * 0.25)
            + (0.25 + 0.1 * 0.0625)
            + (0.0625 + 0.1 * 0.25)
            + 10.0 * 0.0625;
        assert!((cost - expected).abs() < 1e-12);
        assert_eq!(Stagewise(p).cost(&u).to_bits(), cost.to_bits());
    }

    #[test]
    fn stagewise_dim() {
        assert_eq!(Stagewise(Integrator { horizon: 7 }).dim(), 7);
    }
}
