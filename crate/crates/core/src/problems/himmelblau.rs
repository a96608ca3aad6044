use serde::{Deserialize, Serialize};

use super::Objective;

/// The unique global minimizer of the penalized objective.
pub const HIMMELBLAU_GLOBAL_MINIMIZER: [f64; 2] = [3.0, 2.0];

/// Himmelblau's function plus a quadratic pull toward `(3, 2)`:
/// `(x² + y − 11)² + (x + y² − 7)² + alpha·((x − 3)² + (y − 2)²)`.
///
/// The pull breaks the four-way tie between Himmelblau's minimizers, leaving
/// `(3, 2)` as the only global one.
pub fn himmelblau_penalized(x: f64, y: f64, alpha: f64) -> f64 {
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    a * a + b * b + alpha * ((x - 3.0).powi(2) + (y - 2.0).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HimmelblauProblem {
    pub alpha: f64,
}

impl HimmelblauProblem {
    pub fn new(alpha: f64) -> crate::Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return crate::error::invalid(format!("penalty alpha must be positive, got {alpha}"));
        }
        Ok(Self { alpha })
    }
}

impl Objective for HimmelblauProblem {
    fn dim(&self) -> usize {
        2
    }

    fn cost(&self, u: &[f64]) -> f64 {
        himmelblau_penalized(u[0], u[1], self.alpha)
    }
}
