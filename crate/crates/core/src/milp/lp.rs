//! Linear-programming interface used by branch-and-bound.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The engine gave up (iteration limit or residual check failed).
    Numerical,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Structural variable values; empty unless optimal.
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// Offending row or column for numerical failures.
    pub detail: Option<String>,
}

impl<T: crate::Scalar> LpSolution<T> {
    pub fn status(status: LpStatus, detail: Option<String>) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: T::nan(),
            iterations: 0,
            detail,
        }
    }
}

/// Solves the relaxation of a fixed model under varying variable bounds.
pub trait LpEngine<T> {
    fn solve(&mut self, lower: &[T], upper: &[T]) -> LpSolution<T>;

    /// Drops any warm-start state.
    fn reset(&mut self) {}
}
