//! Sparse LP engine for models too large for the dense tableau, backed by
//! the `minilp` revised simplex.
//!
//! Every node is solved from scratch on a problem carrying the node's
//! variable bounds. minilp's in-place `fix_var`/`add_constraint` updates
//! were observed to report feasible nodes as infeasible, so they are not
//! used.

use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::lp::{LpEngine, LpSolution, LpStatus};
use super::model::{Model, Sense};
use crate::num::Scalar;

type SparseRow = (Vec<(usize, f64)>, ComparisonOp, f64);

pub struct SparseSimplex {
    cost: Vec<f64>,
    rows: Vec<SparseRow>,
}

impl SparseSimplex {
    pub fn new(model: &Model<f64>) -> Self {
        let rows = model
            .rows
            .iter()
            .map(|row| {
                let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, a) in &row.terms {
                    *merged.entry(j).or_default() += a;
                }
                let op = match row.sense {
                    Sense::Le => ComparisonOp::Le,
                    Sense::Ge => ComparisonOp::Ge,
                    Sense::Eq => ComparisonOp::Eq,
                };
                (merged.into_iter().collect(), op, row.rhs)
            })
            .collect();
        Self {
            cost: model.cost_vector(),
            rows,
        }
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(terms, op, rhs)| {
                let act: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
                match op {
                    ComparisonOp::Le => act - rhs,
                    ComparisonOp::Ge => rhs - act,
                    ComparisonOp::Eq => (act - rhs).abs(),
                }
            })
            .fold(0.0, f64::max)
    }
}

impl LpEngine<f64> for SparseSimplex {
    fn solve(&mut self, lower: &[f64], upper: &[f64]) -> LpSolution<f64> {
        if let Some(j) = (0..self.cost.len()).find(|&j| lower[j] > upper[j]) {
            return LpSolution::status(
                LpStatus::Infeasible,
                Some(format!("column {j} bounds cross")),
            );
        }
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .cost
            .iter()
            .enumerate()
            .map(|(j, &c)| problem.add_var(c, (lower[j], upper[j])))
            .collect();
        for (terms, op, rhs) in &self.rows {
            problem.add_constraint(
                terms.iter().map(|&(j, a)| (vars[j], a)).collect::<Vec<_>>(),
                *op,
                *rhs,
            );
        }
        match problem.solve() {
            Ok(sol) => {
                let x: Vec<f64> = vars.iter().map(|&v| sol[v]).collect();
                let worst = self.residual(&x);
                if worst > f64::check_tol() {
                    return LpSolution::status(
                        LpStatus::Numerical,
                        Some(format!("row residual {worst}")),
                    );
                }
                LpSolution {
                    status: LpStatus::Optimal,
                    objective: sol.objective(),
                    x,
                    iterations: 0,
                    detail: None,
                }
            }
            Err(minilp::Error::Infeasible) => LpSolution::status(LpStatus::Infeasible, None),
            Err(minilp::Error::Unbounded) => LpSolution::status(LpStatus::Unbounded, None),
        }
    }
}
