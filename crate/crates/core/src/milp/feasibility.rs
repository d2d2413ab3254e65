//! Independent re-check of an assignment against a model.

use serde::{Deserialize, Serialize};

use super::model::{Family, Model, RowId, Sense, VarId};
use crate::num::Scalar;

/// Absolute tolerance for rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Row(RowId),
    Bound(VarId),
    Integrality(VarId),
    /// The assignment does not cover every variable.
    Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub subject: Subject,
    /// Row or variable name.
    pub name: String,
    pub family: Option<Family>,
    /// Amount by which the row, bound or integrality requirement is missed.
    pub excess: f64,
}

/// Re-evaluates every row and bound in `f64`, independently of the solver.
/// Integrality is exact: integer variables must hold whole numbers.
pub fn check_feasibility<T: Scalar>(model: &Model<T>, values: &[T]) -> Vec<Infeasibility> {
    if values.len() != model.vars.len() {
        return vec![Infeasibility {
            subject: Subject::Assignment,
            name: format!("{} values for {} variables", values.len(), model.vars.len()),
            family: None,
            excess: f64::INFINITY,
        }];
    }
    let x: Vec<f64> = values.iter().map(|v| v.as_f64()).collect();
    let mut out = Vec::new();
    for (j, var) in model.vars.iter().enumerate() {
        let (lo, hi) = (var.lower.as_f64(), var.upper.as_f64());
        let excess = (lo - x[j]).max(x[j] - hi);
        if excess > FEASIBILITY_TOL || x[j].is_nan() {
            out.push(Infeasibility {
                subject: Subject::Bound(j),
                name: var.tag.to_string(),
                family: None,
                excess,
            });
        }
        if var.kind.is_integral() && x[j].fract() != 0.0 {
            out.push(Infeasibility {
                subject: Subject::Integrality(j),
                name: var.tag.to_string(),
                family: None,
                excess: (x[j] - x[j].round()).abs(),
            });
        }
    }
    for (i, row) in model.rows.iter().enumerate() {
        let activity: f64 = row.terms.iter().map(|&(j, a)| a.as_f64() * x[j]).sum();
        let rhs = row.rhs.as_f64();
        let excess = match row.sense {
            Sense::Le => activity - rhs,
            Sense::Ge => rhs - activity,
            Sense::Eq => (activity - rhs).abs(),
        };
        if excess > FEASIBILITY_TOL || activity.is_nan() {
            out.push(Infeasibility {
                subject: Subject::Row(i),
                name: row.name(),
                family: Some(row.family),
                excess,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{VarKind, VarTag};

    #[test]
    fn reports_rows_bounds_and_fractions() {
        let mut m = Model::<f64>::new();
        let x = m.add_var(VarTag::Named("x".into()), VarKind::Integer, 0.0, 3.0);
        let y = m.add_var(VarTag::Named("y".into()), VarKind::Continuous, 0.0, 1.0);
        m.add_row(Family::Other, "c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 2.0);
        assert!(check_feasibility(&m, &[1.0, 1.0]).is_empty());
        let bad = check_feasibility(&m, &[1.5, 1.0]);
        let subjects: Vec<_> = bad.iter().map(|v| v.subject).collect();
        assert_eq!(subjects, vec![Subject::Integrality(x), Subject::Row(0)]);
        let bound = check_feasibility(&m, &[0.0, 1.1]);
        assert_eq!(bound[0].subject, Subject::Bound(y));
        assert_eq!(
            check_feasibility(&m, &[0.0])[0].subject,
            Subject::Assignment
        );
    }
}
