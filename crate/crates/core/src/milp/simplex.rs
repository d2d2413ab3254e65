//! Dense bounded-variable simplex.
//!
//! Every row `i` gets a logical variable `s_i` equal to its activity, bounded
//! by the row sense, so the tableau always describes `A x - s = 0`. Rows that
//! the starting point violates get an artificial column for phase one.
//!
//! After a solve the tableau is kept. When only variable bounds change (the
//! branch-and-bound case) the previous basis stays dual feasible and the
//! dual simplex restores primal feasibility in a few pivots.

use super::lp::{LpEngine, LpSolution, LpStatus};
use super::model::{Model, Sense};
use crate::num::Scalar;

/// Largest tableau entry a warm start may leave behind.
const GROWTH_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum At {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

#[derive(Debug, Clone)]
struct Tableau<T> {
    cols: usize,
    /// Row-major `rows x cols`.
    t: Vec<T>,
    /// Reduced costs of the phase-two objective.
    d: Vec<T>,
    cost: Vec<T>,
    basis: Vec<usize>,
    at: Vec<At>,
    x: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    iterations: usize,
}

enum Outcome {
    Done,
    Infeasible,
    Unbounded,
    Stalled,
}

pub struct DenseSimplex<T> {
    n: usize,
    rows: Vec<Vec<(usize, T)>>,
    row_lo: Vec<T>,
    row_hi: Vec<T>,
    cost: Vec<T>,
    state: Option<Tableau<T>>,
    pub max_iterations: usize,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    pub warm_start: bool,
}

impl<T: Scalar> DenseSimplex<T> {
    pub fn new(model: &Model<T>) -> Self {
        let inf = T::infinity();
        let mut row_lo = Vec::with_capacity(model.rows.len());
        let mut row_hi = Vec::with_capacity(model.rows.len());
        for r in &model.rows {
            let (lo, hi) = match r.sense {
                Sense::Le => (-inf, r.rhs),
                Sense::Ge => (r.rhs, inf),
                Sense::Eq => (r.rhs, r.rhs),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }
        Self {
            n: model.vars.len(),
            rows: model.rows.iter().map(|r| r.terms.clone()).collect(),
            row_lo,
            row_hi,
            cost: model.cost_vector(),
            state: None,
            max_iterations: 50_000 + 20 * (model.vars.len() + model.rows.len()),
            bland_after: 40,
            warm_start: true,
        }
    }

    /// Dense tableau entries a model would need.
    pub fn footprint(model: &Model<T>) -> usize {
        model.rows.len() * (model.vars.len() + 2 * model.rows.len())
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn cold(&mut self, lower: &[T], upper: &[T]) -> (LpStatus, Option<Tableau<T>>, Option<String>) {
        let (n, m) = (self.n, self.m());
        let zero = T::zero();
        let ftol = T::feasibility_tol();

        let mut x = vec![zero; n];
        let mut at = vec![At::Lower; n];
        for j in 0..n {
            (x[j], at[j]) = nonbasic_start(lower[j], upper[j]);
        }
        let activity: Vec<T> = self
            .rows
            .iter()
            .map(|r| r.iter().fold(zero, |acc, &(j, a)| acc + a * x[j]))
            .collect();
        let violated: Vec<usize> = (0..m)
            .filter(|&i| activity[i] < self.row_lo[i] - ftol || activity[i] > self.row_hi[i] + ftol)
            .collect();
        let cols = n + m + violated.len();
        let mut t = vec![zero; m * cols];
        let mut basis = vec![0; m];
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        lo.extend_from_slice(&self.row_lo);
        hi.extend_from_slice(&self.row_hi);
        lo.extend(violated.iter().map(|_| zero));
        hi.extend(violated.iter().map(|_| T::infinity()));
        x.resize(cols, zero);
        at.resize(cols, At::Basic);

        let mut art = n + m;
        for i in 0..m {
            let row = &mut t[i * cols..(i + 1) * cols];
            let s = n + i;
            if violated.binary_search(&i).is_ok() {
                let target = if activity[i] < self.row_lo[i] {
                    self.row_lo[i]
                } else {
                    self.row_hi[i]
                };
                let sigma = if target > activity[i] {
                    T::one()
                } else {
                    -T::one()
                };
                // a x - s + sigma * art = 0, scaled so the artificial has +1.
                for &(j, a) in &self.rows[i] {
                    row[j] = row[j] + a / sigma;
                }
                row[s] = -T::one() / sigma;
                row[art] = T::one();
                x[s] = target;
                at[s] = if target == self.row_lo[i] {
                    At::Lower
                } else {
                    At::Upper
                };
                x[art] = (target - activity[i]).abs();
                at[art] = At::Basic;
                basis[i] = art;
                art += 1;
            } else {
                for &(j, a) in &self.rows[i] {
                    row[j] = row[j] - a;
                }
                row[s] = T::one();
                x[s] = activity[i];
                at[s] = At::Basic;
                basis[i] = s;
            }
        }

        let mut cost = self.cost.clone();
        cost.resize(cols, zero);
        let mut tab = Tableau {
            cols,
            t,
            d: vec![zero; cols],
            cost,
            basis,
            at,
            x,
            lo,
            hi,
            iterations: 0,
        };

        if !violated.is_empty() {
            let mut phase1 = vec![zero; cols];
            for c in phase1.iter_mut().skip(n + m) {
                *c = T::one();
            }
            tab.reprice(&phase1);
            match tab.primal(self.max_iterations, self.bland_after, Some(&phase1)) {
                Outcome::Done => {}
                Outcome::Stalled => {
                    return (
                        LpStatus::Numerical,
                        None,
                        Some("phase one iteration limit".into()),
                    )
                }
                Outcome::Infeasible | Outcome::Unbounded => {
                    return (
                        LpStatus::Numerical,
                        None,
                        Some("phase one unbounded".into()),
                    )
                }
            }
            let residual = (n + m..cols).fold(zero, |acc, j| acc + tab.x[j]);
            if residual > T::check_tol() {
                return (LpStatus::Infeasible, None, None);
            }
            for j in n + m..cols {
                tab.hi[j] = zero;
                if tab.at[j] != At::Basic {
                    tab.x[j] = zero;
                    tab.at[j] = At::Lower;
                }
            }
            tab.drive_out_artificials(n + m);
        }
        let cost = tab.cost.clone();
        tab.reprice(&cost);
        match tab.primal(self.max_iterations, self.bland_after, None) {
            Outcome::Done => (LpStatus::Optimal, Some(tab), None),
            Outcome::Unbounded => (LpStatus::Unbounded, None, None),
            Outcome::Infeasible => (LpStatus::Infeasible, None, None),
            Outcome::Stalled => (LpStatus::Numerical, None, Some("iteration limit".into())),
        }
    }

    fn warm(&mut self, lower: &[T], upper: &[T]) -> Option<(LpStatus, Option<Tableau<T>>)> {
        let mut tab = self.state.take()?;
        let otol = T::optimality_tol();
        for j in 0..self.n {
            tab.lo[j] = lower[j];
            tab.hi[j] = upper[j];
            if tab.at[j] == At::Basic {
                continue;
            }
            let (lo, hi, d) = (lower[j], upper[j], tab.d[j]);
            let place = if lo == hi || (lo.is_finite() && (d >= -otol || !hi.is_finite())) {
                At::Lower
            } else if hi.is_finite() {
                At::Upper
            } else {
                At::Zero
            };
            let dual_ok = lo == hi
                || match place {
                    At::Lower => d >= -otol,
                    At::Upper => d <= otol,
                    _ => d.abs() <= otol,
                };
            if !dual_ok {
                return None;
            }
            tab.at[j] = place;
            tab.x[j] = match place {
                At::Lower => lo,
                At::Upper => hi,
                _ => T::zero(),
            };
        }
        tab.recompute_basics();
        let outcome = tab.dual(self.max_iterations);
        // Long pivot chains without refactorization lose accuracy; start
        // over from the constraint matrix once entries blow up.
        if tab.growth() > T::of(GROWTH_LIMIT) {
            return None;
        }
        match outcome {
            Outcome::Done => {}
            Outcome::Infeasible => return Some((LpStatus::Infeasible, Some(tab))),
            _ => return None,
        }
        match tab.primal(self.max_iterations, self.bland_after, None) {
            Outcome::Done if tab.growth() <= T::of(GROWTH_LIMIT) => {
                Some((LpStatus::Optimal, Some(tab)))
            }
            _ => None,
        }
    }

    /// Largest violation of an original row or structural bound.
    fn residual(&self, x: &[T]) -> (T, Option<String>) {
        let mut worst = T::zero();
        let mut at = None;
        for (i, r) in self.rows.iter().enumerate() {
            let act = r.iter().fold(T::zero(), |acc, &(j, a)| acc + a * x[j]);
            let v = (self.row_lo[i] - act).max(act - self.row_hi[i]);
            if v > worst {
                worst = v;
                at = Some(format!("row {i}"));
            }
        }
        (worst, at)
    }

    fn finish(
        &mut self,
        status: LpStatus,
        tab: Option<Tableau<T>>,
        detail: Option<String>,
    ) -> LpSolution<T> {
        let iterations = tab.as_ref().map_or(0, |t| t.iterations);
        match (status, tab) {
            (LpStatus::Optimal, Some(tab)) => {
                let x = tab.x[..self.n].to_vec();
                let objective = x
                    .iter()
                    .zip(&self.cost)
                    .fold(T::zero(), |acc, (&v, &c)| acc + v * c);
                self.state = self.warm_start.then_some(tab);
                LpSolution {
                    status,
                    x,
                    objective,
                    iterations,
                    detail,
                }
            }
            (status, tab) => {
                if status == LpStatus::Infeasible {
                    self.state = tab.filter(|_| self.warm_start);
                } else {
                    self.state = None;
                }
                LpSolution {
                    status,
                    x: Vec::new(),
                    objective: T::nan(),
                    iterations,
                    detail,
                }
            }
        }
    }
}

impl<T: Scalar> LpEngine<T> for DenseSimplex<T> {
    fn solve(&mut self, lower: &[T], upper: &[T]) -> LpSolution<T> {
        if let Some(j) = (0..self.n).find(|&j| lower[j] > upper[j]) {
            return LpSolution::status(
                LpStatus::Infeasible,
                Some(format!("column {j} bounds cross")),
            );
        }
        if let Some((status, tab)) = self.warm(lower, upper) {
            let ok = match &tab {
                Some(t) if status == LpStatus::Optimal => {
                    self.residual(&t.x[..self.n]).0 <= T::check_tol()
                }
                _ => true,
            };
            if ok {
                return self.finish(status, tab, None);
            }
        }
        let (status, tab, detail) = self.cold(lower, upper);
        if status == LpStatus::Optimal {
            let (worst, at) = self.residual(&tab.as_ref().expect("optimal tableau").x[..self.n]);
            if worst > T::check_tol() {
                self.state = None;
                return LpSolution::status(
                    LpStatus::Numerical,
                    Some(format!("{} violated by {}", at.unwrap_or_default(), worst)),
                );
            }
        }
        self.finish(status, tab, detail)
    }

    fn reset(&mut self) {
        self.state = None;
    }
}

fn nonbasic_start<T: Scalar>(lo: T, hi: T) -> (T, At) {
    if lo.is_finite() {
        (lo, At::Lower)
    } else if hi.is_finite() {
        (hi, At::Upper)
    } else {
        (T::zero(), At::Zero)
    }
}

impl<T: Scalar> Tableau<T> {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    fn at_ij(&self, i: usize, j: usize) -> T {
        self.t[i * self.cols + j]
    }

    /// Reduced costs `c - c_B^T T` for the given cost vector.
    fn reprice(&mut self, cost: &[T]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.rows() {
            let cb = cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            for (d, &a) in self.d.iter_mut().zip(row) {
                *d = *d - cb * a;
            }
        }
    }

    fn recompute_basics(&mut self) {
        let nz: Vec<usize> = (0..self.cols)
            .filter(|&j| self.at[j] != At::Basic && self.x[j] != T::zero())
            .collect();
        for i in 0..self.rows() {
            let row = &self.t[i * self.cols..(i + 1) * self.cols];
            let v = nz
                .iter()
                .fold(T::zero(), |acc, &j| acc - row[j] * self.x[j]);
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let tiny = T::epsilon() * T::of(64.0);
        let piv = self.t[r * cols + j];
        let mut nz = Vec::new();
        for c in 0..cols {
            let v = self.t[r * cols + c] / piv;
            if v.abs() <= tiny {
                self.t[r * cols + c] = T::zero();
            } else {
                self.t[r * cols + c] = v;
                nz.push(c);
            }
        }
        self.t[r * cols + j] = T::one();
        let (head, tail) = self.t.split_at_mut(r * cols);
        let (prow, rest) = tail.split_at_mut(cols);
        let prow: &[T] = prow;
        for row in head
            .chunks_exact_mut(cols)
            .chain(rest.chunks_exact_mut(cols))
        {
            let f = row[j];
            if f == T::zero() {
                continue;
            }
            for &c in &nz {
                let v = row[c] - f * prow[c];
                row[c] = if v.abs() <= tiny { T::zero() } else { v };
            }
            row[j] = T::zero();
        }
        let f = self.d[j];
        if f != T::zero() {
            for &c in &nz {
                self.d[c] = self.d[c] - f * prow[c];
            }
            self.d[j] = T::zero();
        }
        let leaving = self.basis[r];
        self.at[leaving] = At::Lower;
        self.basis[r] = j;
        self.at[j] = At::Basic;
        self.iterations += 1;
    }

    fn entering(&self, d: &[T], bland: bool) -> Option<(usize, T)> {
        let otol = T::optimality_tol();
        let mut best: Option<(usize, T, T)> = None;
        for (j, &dj) in d.iter().enumerate().take(self.cols) {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let dir = match self.at[j] {
                At::Basic => continue,
                At::Lower if dj < -otol => T::one(),
                At::Upper if dj > otol => -T::one(),
                At::Zero if dj.abs() > otol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Primal simplex from a primal feasible basis. `phase1` holds the
    /// auxiliary costs when minimizing artificial infeasibility, in which
    /// case `self.d` was priced with them.
    fn primal(&mut self, max_iter: usize, bland_after: usize, phase1: Option<&[T]>) -> Outcome {
        let _ = phase1;
        let mut degenerate = 0usize;
        let start = self.iterations;
        loop {
            if self.iterations - start > max_iter {
                return Outcome::Stalled;
            }
            if (self.iterations - start) % 64 == 63 {
                self.recompute_basics();
            }
            let bland = degenerate >= bland_after;
            let d = std::mem::take(&mut self.d);
            let choice = self.entering(&d, bland);
            self.d = d;
            let Some((j, dir)) = choice else {
                return Outcome::Done;
            };

            let mut theta = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                T::infinity()
            };
            let leave = if bland {
                self.bland_ratio(j, dir, &mut theta)
            } else {
                self.harris_ratio(j, dir, &mut theta)
            };
            if !theta.is_finite() {
                return Outcome::Unbounded;
            }
            if theta <= T::feasibility_tol() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.x[j] = self.x[j] + dir * theta;
            for i in 0..self.rows() {
                let a = self.at_ij(i, j);
                if a != T::zero() {
                    let b = self.basis[i];
                    self.x[b] = self.x[b] - a * dir * theta;
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    if dir > T::zero() {
                        self.at[j] = At::Upper;
                        self.x[j] = self.hi[j];
                    } else {
                        self.at[j] = At::Lower;
                        self.x[j] = self.lo[j];
                    }
                }
                Some((r, delta)) => {
                    let b = self.basis[r];
                    self.pivot(r, j);
                    if delta < T::zero() {
                        self.at[b] = At::Lower;
                        self.x[b] = self.lo[b];
                    } else {
                        self.at[b] = At::Upper;
                        self.x[b] = self.hi[b];
                    }
                }
            }
        }
    }

    /// Row limits on moving `x_j` in direction `dir`: `(row, delta, limit)`
    /// where `delta` is the change of the basic variable per unit step.
    fn row_limits(&self, j: usize, dir: T) -> Vec<(usize, T, T, T)> {
        let ptol = T::pivot_tol();
        let ftol = T::feasibility_tol();
        let mut out = Vec::new();
        for i in 0..self.rows() {
            let a = self.at_ij(i, j);
            if a.abs() <= ptol {
                continue;
            }
            let delta = -a * dir;
            let b = self.basis[i];
            let room = if delta < T::zero() {
                if !self.lo[b].is_finite() {
                    continue;
                }
                self.x[b] - self.lo[b]
            } else {
                if !self.hi[b].is_finite() {
                    continue;
                }
                self.hi[b] - self.x[b]
            };
            let room = room.max(T::zero());
            out.push((i, delta, room / delta.abs(), (room + ftol) / delta.abs()));
        }
        out
    }

    /// Textbook minimum ratio with smallest-index ties.
    fn bland_ratio(&self, j: usize, dir: T, theta: &mut T) -> Option<(usize, T)> {
        let mut leave: Option<(usize, T)> = None;
        for (i, delta, limit, _) in self.row_limits(j, dir) {
            let better = match leave {
                None => limit < *theta,
                Some((r, _)) => {
                    limit < *theta || (limit == *theta && self.basis[i] < self.basis[r])
                }
            };
            if better {
                *theta = limit;
                leave = Some((i, delta));
            }
        }
        leave
    }

    /// Two-pass ratio test: among rows whose limit is within the relaxed
    /// minimum, pivot on the largest entry.
    fn harris_ratio(&self, j: usize, dir: T, theta: &mut T) -> Option<(usize, T)> {
        let limits = self.row_limits(j, dir);
        let relaxed = limits.iter().fold(T::infinity(), |acc, l| acc.min(l.3));
        if *theta <= relaxed {
            return None;
        }
        let mut leave: Option<(usize, T, T)> = None;
        for &(i, delta, limit, _) in &limits {
            if limit <= relaxed && leave.is_none_or(|(_, d, _)| delta.abs() > d.abs()) {
                leave = Some((i, delta, limit));
            }
        }
        let (i, delta, limit) = leave?;
        *theta = limit;
        Some((i, delta))
    }

    /// Largest absolute tableau entry.
    fn growth(&self) -> T {
        self.t.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self, max_iter: usize) -> Outcome {
        let ptol = T::pivot_tol();
        let ftol = T::feasibility_tol();
        let start = self.iterations;
        loop {
            if self.iterations - start > max_iter {
                return Outcome::Stalled;
            }
            self.recompute_basics();
            let mut pick: Option<(usize, T, T)> = None;
            for i in 0..self.rows() {
                let b = self.basis[i];
                let (v, target) = if self.x[b] < self.lo[b] - ftol {
                    (self.lo[b] - self.x[b], self.lo[b])
                } else if self.x[b] > self.hi[b] + ftol {
                    (self.x[b] - self.hi[b], self.hi[b])
                } else {
                    continue;
                };
                if pick.is_none_or(|(_, w, _)| v > w) {
                    pick = Some((i, v, target));
                }
            }
            let Some((r, _, target)) = pick else {
                return Outcome::Done;
            };
            let b = self.basis[r];
            let increase = target > self.x[b];
            let otol = T::optimality_tol();
            let mut eligible: Vec<(usize, T, T)> = Vec::new();
            for j in 0..self.cols {
                if self.at[j] == At::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let a = self.at_ij(r, j);
                if a.abs() <= ptol {
                    continue;
                }
                // x_b changes by -a per unit increase of x_j.
                let up_helps = if increase {
                    a < T::zero()
                } else {
                    a > T::zero()
                };
                let ok = match self.at[j] {
                    At::Lower => up_helps,
                    At::Upper => !up_helps,
                    At::Zero => true,
                    At::Basic => false,
                };
                if ok {
                    eligible.push((j, a.abs(), self.d[j].abs()));
                }
            }
            let relaxed = eligible
                .iter()
                .fold(T::infinity(), |acc, &(_, a, d)| acc.min((d + otol) / a));
            let mut enter: Option<(usize, T)> = None;
            for &(j, a, d) in &eligible {
                if d / a <= relaxed && enter.is_none_or(|(_, best)| a > best) {
                    enter = Some((j, a));
                }
            }
            let Some((j, _)) = enter else {
                return Outcome::Infeasible;
            };
            let a = self.at_ij(r, j);
            let step = (self.x[b] - target) / a;
            self.x[j] = self.x[j] + step;
            self.pivot(r, j);
            self.x[b] = target;
            self.at[b] = if target == self.lo[b] {
                At::Lower
            } else {
                At::Upper
            };
        }
    }

    /// Pivots basic artificials (fixed at zero) out of the basis where a
    /// non-artificial column can replace them.
    fn drive_out_artificials(&mut self, first_art: usize) {
        let ptol = T::pivot_tol();
        for r in 0..self.rows() {
            if self.basis[r] < first_art {
                continue;
            }
            let col = (0..first_art)
                .find(|&j| self.at[j] != At::Basic && self.at_ij(r, j).abs() > ptol * T::of(1e3));
            if let Some(j) = col {
                let b = self.basis[r];
                self.pivot(r, j);
                self.at[b] = At::Lower;
                self.x[b] = T::zero();
                self.recompute_basics();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{Family, VarKind, VarTag};

    fn var(m: &mut Model<f64>, name: &str, lo: f64, hi: f64) -> usize {
        m.add_var(VarTag::Named(name.into()), VarKind::Continuous, lo, hi)
    }

    fn solve(m: &Model<f64>) -> LpSolution<f64> {
        DenseSimplex::new(m).solve(&m.lower_bounds(), &m.upper_bounds())
    }

    #[test]
    fn bound_attained_optimum() {
        let mut m = Model::new();
        let x = var(&mut m, "x", 2.0, 5.0);
        m.set_objective(x, 1.0);
        let s = solve(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x[x], 2.0);
        assert_eq!(s.objective, 2.0);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = Model::new();
        let x = var(&mut m, "x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_row(Family::Other, "a", vec![(x, 1.0)], Sense::Le, 1.0);
        m.add_row(Family::Other, "b", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut m = Model::new();
        let x = var(&mut m, "x", 0.0, f64::INFINITY);
        m.set_objective(x, -1.0);
        assert_eq!(solve(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn epigraph_takes_the_largest_row() {
        // min c  s.t.  c >= 3, c >= 7
        let mut m = Model::new();
        let c = var(&mut m, "c", 0.0, f64::INFINITY);
        m.set_objective(c, 1.0);
        m.add_row(Family::Other, "r1", vec![(c, -1.0)], Sense::Le, -3.0);
        m.add_row(Family::Other, "r2", vec![(c, -1.0)], Sense::Le, -7.0);
        let s = solve(&m);
        assert!((s.x[c] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn small_production_lp() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut m = Model::new();
        let x = var(&mut m, "x", 0.0, f64::INFINITY);
        let y = var(&mut m, "y", 0.0, f64::INFINITY);
        m.set_objective(x, -3.0);
        m.set_objective(y, -5.0);
        m.add_row(Family::Other, "a", vec![(x, 1.0)], Sense::Le, 4.0);
        m.add_row(Family::Other, "b", vec![(y, 2.0)], Sense::Le, 12.0);
        m.add_row(
            Family::Other,
            "c",
            vec![(x, 3.0), (y, 2.0)],
            Sense::Le,
            18.0,
        );
        let s = solve(&m);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[x] - 2.0).abs() < 1e-9 && (s.x[y] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_need_phase_one() {
        // min x + y  st  x + y = 10, x - y = 2
        let mut m = Model::new();
        let x = var(&mut m, "x", 0.0, f64::INFINITY);
        let y = var(&mut m, "y", 0.0, f64::INFINITY);
        m.set_objective(x, 1.0);
        m.set_objective(y, 1.0);
        m.add_row(
            Family::Other,
            "s",
            vec![(x, 1.0), (y, 1.0)],
            Sense::Eq,
            10.0,
        );
        m.add_row(
            Family::Other,
            "d",
            vec![(x, 1.0), (y, -1.0)],
            Sense::Eq,
            2.0,
        );
        let s = solve(&m);
        assert!((s.x[x] - 6.0).abs() < 1e-9 && (s.x[y] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_matches_cold_after_bound_change() {
        let mut m = Model::new();
        let x = var(&mut m, "x", 0.0, 10.0);
        let y = var(&mut m, "y", 0.0, 10.0);
        m.set_objective(x, -1.0);
        m.set_objective(y, -2.0);
        m.add_row(
            Family::Other,
            "c",
            vec![(x, 1.0), (y, 1.0)],
            Sense::Le,
            12.5,
        );
        m.add_row(
            Family::Other,
            "d",
            vec![(x, 1.0), (y, 3.0)],
            Sense::Le,
            30.0,
        );
        let mut warm = DenseSimplex::new(&m);
        let (lo, mut hi) = (m.lower_bounds(), m.upper_bounds());
        let first = warm.solve(&lo, &hi);
        assert_eq!(first.status, LpStatus::Optimal);
        hi[y] = 7.0;
        let again = warm.solve(&lo, &hi);
        let mut cold = DenseSimplex::new(&m);
        cold.warm_start = false;
        let reference = cold.solve(&lo, &hi);
        assert!((again.objective - reference.objective).abs() < 1e-9);
        hi[y] = 10.0;
        let back = warm.solve(&lo, &hi);
        assert!((back.objective - first.objective).abs() < 1e-9);
    }

    #[test]
    fn runs_in_single_precision() {
        let mut m = Model::<f64>::new();
        let x = var(&mut m, "x", 0.0, f64::INFINITY);
        let y = var(&mut m, "y", 0.0, f64::INFINITY);
        m.set_objective(x, 2.0);
        m.set_objective(y, 3.0);
        m.add_row(Family::Other, "a", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 4.0);
        m.add_row(Family::Other, "b", vec![(x, 1.0)], Sense::Le, 3.0);
        let m32 = m.cast::<f32>();
        let s = DenseSimplex::new(&m32).solve(&m32.lower_bounds(), &m32.upper_bounds());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 9.0).abs() < 1e-4);
    }
}
