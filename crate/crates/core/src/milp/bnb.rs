//! LP-based branch-and-bound.
//!
//! Best-first search on the parent LP bound with insertion order breaking
//! ties. Until the first incumbent is found the search dives depth-first,
//! following the child nearer to the LP value. Branching picks the most
//! fractional integer variable, lowest id first. Every integral node is
//! polished by fixing its integers and re-solving the LP, so incumbents are
//! exact basic solutions of the fixed problem.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::feasibility::check_feasibility;
use super::lp::{LpEngine, LpSolution, LpStatus};
use super::model::Model;
use super::simplex::DenseSimplex;
use super::sparse::SparseSimplex;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    Infeasible,
    Unbounded,
    TimeLimit,
    Numerical,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(
            self,
            SolveStatus::Optimal | SolveStatus::GapReached | SolveStatus::TimeLimit
        )
    }
}

/// One line of the search log, written after every processed node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLog<T> {
    pub node: usize,
    pub depth: usize,
    /// LP value of the node, absent when pruned or infeasible.
    pub lp_objective: Option<T>,
    pub incumbent: Option<T>,
    pub best_bound: T,
    pub open: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution<T> {
    pub status: SolveStatus,
    /// Values of all model variables; empty when no solution exists.
    pub values: Vec<T>,
    pub objective: T,
    pub best_bound: T,
    pub gap: T,
    pub nodes: usize,
    pub log: Vec<NodeLog<T>>,
    pub detail: Option<String>,
}

impl<T: Scalar> Solution<T> {
    fn without_values(
        status: SolveStatus,
        nodes: usize,
        log: Vec<NodeLog<T>>,
        detail: Option<String>,
    ) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: T::nan(),
            best_bound: T::nan(),
            gap: T::nan(),
            nodes,
            log,
            detail,
        }
    }
}

/// Relative gap `(objective - bound) / max(|objective|, eps)`.
pub fn relative_gap<T: Scalar>(objective: T, bound: T) -> T {
    let eps = T::of(1e-9);
    (objective - bound).max(T::zero()) / objective.abs().max(eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbParams {
    pub mip_gap: f64,
    pub node_limit: usize,
    /// Wall-clock budget. Off by default so results never depend on timing.
    pub time_limit: Option<Duration>,
    pub keep_log: bool,
}

impl Default for BnbParams {
    fn default() -> Self {
        Self {
            mip_gap: 0.01,
            node_limit: 1_000_000,
            time_limit: None,
            keep_log: true,
        }
    }
}

impl BnbParams {
    pub fn with_gap(mip_gap: f64) -> Self {
        Self {
            mip_gap,
            ..Self::default()
        }
    }
}

struct Branch<T> {
    var: usize,
    lo: T,
    hi: T,
    parent: Option<Rc<Branch<T>>>,
}

struct Node<T> {
    bound: T,
    seq: u64,
    depth: usize,
    branch: Option<Rc<Branch<T>>>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Node<T> {
    /// Reversed so the max-heap pops the lowest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .as_f64()
            .total_cmp(&self.bound.as_f64())
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn materialize<T: Scalar>(
    root_lo: &[T],
    root_hi: &[T],
    branch: &Option<Rc<Branch<T>>>,
) -> (Vec<T>, Vec<T>) {
    let mut lo = root_lo.to_vec();
    let mut hi = root_hi.to_vec();
    let mut seen = HashSet::new();
    let mut cur = branch.as_ref();
    while let Some(b) = cur {
        if seen.insert(b.var) {
            lo[b.var] = b.lo;
            hi[b.var] = b.hi;
        }
        cur = b.parent.as_ref();
    }
    (lo, hi)
}

/// Most fractional integer variable of the highest priority class, lowest
/// id on ties.
fn branching_var<T: Scalar>(ints: &[(usize, u8)], x: &[T]) -> Option<usize> {
    let tol = T::integrality_tol();
    let mut best: Option<(usize, u8, T)> = None;
    for &(j, p) in ints {
        let f = x[j] - x[j].floor();
        let dist = f.min(T::one() - f);
        if dist > tol && best.is_none_or(|(_, bp, d)| p > bp || (p == bp && dist > d)) {
            best = Some((j, p, dist));
        }
    }
    best.map(|(j, _, _)| j)
}

/// Runs branch-and-bound over `model` with the given LP engine.
pub fn branch_and_bound<T: Scalar, E: LpEngine<T> + ?Sized>(
    model: &Model<T>,
    engine: &mut E,
    params: &BnbParams,
) -> Solution<T> {
    branch_and_bound_from(model, engine, params, None)
}

/// Branch-and-bound seeded with a known solution. A start that violates
/// the model is ignored. The search still dives until it finds an
/// integral node of its own.
pub fn branch_and_bound_from<T: Scalar, E: LpEngine<T> + ?Sized>(
    model: &Model<T>,
    engine: &mut E,
    params: &BnbParams,
    start: Option<Vec<T>>,
) -> Solution<T> {
    let started = Instant::now();
    let tol = T::integrality_tol();
    let ints: Vec<usize> = model.integer_vars().collect();
    let ranked: Vec<(usize, u8)> = ints
        .iter()
        .map(|&j| (j, model.vars[j].tag.branch_priority()))
        .collect();
    let mut root_lo = model.lower_bounds();
    let mut root_hi = model.upper_bounds();
    for &j in &ints {
        root_lo[j] = (root_lo[j] - tol).ceil();
        root_hi[j] = (root_hi[j] + tol).floor();
    }
    let gap_target = T::of(params.mip_gap);

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut next: Option<Node<T>> = Some(Node {
        bound: T::neg_infinity(),
        seq,
        depth: 0,
        branch: None,
    });
    let mut incumbent: Option<(Vec<T>, T)> = start
        .filter(|x| x.len() == model.num_vars() && check_feasibility(model, x).is_empty())
        .map(|x| {
            let v = model.objective_value(&x);
            (x, v)
        });
    let mut diving = true;
    let mut lost_bound = T::infinity();
    let mut nodes = 0usize;
    let mut log = Vec::new();
    let mut status = None;
    let mut detail = None;

    let prune_tol = |inc: T| -> T {
        let abs = T::of(1e-9) * inc.abs().max(T::one());
        abs.max(gap_target * inc.abs())
    };

    while let Some(node) = next.take().or_else(|| heap.pop()) {
        let out_of_time = params.time_limit.is_some_and(|l| started.elapsed() >= l);
        if nodes >= params.node_limit || out_of_time {
            lost_bound = lost_bound.min(node.bound);
            status = Some(SolveStatus::TimeLimit);
            break;
        }
        if let Some((_, inc)) = &incumbent {
            if node.bound >= *inc - prune_tol(*inc) {
                continue;
            }
        }
        let (lo, hi) = materialize(&root_lo, &root_hi, &node.branch);
        let mut lp = engine.solve(&lo, &hi);
        if lp.status == LpStatus::Numerical {
            engine.reset();
            lp = engine.solve(&lo, &hi);
        }
        nodes += 1;

        let mut lp_value = None;
        match lp.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded if node.depth == 0 => {
                return Solution::without_values(SolveStatus::Unbounded, nodes, log, None);
            }
            LpStatus::Numerical if node.depth == 0 => {
                return Solution::without_values(SolveStatus::Numerical, nodes, log, lp.detail);
            }
            LpStatus::Unbounded | LpStatus::Numerical => {
                lost_bound = lost_bound.min(node.bound);
                detail = lp.detail.clone().or(detail);
            }
            LpStatus::Optimal => {
                let obj = lp.objective;
                lp_value = Some(obj);
                let dominated = incumbent
                    .as_ref()
                    .is_some_and(|(_, inc)| obj >= *inc - prune_tol(*inc));
                if !dominated {
                    match branching_var(&ranked, &lp.x) {
                        None => {
                            let (x, value) = polish(model, engine, &ints, &lo, &hi, lp);
                            diving = false;
                            if incumbent.as_ref().is_none_or(|(_, inc)| value < *inc) {
                                incumbent = Some((x, value));
                            }
                        }
                        Some(j) => {
                            let v = lp.x[j];
                            let down = Rc::new(Branch {
                                var: j,
                                lo: lo[j],
                                hi: v.floor(),
                                parent: node.branch.clone(),
                            });
                            let up = Rc::new(Branch {
                                var: j,
                                lo: v.ceil(),
                                hi: hi[j],
                                parent: node.branch.clone(),
                            });
                            let mut child = |b: Rc<Branch<T>>| {
                                seq += 1;
                                Node {
                                    bound: obj,
                                    seq,
                                    depth: node.depth + 1,
                                    branch: Some(b),
                                }
                            };
                            let (d, u) = (child(down), child(up));
                            if diving {
                                let up_first = v - v.floor() >= T::of(0.5);
                                let (first, second) = if up_first { (u, d) } else { (d, u) };
                                next = Some(first);
                                heap.push(second);
                            } else {
                                heap.push(d);
                                heap.push(u);
                            }
                        }
                    }
                }
            }
        }

        let open_bound = heap
            .peek()
            .map(|n: &Node<T>| n.bound)
            .into_iter()
            .chain(next.as_ref().map(|n| n.bound))
            .fold(lost_bound, T::min);
        let best_bound = match &incumbent {
            Some((_, inc)) => open_bound.min(*inc),
            None => open_bound,
        };
        if params.keep_log {
            log.push(NodeLog {
                node: nodes,
                depth: node.depth,
                lp_objective: lp_value,
                incumbent: incumbent.as_ref().map(|(_, v)| *v),
                best_bound,
                open: heap.len() + usize::from(next.is_some()),
            });
        }
        if let Some((_, inc)) = &incumbent {
            let exhausted = heap.is_empty() && next.is_none();
            let gap = relative_gap(*inc, best_bound);
            if !exhausted && gap <= gap_target {
                // Remaining nodes cannot improve beyond the pruning tolerance.
                let proven = gap <= T::of(1e-9);
                status = Some(if proven {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::GapReached
                });
                break;
            }
        }
    }

    let open_bound = heap
        .iter()
        .map(|n| n.bound)
        .chain(next.iter().map(|n| n.bound))
        .fold(lost_bound, T::min);
    match incumbent {
        None => {
            let status = match status {
                Some(SolveStatus::TimeLimit) => SolveStatus::TimeLimit,
                _ if lost_bound.is_finite() => SolveStatus::Numerical,
                _ => SolveStatus::Infeasible,
            };
            Solution::without_values(status, nodes, log, detail)
        }
        Some((values, objective)) => {
            let best_bound = open_bound.min(objective);
            let gap = relative_gap(objective, best_bound);
            let status = match status {
                Some(s) => s,
                None if lost_bound.is_finite() => SolveStatus::GapReached,
                None => SolveStatus::Optimal,
            };
            Solution {
                status,
                values,
                objective,
                best_bound,
                gap,
                nodes,
                log,
                detail,
            }
        }
    }
}

/// Rounds the integers of an integral LP point and re-solves the LP with
/// them fixed.
fn polish<T: Scalar, E: LpEngine<T> + ?Sized>(
    model: &Model<T>,
    engine: &mut E,
    ints: &[usize],
    lo: &[T],
    hi: &[T],
    lp: LpSolution<T>,
) -> (Vec<T>, T) {
    let mut flo = lo.to_vec();
    let mut fhi = hi.to_vec();
    for &j in ints {
        let v = lp.x[j].round();
        flo[j] = v;
        fhi[j] = v;
    }
    let fixed = engine.solve(&flo, &fhi);
    let mut x = if fixed.status == LpStatus::Optimal {
        fixed.x
    } else {
        lp.x
    };
    for &j in ints {
        x[j] = x[j].round();
    }
    let value = model.objective_value(&x);
    (x, value)
}

/// Which LP engine branch-and-bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpBackend {
    /// Dense tableau when it fits in [`DENSE_LIMIT`] entries, sparse otherwise.
    #[default]
    Auto,
    Dense,
    Sparse,
}

/// Largest dense tableau (entries) the automatic backend accepts.
pub const DENSE_LIMIT: usize = 3_000_000;

/// Solves a double-precision model with the chosen backend.
pub fn solve_milp(model: &Model<f64>, params: &BnbParams, backend: LpBackend) -> Solution<f64> {
    solve_milp_from(model, params, backend, None)
}

/// [`solve_milp`] seeded with a known solution.
pub fn solve_milp_from(
    model: &Model<f64>,
    params: &BnbParams,
    backend: LpBackend,
    start: Option<Vec<f64>>,
) -> Solution<f64> {
    let mut engine = lp_engine(model, backend);
    branch_and_bound_from(model, engine.as_mut(), params, start)
}

/// The LP engine `backend` selects for `model`.
pub fn lp_engine(model: &Model<f64>, backend: LpBackend) -> Box<dyn LpEngine<f64>> {
    let dense = match backend {
        LpBackend::Dense => true,
        LpBackend::Sparse => false,
        LpBackend::Auto => DenseSimplex::footprint(model) <= DENSE_LIMIT,
    };
    if dense {
        Box::new(DenseSimplex::new(model))
    } else {
        Box::new(SparseSimplex::new(model))
    }
}

/// Solves the LP relaxation with the dense engine.
pub fn solve_lp_relaxation<T: Scalar>(model: &Model<T>) -> Solution<T> {
    let lp = DenseSimplex::new(model).solve(&model.lower_bounds(), &model.upper_bounds());
    let status = match lp.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::Infeasible => SolveStatus::Infeasible,
        LpStatus::Unbounded => SolveStatus::Unbounded,
        LpStatus::Numerical => SolveStatus::Numerical,
    };
    if status != SolveStatus::Optimal {
        return Solution::without_values(status, 1, Vec::new(), lp.detail);
    }
    Solution {
        status,
        objective: lp.objective,
        best_bound: lp.objective,
        gap: T::zero(),
        values: lp.x,
        nodes: 1,
        log: Vec::new(),
        detail: None,
    }
}
