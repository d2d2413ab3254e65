//! Mixed-integer model of the joint infrastructure and schedule problem,
//! its solver, standard-form export and solution extraction.

mod bnb;
mod builder;
mod extract;
mod feasibility;
mod heuristic;
mod lp;
mod model;
mod mps;
mod optimize;
mod simplex;
mod sparse;

pub use bnb::{
    branch_and_bound, branch_and_bound_from, lp_engine, relative_gap, solve_lp_relaxation,
    solve_milp, solve_milp_from, BnbParams, LpBackend, NodeLog, Solution, SolveStatus, DENSE_LIMIT,
};
pub use builder::{build_model, BuiltModel, LegVars, ModelBuilder};
pub use extract::{
    cost_breakdown, extract_design_and_schedule, ChargingSchedule, CostBreakdown, DesignDocument,
    InfrastructureDesign, LegSchedule, Session, SiteDoc, EXTRACT_INT_TOL,
};
pub use feasibility::{check_feasibility, Infeasibility, Subject, FEASIBILITY_TOL};
pub use heuristic::{
    greedy_plan, lp_targets, vehicle_can_complete, GreedyPlan, LegPlan, PlanOptions,
};
pub use lp::{LpEngine, LpSolution, LpStatus};
pub use model::{
    Constraint, Family, Model, RowId, Sense, TagParseError, VarId, VarKind, VarTag, Variable,
};
pub use mps::{read_mps, read_mps_str, short_names, write_mps, write_mps_string};
pub use optimize::{decomposed_targets, fix_design, optimize, OptimizeOptions, Optimized};
pub use simplex::DenseSimplex;
pub use sparse::SparseSimplex;
