//! Build, seed, solve and extract in one call.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bnb::{lp_engine, solve_milp_from, BnbParams, LpBackend, Solution, SolveStatus};
use super::builder::{build_model, BuiltModel};
use super::extract::{
    cost_breakdown, extract_design_and_schedule, ChargingSchedule, CostBreakdown,
    InfrastructureDesign,
};
use super::feasibility::check_feasibility;
use super::heuristic::{greedy_plan, lp_targets, GreedyPlan, PlanOptions};
use super::lp::LpStatus;
use super::model::{Family, Model};
use crate::domain::{LegRef, ProblemInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub bnb: BnbParams,
    pub backend: LpBackend,
    /// Seed the search with greedy plans, one of them guided by the LP
    /// relaxation.
    pub heuristic: bool,
    /// Also run the greedy against the root LP relaxation. The relaxation
    /// dominates the run time on week-long fleets.
    pub lp_guided: bool,
    /// Fixes the charger counts; only the schedule is optimized.
    pub design: Option<InfrastructureDesign>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            bnb: BnbParams::default(),
            backend: LpBackend::Auto,
            heuristic: true,
            lp_guided: true,
            design: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub built: BuiltModel,
    pub solution: Solution<f64>,
    pub design: InfrastructureDesign,
    pub schedule: ChargingSchedule,
    pub costs: CostBreakdown,
    /// Objective of the best greedy start, when one was found.
    pub heuristic_objective: Option<f64>,
}

/// Pins every charger count of `built` to `design`.
pub fn fix_design(
    inst: &ProblemInstance,
    built: &mut BuiltModel,
    design: &InfrastructureDesign,
) -> Result<()> {
    for &site in design.sites.keys() {
        if !built.charger_counts.contains_key(&(site, 0)) {
            return Err(Error::Config(format!(
                "design installs chargers at {}, which is not a charger site with departing legs",
                inst.locations
                    .get(site)
                    .map_or("an unknown location", |l| l.id.as_str())
            )));
        }
    }
    for (&(site, r), &x) in &built.charger_counts {
        let n = f64::from(design.count(site, r));
        let var = &mut built.model.vars[x];
        var.lower = n;
        var.upper = n;
    }
    Ok(())
}

/// Charging targets from the relaxation of each vehicle's own model, with
/// the peak cost split evenly over the fleet.
pub fn decomposed_targets(inst: &ProblemInstance, backend: LpBackend) -> BTreeMap<LegRef, f64> {
    let fleet = inst.vehicles.len().max(1) as f64;
    let per_vehicle: Vec<BTreeMap<LegRef, f64>> = (0..inst.vehicles.len())
        .into_par_iter()
        .map(|k| {
            let mut sub = inst.clone();
            sub.vehicles = vec![inst.vehicles[k].clone()];
            sub.params.alpha_peak /= fleet;
            let built = build_model(&sub);
            let lp = lp_engine(&built.model, backend)
                .solve(&built.model.lower_bounds(), &built.model.upper_bounds());
            if lp.status != LpStatus::Optimal {
                return BTreeMap::new();
            }
            lp_targets(&built, &lp.x)
                .into_iter()
                .map(|(r, e)| {
                    (
                        LegRef {
                            vehicle: k,
                            leg: r.leg,
                        },
                        e,
                    )
                })
                .collect()
        })
        .collect();
    per_vehicle.into_iter().flatten().collect()
}

/// Removes chargers one at a time, slowest type last, while the re-planned
/// objective drops.
fn shrink_design(inst: &ProblemInstance, mut best: GreedyPlan, opts: &PlanOptions) -> GreedyPlan {
    let mut types: Vec<usize> = (0..inst.chargers.len()).collect();
    types.sort_by(|&a, &b| {
        inst.chargers[b]
            .power_kw
            .total_cmp(&inst.chargers[a].power_kw)
    });
    'search: loop {
        for (&site, counts) in &best.design.sites {
            for &r in &types {
                if counts[r] == 0 {
                    continue;
                }
                let mut design = best.design.clone();
                let mut fewer = counts.clone();
                fewer[r] -= 1;
                design.set(site, fewer);
                let trial = PlanOptions {
                    design: Some(design),
                    ..opts.clone()
                };
                if let Some(plan) = greedy_plan(inst, &trial) {
                    if plan.objective < best.objective - 1e-9 * best.objective.abs().max(1.0) {
                        best = plan;
                        continue 'search;
                    }
                }
            }
        }
        return best;
    }
}

fn seed(
    inst: &ProblemInstance,
    built: &BuiltModel,
    opts: &OptimizeOptions,
) -> Option<(Vec<f64>, f64)> {
    let base = PlanOptions {
        design: opts.design.clone(),
        ..PlanOptions::new()
    };
    let mut candidates = vec![
        base.clone(),
        PlanOptions {
            targets: decomposed_targets(inst, opts.backend),
            ..base.clone()
        },
    ];
    if opts.lp_guided {
        let root = lp_engine(&built.model, opts.backend)
            .solve(&built.model.lower_bounds(), &built.model.upper_bounds());
        if root.status == LpStatus::Optimal {
            candidates.push(PlanOptions {
                targets: lp_targets(built, &root.x),
                ..base
            });
        }
    }
    let mut best: Option<(GreedyPlan, PlanOptions)> = None;
    for c in candidates {
        if let Some(plan) = greedy_plan(inst, &c) {
            if best.as_ref().is_none_or(|b| plan.objective < b.0.objective) {
                best = Some((plan, c));
            }
        }
    }
    let (mut plan, with) = best?;
    if opts.design.is_none() {
        plan = shrink_design(inst, plan, &with);
    }
    let x = plan.to_values(inst, built);
    if !check_feasibility(&built.model, &x).is_empty() {
        return None;
    }
    let v = built.model.objective_value(&x);
    Some((x, v))
}

fn lp_feasible(model: &Model<f64>, backend: LpBackend) -> bool {
    lp_engine(model, backend)
        .solve(&model.lower_bounds(), &model.upper_bounds())
        .status
        != LpStatus::Infeasible
}

/// Names vehicles whose own relaxation is infeasible and the constraint
/// families whose removal alone makes it feasible.
fn explain_infeasibility(inst: &ProblemInstance, opts: &OptimizeOptions) -> Option<String> {
    let mut found = Vec::new();
    for k in 0..inst.vehicles.len() {
        let mut sub = inst.clone();
        sub.vehicles = vec![inst.vehicles[k].clone()];
        let mut built = build_model(&sub);
        if let Some(design) = &opts.design {
            if fix_design(&sub, &mut built, design).is_err() {
                continue;
            }
        }
        if lp_feasible(&built.model, opts.backend) {
            continue;
        }
        let families: BTreeSet<Family> = built.model.rows.iter().map(|r| r.family).collect();
        let binding: Vec<String> = families
            .into_iter()
            .filter(|&f| {
                let mut relaxed = built.model.clone();
                relaxed.rows.retain(|r| r.family != f);
                lp_feasible(&relaxed, opts.backend)
            })
            .map(|f| format!("{f:?}"))
            .collect();
        found.push(if binding.is_empty() {
            format!(
                "vehicle {} cannot complete its itinerary",
                inst.vehicles[k].id
            )
        } else {
            format!(
                "vehicle {} cannot complete its itinerary; binding constraints: {}",
                inst.vehicles[k].id,
                binding.join(", ")
            )
        });
        if found.len() == 3 {
            break;
        }
    }
    (!found.is_empty()).then(|| found.join("; "))
}

/// Builds the model for `inst`, solves it and extracts the plan.
pub fn optimize(inst: &ProblemInstance, opts: &OptimizeOptions) -> Result<Optimized> {
    let mut built = build_model(inst);
    if let Some(design) = &opts.design {
        fix_design(inst, &mut built, design)?;
    }
    let start = if opts.heuristic {
        seed(inst, &built, opts)
    } else {
        None
    };
    let heuristic_objective = start.as_ref().map(|s| s.1);
    let solution = solve_milp_from(&built.model, &opts.bnb, opts.backend, start.map(|s| s.0));
    match solution.status {
        SolveStatus::Infeasible => {
            let mut why = explain_infeasibility(inst, opts)
                .unwrap_or_else(|| "no design and schedule satisfy every constraint".into());
            if let Some(w) = built.model.warnings.first() {
                why = format!("{why} ({w})");
            }
            return Err(Error::Infeasible(why));
        }
        SolveStatus::Unbounded => return Err(Error::Solver("relaxation is unbounded".into())),
        SolveStatus::Numerical => {
            return Err(Error::Solver(
                solution
                    .detail
                    .unwrap_or_else(|| "numerical failure".into()),
            ))
        }
        SolveStatus::TimeLimit if solution.values.is_empty() => {
            return Err(Error::Solver(
                "search limit reached before any feasible plan".into(),
            ))
        }
        _ => {}
    }
    let (design, schedule) = extract_design_and_schedule(inst, &built, &solution.values)?;
    let costs = cost_breakdown(inst, &built, &solution.values);
    Ok(Optimized {
        built,
        solution,
        design,
        schedule,
        costs,
        heuristic_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::single_leg;

    #[test]
    fn single_leg_optimum() {
        let inst = single_leg();
        let out = optimize(&inst, &OptimizeOptions::default()).unwrap();
        assert_eq!(out.solution.status, SolveStatus::Optimal);
        assert_eq!(out.design.total_chargers(), 1);
        assert!((out.costs.total - out.solution.objective).abs() < 1e-9);
    }

    #[test]
    fn fixed_design_is_kept() {
        let inst = single_leg();
        let mut design = InfrastructureDesign::default();
        design.set(0, vec![2, 0]);
        let out = optimize(
            &inst,
            &OptimizeOptions {
                design: Some(design.clone()),
                ..OptimizeOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.design, design);
        let mut elsewhere = InfrastructureDesign::default();
        elsewhere.set(1, vec![1, 0]);
        let err = optimize(
            &inst,
            &OptimizeOptions {
                design: Some(elsewhere),
                ..OptimizeOptions::default()
            },
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
