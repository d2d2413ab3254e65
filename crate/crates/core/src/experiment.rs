//! Rule-of-thumb designs and the optimized/rule-based comparison matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::ProblemInstance;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, AggregateReport, MetricsContext, DEFAULT_THRESHOLDS};
use crate::milp::{
    optimize, ChargingSchedule, CostBreakdown, InfrastructureDesign, OptimizeOptions, Optimized,
    SolveStatus,
};
use crate::sim::{run_monte_carlo, Policy, SimSetup, StochasticConfig};

/// Charger mix of the case-study rule design, per catalog type.
pub const CASE_STUDY_MIX: [u32; 5] = [10, 10, 4, 0, 1];

/// `ceil(vehicles / ratio)`.
pub fn rule_charger_count(vehicles: usize, ratio: f64) -> Result<u32> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Config(format!(
            "truck-to-charger ratio must be positive, got {ratio}"
        )));
    }
    Ok((vehicles as f64 / ratio).ceil() as u32)
}

/// Scales `shares` to integer counts summing to `total` by largest
/// remainders; ties go to the lower type index.
pub fn scale_mix(shares: &[u32], total: u32) -> Result<Vec<u32>> {
    let sum: u32 = shares.iter().sum();
    if sum == 0 {
        return Err(Error::Config("power mix has no chargers".into()));
    }
    let exact: Vec<f64> = shares
        .iter()
        .map(|&s| f64::from(s) * f64::from(total) / f64::from(sum))
        .collect();
    let mut counts: Vec<u32> = exact.iter().map(|x| x.floor() as u32).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = total - counts.iter().sum::<u32>();
    for &r in order.iter().take(missing as usize) {
        counts[r] += 1;
    }
    Ok(counts)
}

pub const DEFAULT_RATIO: f64 = 5.0;

/// Rule-based design at `site`. A mix alone is installed as given; a ratio
/// alone scales the case-study mix to `ceil(|K| / ratio)`; with both, the
/// mix must have that many chargers.
pub fn rule_design(
    inst: &ProblemInstance,
    ratio: Option<f64>,
    mix: Option<&[u32]>,
    site: usize,
) -> Result<InfrastructureDesign> {
    let counts = match (mix, ratio) {
        (Some(mix), ratio) => {
            if mix.len() != inst.chargers.len() {
                return Err(Error::Config(format!(
                    "power mix lists {} types, the catalog has {}",
                    mix.len(),
                    inst.chargers.len()
                )));
            }
            if let Some(ratio) = ratio {
                let n = rule_charger_count(inst.vehicles.len(), ratio)?;
                let total: u32 = mix.iter().sum();
                if total != n {
                    return Err(Error::Config(format!(
                        "power mix installs {total} chargers but {} vehicles at ratio {ratio} need {n}",
                        inst.vehicles.len()
                    )));
                }
            }
            mix.to_vec()
        }
        (None, ratio) => {
            let n = rule_charger_count(inst.vehicles.len(), ratio.unwrap_or(DEFAULT_RATIO))?;
            let mut shares = CASE_STUDY_MIX.to_vec();
            shares.resize(inst.chargers.len(), 0);
            if shares.iter().all(|&s| s == 0) {
                shares = vec![1; inst.chargers.len()];
            }
            scale_mix(&shares, n)?
        }
    };
    if !inst.locations.get(site).is_some_and(|l| l.charger_site) {
        return Err(Error::Config(format!(
            "location {site} is not a charger site"
        )));
    }
    let mut design = InfrastructureDesign::default();
    design.set(site, counts);
    Ok(design)
}

/// The first charger site, where rule designs go by default.
pub fn default_site(inst: &ProblemInstance) -> Result<usize> {
    inst.charger_sites()
        .next()
        .ok_or_else(|| Error::Config("instance has no charger site".into()))
}

/// Highest rated power of occupied chargers per location, the peak the
/// optimizer pays for.
pub fn scheduled_peak(inst: &ProblemInstance, schedule: &ChargingSchedule) -> BTreeMap<usize, f64> {
    let mut per_slot: BTreeMap<(usize, u32), f64> = BTreeMap::new();
    for l in &schedule.legs {
        for s in &l.sessions {
            *per_slot.entry((l.location, s.slot)).or_default() += inst.chargers[s.charger].power_kw;
        }
    }
    let mut peak: BTreeMap<usize, f64> = BTreeMap::new();
    for ((loc, _), kw) in per_slot {
        let p = peak.entry(loc).or_default();
        *p = p.max(kw);
    }
    peak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Trucks per charger for the rule design.
    pub ratio: Option<f64>,
    /// Absolute counts per type for the rule design.
    pub mix: Option<Vec<u32>>,
    pub stochastic: StochasticConfig,
    pub optimize: OptimizeOptions,
    /// Contracted power per location; defaults to the co-design peak.
    pub contracted: Option<BTreeMap<usize, f64>>,
    pub thresholds: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ratio: None,
            mix: None,
            stochastic: StochasticConfig::default(),
            optimize: OptimizeOptions::default(),
            contracted: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn rule_design(&self, inst: &ProblemInstance) -> Result<InfrastructureDesign> {
        rule_design(inst, self.ratio, self.mix.as_deref(), default_site(inst)?)
    }
}

/// Plan produced by the optimizer for one design source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub design: InfrastructureDesign,
    pub costs: CostBreakdown,
    pub status: SolveStatus,
    pub gap: f64,
    pub peak_kw: BTreeMap<usize, f64>,
}

impl PlanSummary {
    pub fn of(inst: &ProblemInstance, out: &Optimized) -> Self {
        Self {
            design: out.design.clone(),
            costs: out.costs,
            status: out.solution.status,
            gap: out.solution.gap,
            peak_kw: scheduled_peak(inst, &out.schedule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// OO, OR, RO or RR: design source then scheduling source.
    pub label: String,
    pub report: Option<AggregateReport>,
    /// Why the row has no report.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub co_design: PlanSummary,
    pub rule_design: InfrastructureDesign,
    /// Optimized schedule on the rule design, when one exists.
    pub rule_design_plan: Option<PlanSummary>,
    pub contracted_kw: BTreeMap<usize, f64>,
    pub rows: Vec<ExperimentRow>,
}

/// Simulates one design and policy and aggregates the runs.
pub fn evaluate(
    label: &str,
    inst: &ProblemInstance,
    design: &InfrastructureDesign,
    policy: Policy<'_>,
    contracted: &BTreeMap<usize, f64>,
    cfg: &ExperimentConfig,
    planned_energy_cost: Option<f64>,
) -> Result<AggregateReport> {
    let setup = SimSetup::new(inst, design, policy).with_contracted(contracted.clone());
    let mut ctx = MetricsContext::new(inst, setup.contracted_map());
    ctx.thresholds = cfg.thresholds.clone();
    let runs = run_monte_carlo(&setup, &cfg.stochastic, &ctx)?;
    Ok(aggregate(label, &runs, &ctx, planned_energy_cost))
}

/// Runs the optimized/rule-based design and scheduling matrix.
pub fn run_experiment(inst: &ProblemInstance, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let co = optimize(inst, &cfg.optimize)?;
    let co_summary = PlanSummary::of(inst, &co);
    let contracted = cfg
        .contracted
        .clone()
        .unwrap_or_else(|| co_summary.peak_kw.clone());
    let rule = cfg.rule_design(inst)?;
    let ro = optimize(
        inst,
        &OptimizeOptions {
            design: Some(rule.clone()),
            ..cfg.optimize.clone()
        },
    );
    let (ro, ro_note) = match ro {
        Ok(o) => (Some(o), None),
        Err(Error::Infeasible(why)) => (
            None,
            Some(format!("rule design cannot serve the itineraries: {why}")),
        ),
        Err(Error::Solver(why)) => (
            None,
            Some(format!("no schedule found for the rule design: {why}")),
        ),
        Err(e) => return Err(e),
    };
    let ro_summary = ro.as_ref().map(|o| PlanSummary::of(inst, o));
    let planned_rule = ro.as_ref().map(|o| o.costs.energy);

    let mut rows = vec![
        ExperimentRow {
            label: "OO".into(),
            report: Some(evaluate(
                "OO",
                inst,
                &co.design,
                Policy::Schedule(&co.schedule),
                &contracted,
                cfg,
                Some(co.costs.energy),
            )?),
            note: None,
        },
        ExperimentRow {
            label: "OR".into(),
            report: Some(evaluate(
                "OR",
                inst,
                &co.design,
                Policy::Rule,
                &contracted,
                cfg,
                Some(co.costs.energy),
            )?),
            note: None,
        },
    ];
    rows.push(match &ro {
        Some(o) => ExperimentRow {
            label: "RO".into(),
            report: Some(evaluate(
                "RO",
                inst,
                &rule,
                Policy::Schedule(&o.schedule),
                &contracted,
                cfg,
                planned_rule,
            )?),
            note: None,
        },
        None => ExperimentRow {
            label: "RO".into(),
            report: None,
            note: ro_note,
        },
    });
    rows.push(ExperimentRow {
        label: "RR".into(),
        report: Some(evaluate(
            "RR",
            inst,
            &rule,
            Policy::Rule,
            &contracted,
            cfg,
            planned_rule,
        )?),
        note: None,
    });
    Ok(ExperimentResult {
        co_design: co_summary,
        rule_design: rule,
        rule_design_plan: ro_summary,
        contracted_kw: contracted,
        rows,
    })
}

impl ExperimentResult {
    pub fn row(&self, label: &str) -> Option<&AggregateReport> {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .and_then(|r| r.report.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::single_leg;

    #[test]
    fn largest_remainder() {
        assert_eq!(
            scale_mix(&CASE_STUDY_MIX, 25).unwrap(),
            CASE_STUDY_MIX.to_vec()
        );
        assert_eq!(scale_mix(&CASE_STUDY_MIX, 4).unwrap(), vec![2, 1, 1, 0, 0]);
        assert_eq!(scale_mix(&CASE_STUDY_MIX, 1).unwrap(), vec![1, 0, 0, 0, 0]);
        assert_eq!(scale_mix(&[1, 1], 3).unwrap(), vec![2, 1]);
    }

    #[test]
    fn counts_and_validation() {
        assert_eq!(rule_charger_count(100, 5.0).unwrap(), 20);
        assert_eq!(rule_charger_count(100, 4.0).unwrap(), 25);
        assert_eq!(rule_charger_count(100, 100.0).unwrap(), 1);
        assert_eq!(rule_charger_count(101, 5.0).unwrap(), 21);
        assert!(rule_charger_count(10, 0.0).is_err());
        let inst = single_leg();
        assert!(rule_design(&inst, Some(1.0), Some(&[1, 0]), 0).is_ok());
        assert!(rule_design(&inst, Some(1.0), Some(&[1, 1]), 0).is_err());
        assert!(rule_design(&inst, None, Some(&[1, 1]), 0).is_ok());
        assert!(rule_design(&inst, None, Some(&[1]), 0).is_err());
        assert!(rule_design(&inst, Some(1.0), Some(&[1, 0]), 1).is_err());
        assert_eq!(
            rule_design(&inst, None, None, 0).unwrap().total_chargers(),
            1
        );
    }
}
