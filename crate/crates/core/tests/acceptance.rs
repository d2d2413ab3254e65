//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use chargeplan::domain::{OptimizationParams, ProblemInstance};
use chargeplan::experiment::{
    rule_design, run_experiment, scheduled_peak, ExperimentConfig, CASE_STUDY_MIX,
};
use chargeplan::fixtures::{
    charger, micro_instance, random_micro, MicroLeg, MicroVehicle, DEPOT, SHOP,
};
use chargeplan::generator::{generate_instance, GeneratorConfig};
use chargeplan::metrics::{
    aggregate, compute_run_metrics, max_metric_difference, reports_table, rescan_tsv,
    CostDifference, MetricsContext,
};
use chargeplan::milp::{
    build_model, check_feasibility, optimize, solve_milp, BnbParams, BuiltModel, Family,
    InfrastructureDesign, LpBackend, SolveStatus,
};
use chargeplan::sim::{
    check_log, run_monte_carlo, run_seeded, run_simulation, Policy, Realization, SimSetup,
    StochasticConfig,
};
use common::oracle;

/// Criteria this implementation does not meet; see the README.
const KNOWN_UNMET: &[&str] = &["directional replication"];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0;
    let mut slowest = 0.0f64;
    for seed in 0..400 {
        let inst = random_micro(seed);
        let Ok(Some(expected)) = oracle::solve(&inst, 200_000) else {
            continue;
        };
        let built = build_model(&inst);
        let t = Instant::now();
        let sol = solve_milp(&built.model, &BnbParams::with_gap(0.0), LpBackend::Auto);
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        if sol.status != SolveStatus::Optimal
            || (sol.objective - expected.objective).abs() > 1e-6
            || secs >= 10.0
        {
            return Err(format!(
                "seed {seed}: {:?} {} vs enumeration {} in {secs:.2} s",
                sol.status, sol.objective, expected.objective
            ));
        }
        checked += 1;
        if checked == 30 {
            break;
        }
    }
    ensure(
        checked >= 20,
        format!("{checked} micro instances match enumeration, slowest {slowest:.3} s"),
    )
}

fn violated(built: &BuiltModel, x: &[f64]) -> Vec<Family> {
    check_feasibility(&built.model, x)
        .into_iter()
        .filter_map(|v| v.family)
        .collect()
}

fn feasibility_suite() -> Outcome {
    let mut incumbents = 0;
    for seed in 0..60 {
        let built = build_model(&random_micro(seed));
        let sol = solve_milp(&built.model, &BnbParams::with_gap(0.0), LpBackend::Auto);
        if sol.status.has_solution() {
            let bad = check_feasibility(&built.model, &sol.values);
            if !bad.is_empty() {
                return Err(format!("seed {seed}: incumbent violates {:?}", bad[0]));
            }
            incumbents += 1;
        }
    }
    let fleet = common::fleet(5, 2, 1);
    let out = optimize(&fleet, &common::heuristic_only()).map_err(|e| e.to_string())?;
    let bad = check_feasibility(&out.built.model, &out.solution.values);
    if !bad.is_empty() {
        return Err(format!("fleet plan violates {:?}", bad[0]));
    }
    incumbents += 1;

    let truck = |energy| MicroVehicle {
        battery_kwh: 100.0,
        min_energy_kwh: 5.0,
        soc_boundary: 0.5,
        legs: vec![MicroLeg::new(DEPOT, SHOP, energy, (4, 4), (5, 5))],
    };
    let params = OptimizationParams {
        alpha_peak: 1.0,
        beta_slack: 0.0,
        gamma_energy: 1.0,
        mip_gap: 0.0,
    };
    let inst = micro_instance(
        6,
        vec![
            charger("ac60", 60.0, 0.98, 0.08),
            charger("dc180", 180.0, 0.98, 0.16),
        ],
        vec![0.05, 0.15, 0.05, 0.1, 0.1, 0.1],
        false,
        vec![truck(40.0), truck(35.0)],
        params,
    );
    let built = build_model(&inst);
    let base = solve_milp(&built.model, &BnbParams::with_gap(0.0), LpBackend::Dense).values;

    let mut capacity = base.clone();
    let &x = built
        .charger_counts
        .values()
        .find(|&&v| base[v] >= 1.0)
        .ok_or("no charger installed")?;
    capacity[x] -= 1.0;

    let mut double = base.clone();
    let lv = &built.legs[0];
    let (s, _) = lv
        .slots()
        .find(|&(s, _)| lv.choice[s].iter().any(|&y| base[y] == 1.0))
        .ok_or("no session")?;
    for &y in &lv.choice[s] {
        double[y] = 1.0;
    }

    let mut switch = base.clone();
    for (s, _) in lv.slots() {
        for &y in &lv.choice[s] {
            switch[y] = 0.0;
        }
    }
    switch[lv.choice[1][0]] = 1.0;
    switch[lv.choice[2][1]] = 1.0;

    let planted = [
        (
            "charger capacity",
            violated(&built, &capacity).contains(&Family::ChargerCapacity),
        ),
        (
            "single charger",
            violated(&built, &double).contains(&Family::SingleCharger),
        ),
        (
            "type switch",
            violated(&built, &switch).iter().any(|f| {
                matches!(
                    f,
                    Family::SwitchUpper | Family::SwitchLower | Family::SwitchPair
                )
            }),
        ),
    ];
    let missed: Vec<&str> = planted.iter().filter(|p| !p.1).map(|p| p.0).collect();
    ensure(
        missed.is_empty(),
        format!("{incumbents} incumbents feasible; planted violations missed: {missed:?}"),
    )
}

fn gap_contract() -> Outcome {
    let mut solved = 0;
    let mut lines = 0;
    for seed in 0..60 {
        let built = build_model(&random_micro(seed));
        let sol = solve_milp(&built.model, &BnbParams::default(), LpBackend::Auto);
        if !sol.status.has_solution() {
            continue;
        }
        if sol.gap > 0.01 {
            return Err(format!("seed {seed}: gap {} above 1%", sol.gap));
        }
        for l in &sol.log {
            lines += 1;
            if l.incumbent.is_some_and(|inc| l.best_bound > inc) {
                return Err(format!(
                    "seed {seed} node {}: bound above incumbent",
                    l.node
                ));
            }
        }
        solved += 1;
    }
    ensure(
        solved >= 20,
        format!("{solved} solves within 1%, {lines} log lines with bound <= incumbent"),
    )
}

fn case_study_instance() -> ProblemInstance {
    generate_instance(&GeneratorConfig::default()).expect("case-study instance")
}

fn rule_counts() -> Outcome {
    let inst = case_study_instance();
    let rule = rule_design(&inst, None, Some(&CASE_STUDY_MIX), 0).map_err(|e| e.to_string())?;
    let kw = |counts: &[u32]| {
        let mut d = InfrastructureDesign::default();
        d.set(0, counts.to_vec());
        d.total_power_kw(&inst.chargers)
    };
    let got = (
        rule.total_chargers(),
        rule.total_power_kw(&inst.chargers),
        kw(&[0, 1, 5, 3, 1]),
        kw(&[0, 1, 5, 2, 0]),
    );
    ensure(
        got == (25, 4920.0, 5220.0, 3420.0),
        format!(
            "rule {} chargers {} kW, co-design rows {} kW and {} kW",
            got.0, got.1, got.2, got.3
        ),
    )
}

fn charger_budgets() -> Outcome {
    let a = CostDifference::from_weekly(4956.0, 1046.0);
    let b = CostDifference::from_weekly(4956.0, 131.0);
    let c = CostDifference::new(6002.0, 4956.0, 168.0);
    ensure(
        a.yearly == 54392.0 && b.yearly == 6812.0 && c.weekly == 1046.0 && c.yearly == 54392.0,
        format!(
            "1046 -> {}, 131 -> {}, simulated week -> {}",
            a.yearly, b.yearly, c.yearly
        ),
    )
}

fn zero_noise() -> Outcome {
    let inst = common::fleet(10, 3, 1);
    let t = Instant::now();
    let out = optimize(&inst, &common::heuristic_only()).map_err(|e| e.to_string())?;
    let peak = scheduled_peak(&inst, &out.schedule);
    let setup = SimSetup::new(&inst, &out.design, Policy::Schedule(&out.schedule))
        .with_contracted(peak.clone());
    let log = run_simulation(&setup, &Realization::nominal(&inst)).map_err(|e| e.to_string())?;
    let m =
        compute_run_metrics(&log, &MetricsContext::new(&inst, peak)).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let tau = inst.grid.tau();
    let worst = (0..inst.vehicles.len())
        .map(|k| {
            let plan: f64 = out
                .schedule
                .legs
                .iter()
                .filter(|l| l.leg.vehicle == k)
                .map(|l| l.session_energy(tau))
                .sum();
            (plan - m.charged_kwh[k]).abs()
        })
        .fold(0.0, f64::max);
    let cost_err = (m.energy_cost - out.costs.energy).abs() / out.costs.energy;
    ensure(
        worst <= 1e-6 && cost_err <= 1e-3 && m.mean_queue_min == 0.0 && m.failures == 0 && secs < 60.0,
        format!(
            "energy diff {worst:.1e} kWh, cost diff {:.1e}%, queue {} min, failures {}, {secs:.1} s",
            cost_err * 100.0,
            m.mean_queue_min,
            m.failures
        ),
    )
}

fn gate_invariant() -> Outcome {
    let inst = common::fleet(10, 3, 1);
    let out = optimize(&inst, &common::heuristic_only()).map_err(|e| e.to_string())?;
    let peak = scheduled_peak(&inst, &out.schedule);
    let cfg = StochasticConfig::uniform(0.05, 100, 2);
    let mut logs = 0;
    for policy in [Policy::Schedule(&out.schedule), Policy::Rule] {
        let setup = SimSetup::new(&inst, &out.design, policy).with_contracted(peak.clone());
        for run in 0..cfg.runs as u64 {
            let log = run_seeded(&setup, &cfg, run).map_err(|e| e.to_string())?;
            if let Some(p) = check_log(&log, &setup).first() {
                return Err(format!("run {run}: {p}"));
            }
            logs += 1;
        }
    }
    Ok(format!(
        "{logs} logs within contracted power and installed counts"
    ))
}

fn directional() -> Outcome {
    let inst = generate_instance(&GeneratorConfig::for_fleet(20, 7)).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        stochastic: StochasticConfig::uniform(0.05, 200, 0),
        optimize: common::heuristic_only(),
        ..ExperimentConfig::default()
    };
    let r = run_experiment(&inst, &cfg).map_err(|e| e.to_string())?;
    let row = |l: &str| r.row(l).ok_or_else(|| format!("no {l} row"));
    let (oo, or, rr) = (row("OO")?, row("OR")?, row("RR")?);
    let site = *r.contracted_kw.keys().next().ok_or("no contracted site")?;
    let above = |rep: &chargeplan::metrics::AggregateReport| {
        let j = rep
            .thresholds
            .iter()
            .position(|&d| d == 0.85)
            .expect("0.85 threshold");
        rep.utilization[&site][j].mean
    };
    let queue = oo.queue_min.mean < or.queue_min.mean && oo.queue_min.mean < rr.queue_min.mean;
    let cost = oo.energy_cost.mean < or.energy_cost.mean;
    let util = above(oo) < above(or);
    let mark = |b: bool| if b { "ok" } else { "NOT MET" };
    ensure(
        queue && cost && util,
        format!(
            "queue OO {:.1} < OR {:.1}, RR {:.1} min [{}]; energy OO {:.0} < OR {:.0} [{}]; time above 0.85 Pmax OO {:.3} < OR {:.3} [{}]",
            oo.queue_min.mean,
            or.queue_min.mean,
            rr.queue_min.mean,
            mark(queue),
            oo.energy_cost.mean,
            or.energy_cost.mean,
            mark(cost),
            above(oo),
            above(or),
            mark(util)
        ),
    )
}

fn determinism() -> Outcome {
    let inst = common::fleet(10, 3, 1);
    let cfg = ExperimentConfig {
        stochastic: StochasticConfig::uniform(0.05, 40, 9),
        optimize: common::heuristic_only(),
        ..ExperimentConfig::default()
    };
    let report = || -> Result<String, String> {
        let r = run_experiment(&inst, &cfg).map_err(|e| e.to_string())?;
        let reports: Vec<_> = r.rows.iter().filter_map(|row| row.report.clone()).collect();
        Ok(serde_json::to_string(&r).map_err(|e| e.to_string())? + &reports_table(&reports, &inst))
    };
    let a = report()?;
    let b = report()?;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?
        .install(report)?;
    ensure(
        a == b && a == single,
        format!(
            "{} bytes identical across repeats and thread counts",
            a.len()
        ),
    )
}

fn double_entry() -> Outcome {
    let inst = common::fleet(10, 3, 1);
    let out = optimize(&inst, &common::heuristic_only()).map_err(|e| e.to_string())?;
    let peak = scheduled_peak(&inst, &out.schedule);
    let ctx = MetricsContext::new(&inst, peak.clone());
    let cfg = StochasticConfig::uniform(0.05, 20, 4);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for policy in [Policy::Schedule(&out.schedule), Policy::Rule] {
        let setup = SimSetup::new(&inst, &out.design, policy).with_contracted(peak.clone());
        for run in 0..cfg.runs as u64 {
            let log = run_seeded(&setup, &cfg, run).map_err(|e| e.to_string())?;
            let a = compute_run_metrics(&log, &ctx).map_err(|e| e.to_string())?;
            let b = rescan_tsv(&log.to_tsv(), &ctx).map_err(|e| e.to_string())?;
            worst = worst.max(max_metric_difference(&a, &b));
            runs += 1;
        }
    }
    let agg = run_monte_carlo(&SimSetup::new(&inst, &out.design, Policy::Rule), &cfg, &ctx)
        .map(|r| aggregate("OR", &r, &ctx, None).runs)
        .map_err(|e| e.to_string())?;
    ensure(
        worst <= 1e-9 && agg == cfg.runs,
        format!("{runs} runs, largest field difference {worst:.1e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("feasibility suite", feasibility_suite),
        ("gap contract", gap_contract),
        ("rule design arithmetic", rule_counts),
        ("charger budget arithmetic", charger_budgets),
        ("zero-noise consistency", zero_noise),
        ("gate invariant", gate_invariant),
        ("directional replication", directional),
        ("determinism", determinism),
        ("metric double-entry", double_entry),
    ];
    let total = criteria.len();
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    let mut documented = KNOWN_UNMET.to_vec();
    documented.sort_unstable();
    failed.sort_unstable();
    if failed == documented {
        println!(
            "acceptance: {} of {} met, unmet as documented: {documented:?}",
            total - failed.len(),
            total
        );
    } else {
        eprintln!("acceptance: failures {failed:?} differ from the documented unmet criteria {documented:?}");
        std::process::exit(1);
    }
}
