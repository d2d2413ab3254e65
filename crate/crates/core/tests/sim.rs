mod common;

use std::collections::BTreeMap;

use chargeplan::domain::OptimizationParams;
use chargeplan::experiment::scheduled_peak;
use chargeplan::fixtures::{charger, micro_instance, MicroLeg, MicroVehicle, DEPOT, SHOP};
use chargeplan::metrics::{
    aggregate, compute_run_metrics, max_metric_difference, rescan_tsv, MetricsContext,
};
use chargeplan::milp::{optimize, InfrastructureDesign, Optimized};
use chargeplan::sim::{
    check_log, run_monte_carlo, run_seeded, run_simulation, EventLog, Policy, Realization,
    RecordKind, SimSetup, StochasticConfig,
};

fn planned() -> (chargeplan::domain::ProblemInstance, Optimized) {
    let inst = common::fleet(10, 3, 1);
    let out = optimize(&inst, &common::heuristic_only()).unwrap();
    (inst, out)
}

fn sessions(log: &EventLog, truck: usize) -> Vec<(f64, f64)> {
    let mut starts = Vec::new();
    let mut out = Vec::new();
    for r in &log.records {
        if r.truck != Some(truck) {
            continue;
        }
        match r.kind {
            RecordKind::SessionStart { .. } => starts.push(r.time_h),
            RecordKind::SessionEnd { .. } => out.push((starts.pop().unwrap(), r.time_h)),
            _ => {}
        }
    }
    out
}

#[test]
fn zero_noise_schedule_reproduces_the_plan() {
    let (inst, out) = planned();
    let peak = scheduled_peak(&inst, &out.schedule);
    let setup = SimSetup::new(&inst, &out.design, Policy::Schedule(&out.schedule))
        .with_contracted(peak.clone());
    let log = run_simulation(&setup, &Realization::nominal(&inst)).unwrap();
    assert!(check_log(&log, &setup).is_empty());
    let ctx = MetricsContext::new(&inst, peak);
    let m = compute_run_metrics(&log, &ctx).unwrap();
    let tau = inst.grid.tau();
    for k in 0..inst.vehicles.len() {
        let plan: f64 = out
            .schedule
            .legs
            .iter()
            .filter(|l| l.leg.vehicle == k)
            .map(|l| l.session_energy(tau))
            .sum();
        assert!(
            (plan - m.charged_kwh[k]).abs() < 1e-6,
            "truck {k}: {plan} vs {}",
            m.charged_kwh[k]
        );
    }
    assert!((m.energy_cost - out.costs.energy).abs() <= 1e-3 * out.costs.energy);
    assert_eq!(m.mean_queue_min, 0.0);
    assert_eq!(m.failures, 0);
}

#[test]
fn rule_policy_never_departs_early() {
    let (inst, out) = planned();
    let setup = SimSetup::new(&inst, &out.design, Policy::Rule);
    let log = run_simulation(&setup, &Realization::nominal(&inst)).unwrap();
    let tau = inst.grid.tau();
    let mut departures = 0;
    for r in &log.records {
        if let (RecordKind::Depart { .. }, Some(k), Some(l)) = (&r.kind, r.truck, r.leg) {
            let earliest = f64::from(inst.vehicles[k].itinerary[l].dep_earliest) * tau;
            assert!(
                r.time_h >= earliest - 1e-9,
                "truck {k} leg {l} left at {} before {earliest}",
                r.time_h
            );
            departures += 1;
        }
    }
    assert_eq!(departures, inst.leg_count());
}

#[test]
fn gate_and_charger_counts_hold_under_noise() {
    let (inst, out) = planned();
    let peak = scheduled_peak(&inst, &out.schedule);
    let cfg = StochasticConfig::uniform(0.05, 100, 11);
    for policy in [Policy::Schedule(&out.schedule), Policy::Rule] {
        let setup = SimSetup::new(&inst, &out.design, policy).with_contracted(peak.clone());
        for run in 0..cfg.runs as u64 {
            let log = run_seeded(&setup, &cfg, run).unwrap();
            let problems = check_log(&log, &setup);
            assert!(problems.is_empty(), "run {run}: {problems:?}");
        }
    }
}

#[test]
fn reports_are_byte_identical_across_repeats() {
    let (inst, out) = planned();
    let peak = scheduled_peak(&inst, &out.schedule);
    let cfg = StochasticConfig::uniform(0.05, 40, 5);
    let ctx = MetricsContext::new(&inst, peak.clone());
    let report = || {
        let setup = SimSetup::new(&inst, &out.design, Policy::Rule).with_contracted(peak.clone());
        let runs = run_monte_carlo(&setup, &cfg, &ctx).unwrap();
        let tsv = run_seeded(&setup, &cfg, 7).unwrap().to_tsv();
        (
            serde_json::to_string(&aggregate("OR", &runs, &ctx, None)).unwrap(),
            tsv,
        )
    };
    assert_eq!(report(), report());
}

#[test]
fn rescanned_log_reproduces_metrics() {
    let (inst, out) = planned();
    let peak = scheduled_peak(&inst, &out.schedule);
    let ctx = MetricsContext::new(&inst, peak.clone());
    let cfg = StochasticConfig::uniform(0.05, 10, 3);
    for policy in [Policy::Schedule(&out.schedule), Policy::Rule] {
        let setup = SimSetup::new(&inst, &out.design, policy).with_contracted(peak.clone());
        for run in 0..cfg.runs as u64 {
            let log = run_seeded(&setup, &cfg, run).unwrap();
            let a = compute_run_metrics(&log, &ctx).unwrap();
            let b = rescan_tsv(&log.to_tsv(), &ctx).unwrap();
            assert!(max_metric_difference(&a, &b) <= 1e-9);
        }
    }
}

/// Truck 2 occupies the only charger from time zero; truck 1 returns from
/// the shop before truck 0 and must be served first.
fn queue_micro() -> chargeplan::domain::ProblemInstance {
    let vehicle = |legs| MicroVehicle {
        battery_kwh: 100.0,
        min_energy_kwh: 5.0,
        soc_boundary: 0.2,
        legs,
    };
    let out_and_back = |start| {
        vec![
            MicroLeg::new(SHOP, DEPOT, 5.0, (start, start), (start + 1, start + 1)),
            MicroLeg::new(DEPOT, SHOP, 30.0, (10, 12), (11, 13)),
        ]
    };
    micro_instance(
        16,
        vec![charger("ac60", 60.0, 0.98, 0.08)],
        vec![0.1; 16],
        false,
        vec![
            vehicle(out_and_back(2)),
            vehicle(out_and_back(0)),
            vehicle(vec![MicroLeg::new(DEPOT, SHOP, 80.0, (6, 8), (7, 9))]),
        ],
        OptimizationParams::with_slot_minutes(15),
    )
}

#[test]
fn queue_is_first_come_first_served() {
    let inst = queue_micro();
    let mut design = InfrastructureDesign::default();
    design.set(DEPOT, vec![1]);
    let setup = SimSetup::new(&inst, &design, Policy::Rule);
    let log = run_simulation(&setup, &Realization::nominal(&inst)).unwrap();
    let s2 = sessions(&log, 2);
    let s1 = sessions(&log, 1);
    let s0 = sessions(&log, 0);
    assert_eq!(s2.len(), 1);
    assert!((s2[0].1 - 65.0 / 60.0).abs() < 1e-9);
    assert!((s1[0].0 - s2[0].1).abs() < 1e-9, "{s1:?} {s2:?}");
    assert!((s0[0].0 - s1[0].1).abs() < 1e-9, "{s0:?} {s1:?}");
    let entered: Vec<usize> = log
        .records
        .iter()
        .filter(|r| matches!(r.kind, RecordKind::QueueEnter { .. }))
        .filter_map(|r| r.truck)
        .collect();
    assert_eq!(entered, vec![2, 1, 0]);
}

#[test]
fn late_leg_shifts_arrival_by_the_delay() {
    let inst = queue_micro();
    let mut design = InfrastructureDesign::default();
    design.set(DEPOT, vec![1]);
    let setup = SimSetup::new(&inst, &design, Policy::Rule);
    let arrival = |noise: &Realization| {
        let log = run_simulation(&setup, noise).unwrap();
        let r = log
            .records
            .iter()
            .find(|r| r.truck == Some(2) && matches!(r.kind, RecordKind::Arrive { .. }))
            .unwrap()
            .clone();
        let ctx = MetricsContext::new(&inst, BTreeMap::new());
        (r, compute_run_metrics(&log, &ctx).unwrap())
    };
    let nominal = Realization::nominal(&inst);
    let mut late = nominal.clone();
    late.legs[2][0].travel_h += 5.0 / 60.0;
    let (a, ma) = arrival(&nominal);
    let (b, mb) = arrival(&late);
    assert!((b.time_h - a.time_h - 5.0 / 60.0).abs() < 1e-12);
    let (RecordKind::Arrive { planned_h: pa, .. }, RecordKind::Arrive { planned_h: pb, .. }) =
        (a.kind, b.kind)
    else {
        unreachable!()
    };
    assert_eq!(pa, pb);
    let arrivals = inst.leg_count() as f64;
    assert!((mb.mean_delay_min - ma.mean_delay_min - 5.0 / arrivals).abs() < 1e-9);
}
