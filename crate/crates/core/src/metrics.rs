//! Per-run metrics from event logs and their aggregation over Monte Carlo
//! runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::ProblemInstance;
use crate::error::{Error, Result};
use crate::sim::{EventLog, RecordKind};

/// Utilization thresholds reported by default, as fractions of the
/// contracted power.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.0, 0.5, 0.85, 1.0];

/// What the metrics need besides the log.
#[derive(Debug, Clone)]
pub struct MetricsContext<'a> {
    pub inst: &'a ProblemInstance,
    pub contracted: BTreeMap<usize, f64>,
    pub thresholds: Vec<f64>,
}

impl<'a> MetricsContext<'a> {
    pub fn new(inst: &'a ProblemInstance, contracted: BTreeMap<usize, f64>) -> Self {
        Self {
            inst,
            contracted,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Mean of actual minus planned arrival over driven legs; negative is
    /// early.
    pub mean_delay_min: f64,
    /// Mean charging time per charging instance (a truck charging before a
    /// leg, possibly over several sessions).
    pub mean_charge_min: f64,
    /// Mean queueing time per charging instance, gate retention included.
    pub mean_queue_min: f64,
    pub charging_instances: usize,
    pub failures: usize,
    /// Failures per driven leg.
    pub failure_probability: f64,
    pub energy_cost: f64,
    pub grid_energy_kwh: f64,
    /// Battery-side energy charged per truck.
    pub charged_kwh: Vec<f64>,
    /// Highest observed charger output per location, kW.
    pub peak_kw: BTreeMap<usize, f64>,
    /// Per contracted location, the fraction of the horizon with output
    /// above zero and at least `threshold * contracted`, one entry per
    /// threshold.
    pub utilization: BTreeMap<usize, Vec<f64>>,
    /// Mean output per location, slot and charger type, kW.
    pub power_curves: BTreeMap<usize, Vec<Vec<f64>>>,
}

/// Piecewise constant series, as (time, value) steps.
fn step_fraction(steps: &[(f64, f64)], horizon: f64, keep: impl Fn(f64) -> bool) -> f64 {
    let mut total = 0.0;
    for (i, &(t, v)) in steps.iter().enumerate() {
        let end = steps.get(i + 1).map_or(horizon, |s| s.0).min(horizon);
        let start = t.min(horizon);
        if end > start && keep(v) {
            total += end - start;
        }
    }
    total / horizon
}

struct Sessions {
    /// `(location, charger, kw, start, end)`.
    spans: Vec<(usize, usize, f64, f64, f64)>,
}

impl Sessions {
    fn energy_cost(&self, inst: &ProblemInstance) -> (f64, f64) {
        let tau = inst.grid.tau();
        let slots = inst.grid.slot_count as usize;
        let (mut cost, mut grid) = (0.0, 0.0);
        for &(loc, r, kw, a, b) in &self.spans {
            let draw = kw / inst.chargers[r].efficiency;
            grid += draw * (b - a);
            let mut s = (a / tau).floor() as usize;
            while (s as f64) * tau < b {
                let lo = a.max(s as f64 * tau);
                let hi = b.min((s + 1) as f64 * tau);
                if hi > lo {
                    cost += draw * (hi - lo) * inst.locations[loc].prices[s % slots];
                }
                s += 1;
            }
        }
        (cost, grid)
    }

    fn power_curves(&self, inst: &ProblemInstance) -> BTreeMap<usize, Vec<Vec<f64>>> {
        let tau = inst.grid.tau();
        let slots = inst.grid.slot_count as usize;
        let mut out: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for &(loc, r, kw, a, b) in &self.spans {
            let curve = out
                .entry(loc)
                .or_insert_with(|| vec![vec![0.0; inst.chargers.len()]; slots]);
            let mut s = (a / tau).floor() as usize;
            while s < slots && (s as f64) * tau < b {
                let lo = a.max(s as f64 * tau);
                let hi = b.min((s + 1) as f64 * tau);
                if hi > lo {
                    curve[s][r] += kw * (hi - lo) / tau;
                }
                s += 1;
            }
        }
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ctx: &MetricsContext<'_>,
    delays: (f64, usize),
    charge_h: f64,
    queue_h: f64,
    instances: usize,
    failures: usize,
    sessions: &Sessions,
    charged_kwh: Vec<f64>,
    power_steps: &BTreeMap<usize, Vec<(f64, f64)>>,
) -> RunMetrics {
    let (energy_cost, grid_energy_kwh) = sessions.energy_cost(ctx.inst);
    let horizon = ctx.inst.grid.horizon_hours();
    let per = |x: f64, n: usize| if n == 0 { 0.0 } else { x / n as f64 };
    let peak_kw = power_steps
        .iter()
        .map(|(&loc, steps)| (loc, steps.iter().fold(0.0, |m: f64, s| m.max(s.1))))
        .collect();
    let utilization = ctx
        .contracted
        .iter()
        .map(|(&loc, &pmax)| {
            let steps = power_steps.get(&loc).map_or(&[][..], |s| &s[..]);
            let u = ctx
                .thresholds
                .iter()
                .map(|&d| step_fraction(steps, horizon, |p| p > 0.0 && p >= d * pmax))
                .collect();
            (loc, u)
        })
        .collect();
    RunMetrics {
        mean_delay_min: per(delays.0, delays.1) * 60.0,
        mean_charge_min: per(charge_h, instances) * 60.0,
        mean_queue_min: per(queue_h, instances) * 60.0,
        charging_instances: instances,
        failures,
        failure_probability: per(failures as f64, delays.1),
        energy_cost,
        grid_energy_kwh,
        charged_kwh,
        peak_kw,
        utilization,
        power_curves: sessions.power_curves(ctx.inst),
    }
}

/// Computes the metrics of one run from its log.
pub fn compute_run_metrics(log: &EventLog, ctx: &MetricsContext<'_>) -> Result<RunMetrics> {
    let trucks = ctx.inst.vehicles.len();
    let mut delay = (0.0, 0usize);
    let mut failures = 0;
    let mut queue_h = 0.0;
    let mut charge_h = 0.0;
    let mut instances = BTreeSet::new();
    let mut open_queue: BTreeMap<usize, f64> = BTreeMap::new();
    let mut open_session: BTreeMap<usize, (usize, usize, f64, f64)> = BTreeMap::new();
    let mut spans = Vec::new();
    let mut charged = vec![0.0; trucks];
    let mut power: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut last_t = f64::NEG_INFINITY;

    for r in &log.records {
        if r.time_h < last_t {
            return Err(Error::Log(format!("time goes backwards at {}", r.time_h)));
        }
        last_t = r.time_h;
        let truck = || {
            r.truck
                .ok_or_else(|| Error::Log(format!("{} record without a truck", r.kind_name())))
        };
        match r.kind {
            RecordKind::Arrive { planned_h, .. } => {
                delay.0 += r.time_h - planned_h;
                delay.1 += 1;
            }
            RecordKind::Failure { .. } => failures += 1,
            RecordKind::QueueEnter { .. } => {
                if open_queue.insert(truck()?, r.time_h).is_some() {
                    return Err(Error::Log(format!("truck queues twice at {}", r.time_h)));
                }
            }
            RecordKind::QueueExit { .. } => {
                let since = open_queue.remove(&truck()?).ok_or_else(|| {
                    Error::Log(format!("queue exit without entry at {}", r.time_h))
                })?;
                queue_h += r.time_h - since;
            }
            RecordKind::SessionStart { charger, kw } => {
                let k = truck()?;
                instances.insert((k, r.leg));
                if open_session
                    .insert(k, (r.location, charger, kw, r.time_h))
                    .is_some()
                {
                    return Err(Error::Log(format!("overlapping sessions of truck {k}")));
                }
            }
            RecordKind::SessionEnd { kwh, .. } => {
                let k = truck()?;
                let (loc, charger, kw, start) = open_session.remove(&k).ok_or_else(|| {
                    Error::Log(format!(
                        "session end without start for truck {k} at {}",
                        r.time_h
                    ))
                })?;
                charge_h += r.time_h - start;
                spans.push((loc, charger, kw, start, r.time_h));
                *charged
                    .get_mut(k)
                    .ok_or_else(|| Error::Log(format!("unknown truck {k}")))? += kwh;
            }
            RecordKind::Power { kw } => {
                let steps = power.entry(r.location).or_default();
                match steps.last_mut() {
                    Some(last) if last.0 == r.time_h => last.1 = kw,
                    _ => steps.push((r.time_h, kw)),
                }
            }
            RecordKind::State(_) | RecordKind::Depart { .. } => {}
        }
    }
    if let Some((k, _)) = open_session.iter().next() {
        return Err(Error::Log(format!("session of truck {k} never ends")));
    }
    if let Some((k, _)) = open_queue.iter().next() {
        return Err(Error::Log(format!("truck {k} never leaves the queue")));
    }
    Ok(finish(
        ctx,
        delay,
        charge_h,
        queue_h,
        instances.len(),
        failures,
        &Sessions { spans },
        charged,
        &power,
    ))
}

/// Second implementation over the text form of the log, for cross-checks.
pub fn rescan_tsv(text: &str, ctx: &MetricsContext<'_>) -> Result<RunMetrics> {
    let bad = |n: usize, what: &str| Error::Log(format!("line {n}: {what}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == crate::sim::LOG_HEADER => {}
        _ => return Err(Error::Log("missing header".into())),
    }
    let trucks = ctx.inst.vehicles.len();
    let mut arrivals = Vec::new();
    let mut failures = 0usize;
    let mut queue_enter: Vec<Option<f64>> = vec![None; trucks];
    let mut queue_waits = Vec::new();
    let mut starts: Vec<Option<(f64, String)>> = vec![None; trucks];
    let mut spans = Vec::new();
    let mut durations = Vec::new();
    let mut charged = vec![0.0; trucks];
    let mut instances: Vec<(usize, String)> = Vec::new();
    let mut power: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();

    for (i, line) in lines {
        let n = i + 1;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(bad(n, "expected 10 fields"));
        }
        let num = |j: usize| f[j].parse::<f64>().map_err(|_| bad(n, "bad number"));
        let idx = |j: usize| f[j].parse::<usize>().map_err(|_| bad(n, "bad index"));
        let t = num(0)?;
        match f[1] {
            "arrive" => arrivals.push(t - num(8)?),
            "failure" => failures += 1,
            "queue_enter" => queue_enter[idx(2)?] = Some(t),
            "queue_exit" => {
                let since = queue_enter[idx(2)?]
                    .take()
                    .ok_or_else(|| bad(n, "exit before entry"))?;
                queue_waits.push(t - since);
            }
            "session_start" => {
                let k = idx(2)?;
                starts[k] = Some((t, f[3].to_string()));
                if !instances.iter().any(|(a, b)| *a == k && b == f[3]) {
                    instances.push((k, f[3].to_string()));
                }
            }
            "session_end" => {
                let k = idx(2)?;
                let (s, _) = starts[k].take().ok_or_else(|| bad(n, "end before start"))?;
                durations.push(t - s);
                spans.push((idx(4)?, idx(5)?, num(6)?, s, t));
                charged[k] += num(7)?;
            }
            "power" => {
                let steps = power.entry(idx(4)?).or_default();
                let kw = num(6)?;
                if steps.last().is_some_and(|l| l.0 == t) {
                    steps.pop();
                }
                steps.push((t, kw));
            }
            "state" | "depart" => {}
            other => return Err(bad(n, &format!("unknown kind {other}"))),
        }
    }
    if starts.iter().any(Option::is_some) {
        return Err(Error::Log("unmatched session start".into()));
    }
    if queue_enter.iter().any(Option::is_some) {
        return Err(Error::Log("unmatched queue entry".into()));
    }
    Ok(finish(
        ctx,
        (arrivals.iter().sum(), arrivals.len()),
        durations.iter().sum(),
        queue_waits.iter().sum(),
        instances.len(),
        failures,
        &Sessions { spans },
        charged,
        &power,
    ))
}

/// Largest absolute difference between two metric sets, over every field.
pub fn max_metric_difference(a: &RunMetrics, b: &RunMetrics) -> f64 {
    fn flat(m: &RunMetrics) -> Vec<f64> {
        let mut v = vec![
            m.mean_delay_min,
            m.mean_charge_min,
            m.mean_queue_min,
            m.charging_instances as f64,
            m.failures as f64,
            m.failure_probability,
            m.energy_cost,
            m.grid_energy_kwh,
        ];
        v.extend(&m.charged_kwh);
        for (&k, &p) in &m.peak_kw {
            v.extend([k as f64, p]);
        }
        for (&k, u) in &m.utilization {
            v.push(k as f64);
            v.extend(u);
        }
        for (&k, c) in &m.power_curves {
            v.push(k as f64);
            v.extend(c.iter().flatten());
        }
        v
    }
    let (x, y) = (flat(a), flat(b));
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter()
        .zip(&y)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Unbiased sample standard deviation; zero for a single run.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Energy cost difference between simulation and plan, per week and year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostDifference {
    pub planned: f64,
    pub weekly: f64,
    pub yearly: f64,
}

impl CostDifference {
    /// Scales a difference observed over `horizon_h` hours to a week.
    pub fn new(simulated: f64, planned: f64, horizon_h: f64) -> Self {
        Self::from_weekly(planned, (simulated - planned) * 168.0 / horizon_h)
    }

    pub fn from_weekly(planned: f64, weekly: f64) -> Self {
        Self {
            planned,
            weekly,
            yearly: 52.0 * weekly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub label: String,
    pub runs: usize,
    pub delay_min: MeanSd,
    pub charge_min: MeanSd,
    pub queue_min: MeanSd,
    pub failures: MeanSd,
    pub failure_probability: MeanSd,
    pub energy_cost: MeanSd,
    pub grid_energy_kwh: MeanSd,
    pub peak_kw: BTreeMap<usize, MeanSd>,
    pub thresholds: Vec<f64>,
    pub utilization: BTreeMap<usize, Vec<MeanSd>>,
    pub contracted_kw: BTreeMap<usize, f64>,
    pub cost_difference: Option<CostDifference>,
    /// Mean output per location, slot and charger type over all runs.
    #[serde(skip)]
    pub power_curves: BTreeMap<usize, Vec<Vec<f64>>>,
}

/// Summarizes `runs`; `planned_energy_cost` is the optimizer's energy cost
/// for the same horizon, when there is one.
pub fn aggregate(
    label: &str,
    runs: &[RunMetrics],
    ctx: &MetricsContext<'_>,
    planned_energy_cost: Option<f64>,
) -> AggregateReport {
    let stat = |f: &dyn Fn(&RunMetrics) -> f64| MeanSd::of(runs.iter().map(f));
    let locations: BTreeSet<usize> = runs
        .iter()
        .flat_map(|r| r.peak_kw.keys().copied())
        .collect();
    let peak_kw = locations
        .iter()
        .map(|&l| (l, stat(&|r| r.peak_kw.get(&l).copied().unwrap_or(0.0))))
        .collect();
    let utilization = ctx
        .contracted
        .keys()
        .map(|&l| {
            let per = (0..ctx.thresholds.len())
                .map(|j| stat(&|r| r.utilization.get(&l).map_or(0.0, |u| u[j])))
                .collect();
            (l, per)
        })
        .collect();
    let mut power_curves: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for r in runs {
        for (&loc, curve) in &r.power_curves {
            let acc = power_curves
                .entry(loc)
                .or_insert_with(|| vec![vec![0.0; ctx.inst.chargers.len()]; curve.len()]);
            for (a, c) in acc.iter_mut().zip(curve) {
                for (x, y) in a.iter_mut().zip(c) {
                    *x += y / runs.len() as f64;
                }
            }
        }
    }
    let energy_cost = stat(&|r| r.energy_cost);
    AggregateReport {
        label: label.to_string(),
        runs: runs.len(),
        delay_min: stat(&|r| r.mean_delay_min),
        charge_min: stat(&|r| r.mean_charge_min),
        queue_min: stat(&|r| r.mean_queue_min),
        failures: stat(&|r| r.failures as f64),
        failure_probability: stat(&|r| r.failure_probability),
        energy_cost,
        grid_energy_kwh: stat(&|r| r.grid_energy_kwh),
        peak_kw,
        thresholds: ctx.thresholds.clone(),
        utilization,
        contracted_kw: ctx.contracted.clone(),
        cost_difference: planned_energy_cost
            .map(|p| CostDifference::new(energy_cost.mean, p, ctx.inst.grid.horizon_hours())),
        power_curves,
    }
}

impl AggregateReport {
    /// One `label metric mean sd` row per metric.
    pub fn table_rows(&self, inst: &ProblemInstance) -> Vec<(String, f64, f64)> {
        let mut rows = vec![
            ("delay_min".to_string(), self.delay_min),
            ("charge_min".to_string(), self.charge_min),
            ("queue_min".to_string(), self.queue_min),
            ("failures".to_string(), self.failures),
            ("failure_probability".to_string(), self.failure_probability),
            ("energy_cost".to_string(), self.energy_cost),
            ("grid_energy_kwh".to_string(), self.grid_energy_kwh),
        ];
        for (&l, s) in &self.peak_kw {
            rows.push((format!("peak_kw[{}]", inst.locations[l].id), *s));
        }
        for (&l, u) in &self.utilization {
            for (d, s) in self.thresholds.iter().zip(u) {
                rows.push((format!("utilization[{}][{d}]", inst.locations[l].id), *s));
            }
        }
        let mut out: Vec<(String, f64, f64)> =
            rows.into_iter().map(|(n, s)| (n, s.mean, s.sd)).collect();
        if let Some(d) = self.cost_difference {
            out.push(("energy_cost_planned".into(), d.planned, 0.0));
            out.push(("cost_difference_weekly".into(), d.weekly, 0.0));
            out.push(("cost_difference_yearly".into(), d.yearly, 0.0));
        }
        out
    }
}

pub const TABLE_HEADER: &str = "experiment\tmetric\tmean\tsd";

/// Flat table over several reports.
pub fn reports_table(reports: &[AggregateReport], inst: &ProblemInstance) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in reports {
        for (metric, mean, sd) in r.table_rows(inst) {
            let _ = writeln!(out, "{}\t{metric}\t{mean}\t{sd}", r.label);
        }
    }
    out
}

/// Slot-by-type power table of a report: `location slot start type... total`.
pub fn power_curves_table(report: &AggregateReport, inst: &ProblemInstance) -> String {
    let mut out = String::from("location\tslot\tstart");
    for c in &inst.chargers {
        let _ = write!(out, "\t{}", c.id);
    }
    out.push_str("\ttotal\n");
    for (&loc, curve) in &report.power_curves {
        for (s, row) in curve.iter().enumerate() {
            let _ = write!(
                out,
                "{}\t{s}\t{}",
                inst.locations[loc].id,
                inst.grid.slot_timestamp(s as u32).format("%Y-%m-%dT%H:%M")
            );
            for p in row {
                let _ = write!(out, "\t{p}");
            }
            let _ = writeln!(out, "\t{}", row.iter().sum::<f64>());
        }
    }
    out
}
