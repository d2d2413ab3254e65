//! Greedy construction of feasible designs and schedules.
//!
//! Vehicles are planned one at a time against the charger use and site load
//! of the vehicles already placed. Before each leg that can charge, the
//! vehicle takes just enough energy to reach the next charging opportunity,
//! with a look-ahead that charges more when later opportunities are too
//! short. Each session uses one charger type and picks its slots one by one
//! by marginal cost: energy price, extra chargers and extra peak power.
//! After the first pass every vehicle is ripped up and re-planned against
//! the others while that lowers the total cost.
//!
//! The result is a feasible point of the model built from the same
//! instance, used as the first incumbent of branch-and-bound.

use std::collections::BTreeMap;

use super::builder::BuiltModel;
use super::extract::InfrastructureDesign;
use crate::domain::{LegRef, ProblemInstance};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct PlanOptions {
    /// Rip-up and re-plan passes after the first placement.
    pub improvement_rounds: usize,
    /// Charger counts to respect; `None` lets the plan size the design.
    pub design: Option<InfrastructureDesign>,
    /// Energy to hold after charging before a leg, usually read off an LP
    /// relaxation. The plan charges at least this much when it can.
    pub targets: BTreeMap<LegRef, f64>,
}

impl PlanOptions {
    pub fn new() -> Self {
        Self {
            improvement_rounds: 2,
            design: None,
            targets: BTreeMap::new(),
        }
    }

    pub fn with_design(design: InfrastructureDesign) -> Self {
        Self {
            design: Some(design),
            ..Self::new()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegPlan {
    pub leg: LegRef,
    /// `(slot, charger type, battery-side kW)` in slot order.
    pub sessions: Vec<(u32, usize, f64)>,
    pub departure: f64,
    pub arrival: f64,
    pub energy_dep: f64,
    pub energy_char: f64,
    pub energy_arr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    LookAhead,
    Full,
}

/// Charger use and rated load per charger site.
#[derive(Debug, Clone)]
struct Usage {
    slots: usize,
    types: usize,
    /// `site -> count[r * slots + t]`.
    count: BTreeMap<usize, Vec<u32>>,
    /// `site -> rated kW per slot`.
    load: BTreeMap<usize, Vec<f64>>,
}

impl Usage {
    fn new(inst: &ProblemInstance) -> Self {
        let slots = inst.grid.slot_count as usize;
        let types = inst.chargers.len();
        let mut count = BTreeMap::new();
        let mut load = BTreeMap::new();
        for site in inst.charger_sites() {
            count.insert(site, vec![0; slots * types]);
            load.insert(site, vec![0.0; slots]);
        }
        Self {
            slots,
            types,
            count,
            load,
        }
    }

    fn count(&self, site: usize, r: usize, t: u32) -> u32 {
        self.count[&site][r * self.slots + t as usize]
    }

    fn max_count(&self, site: usize, r: usize) -> u32 {
        self.count[&site][r * self.slots..(r + 1) * self.slots]
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }

    fn peak(&self, site: usize) -> f64 {
        self.load[&site].iter().copied().fold(0.0, f64::max)
    }

    fn apply(&mut self, inst: &ProblemInstance, site: usize, legs: &[LegPlan], sign: i32) {
        let count = self.count.get_mut(&site).expect("charger site");
        let load = self.load.get_mut(&site).expect("charger site");
        for &(t, r, _) in legs.iter().flat_map(|l| &l.sessions) {
            let c = &mut count[r * self.slots + t as usize];
            *c = c
                .checked_add_signed(sign)
                .expect("usage stays non-negative");
            load[t as usize] += f64::from(sign) * inst.chargers[r].power_kw;
        }
        if sign < 0 {
            for v in load.iter_mut() {
                if v.abs() < 1e-6 {
                    *v = 0.0;
                }
            }
        }
    }

    fn add_vehicle(&mut self, inst: &ProblemInstance, plan: &[LegPlan], sign: i32) {
        for l in plan {
            if !l.sessions.is_empty() {
                let site = inst.leg(l.leg).origin;
                self.apply(inst, site, std::slice::from_ref(l), sign);
            }
        }
    }

    fn design(&self) -> InfrastructureDesign {
        let mut d = InfrastructureDesign::default();
        for &site in self.count.keys() {
            d.set(
                site,
                (0..self.types).map(|r| self.max_count(site, r)).collect(),
            );
        }
        d
    }
}

/// A complete greedy plan.
#[derive(Debug, Clone)]
pub struct GreedyPlan {
    /// Per vehicle, per leg.
    pub vehicles: Vec<Vec<LegPlan>>,
    pub design: InfrastructureDesign,
    /// Highest rated charger load per charger site, in kW.
    pub peak_kw: BTreeMap<usize, f64>,
    pub objective: f64,
}

impl GreedyPlan {
    /// Values for every variable of `built`, which must come from the same
    /// instance. Charger counts take the plan's design.
    pub fn to_values(&self, inst: &ProblemInstance, built: &BuiltModel) -> Vec<f64> {
        let mut x = vec![0.0; built.model.num_vars()];
        for lv in &built.legs {
            let p = &self.vehicles[lv.leg.vehicle][lv.leg.leg];
            x[lv.departure] = p.departure;
            x[lv.arrival] = p.arrival;
            x[lv.energy_dep] = p.energy_dep;
            x[lv.energy_char] = p.energy_char;
            x[lv.energy_arr] = p.energy_arr;
            let mut on = vec![None; lv.power.len()];
            for &(t, r, kw) in &p.sessions {
                let s = (t - lv.window.first) as usize;
                x[lv.power[s]] = kw;
                x[lv.choice[s][r]] = 1.0;
                x[lv.type_power[s][r]] = kw;
                on[s] = Some(r);
            }
            for s in 1..on.len() {
                match (on[s - 1], on[s]) {
                    (Some(_), None) => x[lv.switch_off[s - 1]] = 1.0,
                    (None, Some(_)) => x[lv.switch_on[s - 1]] = 1.0,
                    _ => {}
                }
            }
        }
        for (&(site, r), &v) in &built.charger_counts {
            x[v] = f64::from(self.design.count(site, r));
        }
        for (&site, &v) in &built.peak_costs {
            x[v] = inst.locations[site].peak_cost_rate
                * self.peak_kw.get(&site).copied().unwrap_or(0.0);
        }
        x
    }
}

/// Per-leg data the planner needs, independent of any built model.
struct LegInfo {
    site: Option<usize>,
    first: u32,
    last: u32,
    cons: f64,
}

fn leg_infos(inst: &ProblemInstance, k: usize) -> Vec<LegInfo> {
    (0..inst.vehicles[k].itinerary.len())
        .map(|l| {
            let r = LegRef { vehicle: k, leg: l };
            let w = inst.charging_window(r);
            let site = (inst.can_charge_before(r) && !inst.chargers.is_empty() && !w.is_empty())
                .then(|| inst.leg(r).origin);
            LegInfo {
                site,
                first: w.first,
                last: w.last,
                cons: inst.leg_energy(r),
            }
        })
        .collect()
}

struct Costs<'a> {
    inst: &'a ProblemInstance,
    /// Charger limits per site and type when a design is imposed.
    caps: Option<&'a InfrastructureDesign>,
    targets: Option<&'a BTreeMap<LegRef, f64>>,
}

impl Costs<'_> {
    fn allowed(&self, site: usize, r: usize) -> bool {
        self.caps.is_none_or(|d| d.count(site, r) > 0)
    }

    fn slot_free(&self, usage: &Usage, extra: u32, site: usize, r: usize, t: u32) -> bool {
        self.caps
            .is_none_or(|d| usage.count(site, r, t) + extra < d.count(site, r))
    }
}

/// Picks slots for one session of `amount` kWh on type `r`; returns the
/// slots with their marginal cost, or `None` when `r` cannot deliver it.
fn pick_slots(
    costs: &Costs,
    usage: &Usage,
    site: usize,
    r: usize,
    valid: &[u32],
    amount: f64,
) -> Option<(Vec<u32>, f64)> {
    let inst = costs.inst;
    let p = &inst.params;
    let tau = inst.grid.tau();
    let ch = &inst.chargers[r];
    let need = (amount / (tau * ch.power_kw) - EPS).ceil().max(1.0) as usize;
    let rate = inst.locations[site].peak_cost_rate;
    let mut x_cur = usage.max_count(site, r);
    let mut peak_cur = usage.peak(site);
    let mut chosen: Vec<u32> = Vec::with_capacity(need);
    let mut total = 0.0;
    let load = &usage.load[&site];
    while chosen.len() < need {
        let mut best: Option<(u32, f64)> = None;
        for &t in valid {
            if chosen.contains(&t) || !costs.slot_free(usage, 0, site, r, t) {
                continue;
            }
            let mut c = p.gamma_energy * tau * inst.price(site, t) * ch.power_kw / ch.efficiency;
            if usage.count(site, r, t) + 1 > x_cur {
                c += ch.capital_cost;
            }
            let new_load = load[t as usize] + ch.power_kw;
            if new_load > peak_cur {
                c += p.alpha_peak * rate * (new_load - peak_cur);
            }
            if best.is_none_or(|(_, b)| c < b - EPS) {
                best = Some((t, c));
            }
        }
        let (t, c) = best?;
        x_cur = x_cur.max(usage.count(site, r, t) + 1);
        peak_cur = peak_cur.max(load[t as usize] + ch.power_kw);
        total += c;
        chosen.push(t);
    }
    chosen.sort_unstable();
    Some((chosen, total))
}

/// Battery-side power per chosen slot delivering `amount`, cheapest slots
/// at full power first.
fn fill_power(
    inst: &ProblemInstance,
    site: usize,
    r: usize,
    slots: &[u32],
    amount: f64,
) -> Vec<(u32, usize, f64)> {
    let tau = inst.grid.tau();
    let cap = inst.chargers[r].power_kw;
    let mut order: Vec<u32> = slots.to_vec();
    order.sort_by(|&a, &b| {
        inst.price(site, a)
            .total_cmp(&inst.price(site, b))
            .then(a.cmp(&b))
    });
    let mut left = amount;
    let mut out = Vec::new();
    for t in order {
        let kw = (left / tau).min(cap);
        if kw <= EPS {
            break;
        }
        left -= kw * tau;
        out.push((t, r, kw));
    }
    out.sort_by_key(|s| s.0);
    out
}

/// Plans one vehicle against the current usage.
fn plan_vehicle(
    inst: &ProblemInstance,
    k: usize,
    costs: &Costs,
    usage: &Usage,
    mode: Mode,
) -> Option<Vec<LegPlan>> {
    let v = &inst.vehicles[k];
    let it = &v.itinerary;
    let tau = inst.grid.tau();
    let beta = inst.params.beta_slack;
    let (emax, emin) = (v.battery_kwh, v.min_energy_kwh);
    let boundary = v.boundary_energy();
    let infos = leg_infos(inst, k);
    let n = infos.len();

    // Latest departure per leg that keeps every later leg on time.
    let mut latest = vec![0.0; n];
    for l in (0..n).rev() {
        let own = f64::from(it[l].dep_latest) + beta;
        latest[l] = if l + 1 < n {
            let after = (it[l].travel_h + it[l].load_h + it[l].unload_h) / tau + beta;
            own.min(latest[l + 1] - after)
        } else {
            own
        };
    }

    // Nominal ready time per leg from earliest departures, for look-ahead
    // capacities only.
    let fastest = |site: usize| {
        inst.chargers
            .iter()
            .enumerate()
            .filter(|&(r, _)| costs.allowed(site, r))
            .map(|(_, c)| c.power_kw)
            .fold(0.0, f64::max)
    };
    let nominal_cap = |l: usize| -> f64 {
        let info = &infos[l];
        let Some(site) = info.site else { return 0.0 };
        let ready = if l == 0 {
            0.0
        } else {
            let p = &it[l - 1];
            f64::from(p.dep_earliest) + (p.travel_h + p.unload_h + p.load_h) / tau
        };
        let hi = (latest[l] - 1.0 + EPS).floor().min(f64::from(info.last));
        let lo = ready.ceil().max(f64::from(info.first));
        (hi - lo + 1.0).max(0.0) * tau * fastest(site)
    };

    // Energy wanted after charging before each leg.
    let mut level = vec![0.0; n];
    let mut arrive_need = boundary;
    let mut run = 0.0;
    for l in (0..n).rev() {
        run += infos[l].cons;
        if infos[l].site.is_some() {
            level[l] = match mode {
                Mode::Full => emax,
                Mode::LookAhead => {
                    let target = costs
                        .targets
                        .and_then(|t| t.get(&LegRef { vehicle: k, leg: l }))
                        .copied()
                        .unwrap_or(0.0);
                    (run + arrive_need.max(emin)).max(target).min(emax)
                }
            };
            arrive_need = level[l] - nominal_cap(l);
            run = 0.0;
        }
    }

    let mut out = Vec::with_capacity(n);
    let mut energy = boundary;
    let mut prev_dep = 0.0;
    let mut prev_arr = 0.0;
    for (l, leg) in it.iter().enumerate() {
        let info = &infos[l];
        let ready = if l == 0 {
            0.0
        } else {
            let p = &it[l - 1];
            prev_dep + (p.travel_h + p.unload_h + p.load_h) / tau
        };
        let mut dep = f64::from(leg.dep_earliest);
        if l > 0 {
            let p = &it[l - 1];
            dep = dep.max(prev_arr + (p.load_h + p.unload_h) / tau);
        }
        let dep_cap = latest[l];
        if dep > dep_cap + EPS {
            return None;
        }

        let mut sessions = Vec::new();
        let mut charged = 0.0;
        if let Some(site) = info.site {
            let amount = (level[l] - energy).min(emax - energy).max(0.0);
            if amount > EPS {
                let valid: Vec<u32> = (info.first..=info.last)
                    .filter(|&t| f64::from(t) + EPS >= ready && f64::from(t) + 1.0 <= dep_cap + EPS)
                    .collect();
                let mut best: Option<(usize, Vec<u32>, f64)> = None;
                for r in (0..inst.chargers.len()).filter(|&r| costs.allowed(site, r)) {
                    if let Some((slots, c)) = pick_slots(costs, usage, site, r, &valid, amount) {
                        let c = if mode == Mode::Full {
                            -inst.chargers[r].power_kw
                        } else {
                            c
                        };
                        if best.as_ref().is_none_or(|b| c < b.2 - EPS) {
                            best = Some((r, slots, c));
                        }
                    }
                }
                let (r, slots, deliver) = match best {
                    Some((r, slots, _)) => (r, slots, amount),
                    None => {
                        // Nothing covers the amount; take everything the
                        // largest-capacity type can give.
                        let mut top: Option<(usize, Vec<u32>, f64)> = None;
                        for r in (0..inst.chargers.len()).filter(|&r| costs.allowed(site, r)) {
                            let free: Vec<u32> = valid
                                .iter()
                                .copied()
                                .filter(|&t| costs.slot_free(usage, 0, site, r, t))
                                .collect();
                            let e = free.len() as f64 * tau * inst.chargers[r].power_kw;
                            if e > EPS && top.as_ref().is_none_or(|b| e > b.2 + EPS) {
                                top = Some((r, free, e));
                            }
                        }
                        top?
                    }
                };
                sessions = fill_power(inst, site, r, &slots, amount.min(deliver));
                charged = tau * sessions.iter().map(|s| s.2).sum::<f64>();
                if let Some(&(t, _, _)) = sessions.last() {
                    dep = dep.max(f64::from(t) + 1.0);
                }
            }
        }

        let after = energy + charged - info.cons;
        if energy + charged > emax + 1e-6 || after < emin - 1e-6 {
            return None;
        }
        let arr = f64::from(leg.arr_earliest).max(dep + leg.travel_h / tau + beta);
        out.push(LegPlan {
            leg: LegRef { vehicle: k, leg: l },
            sessions,
            departure: dep,
            arrival: arr,
            energy_dep: energy,
            energy_char: charged,
            energy_arr: after,
        });
        energy = after;
        prev_dep = dep;
        prev_arr = arr;
    }
    if n > 0 && energy < boundary - 1e-6 {
        return None;
    }
    Some(out)
}

fn plan_with_fallback(
    inst: &ProblemInstance,
    k: usize,
    costs: &Costs,
    usage: &Usage,
) -> Option<Vec<LegPlan>> {
    plan_vehicle(inst, k, costs, usage, Mode::LookAhead)
        .or_else(|| plan_vehicle(inst, k, costs, usage, Mode::Full))
}

fn energy_cost(inst: &ProblemInstance, plan: &[LegPlan]) -> f64 {
    let tau = inst.grid.tau();
    let g = inst.params.gamma_energy;
    plan.iter()
        .flat_map(|l| {
            let site = inst.leg(l.leg).origin;
            l.sessions.iter().map(move |&(t, r, kw)| {
                g * tau * inst.price(site, t) * kw / inst.chargers[r].efficiency
            })
        })
        .sum()
}

fn total_cost(
    inst: &ProblemInstance,
    usage: &Usage,
    plans: &[Vec<LegPlan>],
    fixed: Option<&InfrastructureDesign>,
) -> f64 {
    let energy: f64 = plans.iter().map(|p| energy_cost(inst, p)).sum();
    let design = fixed.cloned().unwrap_or_else(|| usage.design());
    let peak: f64 = usage
        .load
        .keys()
        .map(|&s| inst.locations[s].peak_cost_rate * usage.peak(s))
        .sum();
    energy + design.capital_cost(&inst.chargers) + inst.params.alpha_peak * peak
}

/// Builds a feasible plan, or `None` when the greedy placement fails for
/// some vehicle.
pub fn greedy_plan(inst: &ProblemInstance, opts: &PlanOptions) -> Option<GreedyPlan> {
    let costs = Costs {
        inst,
        caps: opts.design.as_ref(),
        targets: Some(&opts.targets),
    };
    let mut usage = Usage::new(inst);
    let n = inst.vehicles.len();
    let demand: Vec<f64> = (0..n)
        .map(|k| leg_infos(inst, k).iter().map(|i| i.cons).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| demand[b].total_cmp(&demand[a]).then(a.cmp(&b)));

    let mut plans: Vec<Vec<LegPlan>> = vec![Vec::new(); n];
    for &k in &order {
        let plan = plan_with_fallback(inst, k, &costs, &usage)?;
        usage.add_vehicle(inst, &plan, 1);
        plans[k] = plan;
    }
    let fixed = opts.design.as_ref();
    let mut best = total_cost(inst, &usage, &plans, fixed);
    for _ in 0..opts.improvement_rounds {
        let mut improved = false;
        for &k in &order {
            usage.add_vehicle(inst, &plans[k], -1);
            let old = std::mem::take(&mut plans[k]);
            match plan_with_fallback(inst, k, &costs, &usage) {
                Some(plan) => {
                    usage.add_vehicle(inst, &plan, 1);
                    plans[k] = plan;
                    let cost = total_cost(inst, &usage, &plans, fixed);
                    if cost < best - EPS * best.abs().max(1.0) {
                        best = cost;
                        improved = true;
                    } else {
                        usage.add_vehicle(inst, &plans[k], -1);
                        usage.add_vehicle(inst, &old, 1);
                        plans[k] = old;
                    }
                }
                None => {
                    usage.add_vehicle(inst, &old, 1);
                    plans[k] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let design = fixed.cloned().unwrap_or_else(|| usage.design());
    let peak_kw = usage.load.keys().map(|&s| (s, usage.peak(s))).collect();
    Some(GreedyPlan {
        vehicles: plans,
        design,
        peak_kw,
        objective: best,
    })
}

/// Charging targets from a relaxation: energy after charging before every
/// leg that charges.
pub fn lp_targets(built: &BuiltModel, values: &[f64]) -> BTreeMap<LegRef, f64> {
    built
        .legs
        .iter()
        .filter(|lv| !lv.window.is_empty())
        .map(|lv| (lv.leg, values[lv.energy_dep] + values[lv.energy_char]))
        .collect()
}

/// Whether vehicle `k` alone can complete its itinerary by charging as
/// much as possible at every opportunity on the fastest charger type.
pub fn vehicle_can_complete(inst: &ProblemInstance, k: usize) -> bool {
    let costs = Costs {
        inst,
        caps: None,
        targets: None,
    };
    plan_vehicle(inst, k, &costs, &Usage::new(inst), Mode::Full).is_some()
}
