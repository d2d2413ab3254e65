//! Exhaustive reference solver for micro instances.
//!
//! Enumerates every per-slot charger choice for every leg, rejects choices
//! that switch charger types between consecutive slots or break the time
//! windows, and prices the rest: energy by filling the cheapest charging
//! capacity first, chargers as the peak simultaneous use per type, and the
//! connection cost as the peak rated power per site. Shares no code with
//! the model builder or the solver.

use chargeplan::domain::ProblemInstance;

/// Charger type per slot of a leg's window, `None` when idle.
type Pattern = Vec<Option<usize>>;

struct LegData {
    site: Option<usize>,
    first: u32,
    len: u32,
    cons: f64,
}

fn leg_data(inst: &ProblemInstance, k: usize) -> Vec<LegData> {
    let v = &inst.vehicles[k];
    let beta = inst.params.beta_slack;
    let slots = inst.grid.slot_count;
    v.itinerary
        .iter()
        .enumerate()
        .map(|(l, leg)| {
            let first = if l == 0 {
                0
            } else {
                v.itinerary[l - 1].arr_earliest
            };
            let last = ((f64::from(leg.dep_latest) + beta).floor() as u32).min(slots - 1);
            let site = inst.locations[leg.origin].charger_site
                && first <= last
                && !inst.chargers.is_empty();
            let cons =
                v.consumption_kwh_per_tkm * leg.distance_km * (v.empty_weight_t + leg.payload_t)
                    + (v.aux_kwh_per_h + if leg.cold { v.cooling_kwh_per_h } else { 0.0 })
                        * leg.travel_h;
            LegData {
                site: site.then_some(leg.origin),
                first,
                len: if site { last - first + 1 } else { 0 },
                cons,
            }
        })
        .collect()
}

fn patterns(len: u32, types: usize) -> Vec<Pattern> {
    let mut out: Vec<Pattern> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for p in &out {
            for choice in std::iter::once(None).chain((0..types).map(Some)) {
                if let (Some(Some(a)), Some(b)) = (p.last(), choice) {
                    if *a != b {
                        continue;
                    }
                }
                let mut q = p.clone();
                q.push(choice);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Charging capacities `(kWh, cost per kWh)` of a pattern, cheapest first.
fn capacities(inst: &ProblemInstance, site: usize, first: u32, p: &Pattern) -> Vec<(f64, f64)> {
    let tau = inst.grid.tau();
    let gamma = inst.params.gamma_energy;
    let mut caps: Vec<(f64, f64)> = p
        .iter()
        .enumerate()
        .filter_map(|(s, c)| {
            c.map(|r| {
                let ch = &inst.chargers[r];
                let price = inst.locations[site].prices[(first as usize) + s];
                (tau * ch.power_kw, gamma * price / ch.efficiency)
            })
        })
        .collect();
    caps.sort_by(|a, b| a.1.total_cmp(&b.1));
    caps
}

/// Cheapest cost of charging `amount` from `caps`.
fn fill(caps: &[(f64, f64)], amount: f64) -> f64 {
    let mut left = amount.max(0.0);
    let mut cost = 0.0;
    for &(cap, price) in caps {
        let take = left.min(cap);
        cost += take * price;
        left -= take;
    }
    cost
}

fn breakpoints(caps: &[(f64, f64)]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for &(c, _) in caps {
        acc += c;
        out.push(acc);
    }
    out
}

fn total(caps: &[(f64, f64)]) -> f64 {
    caps.iter().map(|c| c.0).sum()
}

/// Earliest-time feasibility of a vehicle's charging patterns.
fn times_ok(inst: &ProblemInstance, k: usize, legs: &[LegData], pats: &[&Pattern]) -> bool {
    let tau = inst.grid.tau();
    let beta = inst.params.beta_slack;
    let it = &inst.vehicles[k].itinerary;
    let mut prev_dep = 0.0;
    let mut prev_arr = 0.0;
    for (l, leg) in it.iter().enumerate() {
        let slots: Vec<u32> = pats[l]
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_some())
            .map(|(s, _)| legs[l].first + s as u32)
            .collect();
        let ready = if l == 0 {
            0.0
        } else {
            let p = &it[l - 1];
            prev_dep + (p.travel_h + p.unload_h + p.load_h) / tau
        };
        if slots.iter().any(|&t| f64::from(t) + 1e-9 < ready) {
            return false;
        }
        let mut dep = f64::from(leg.dep_earliest);
        if l > 0 {
            let p = &it[l - 1];
            dep = dep.max(prev_arr + (p.load_h + p.unload_h) / tau);
        }
        if let Some(&t) = slots.last() {
            dep = dep.max(f64::from(t) + 1.0);
        }
        if dep > f64::from(leg.dep_latest) + beta + 1e-9 {
            return false;
        }
        prev_dep = dep;
        prev_arr = f64::from(leg.arr_earliest).max(dep + leg.travel_h / tau + beta);
    }
    true
}

/// Minimum energy cost of a vehicle given its charging capacities per leg.
fn energy_cost(
    inst: &ProblemInstance,
    k: usize,
    legs: &[LegData],
    caps: &[Vec<(f64, f64)>],
) -> Option<f64> {
    let v = &inst.vehicles[k];
    let (emax, emin) = (v.battery_kwh, v.min_energy_kwh);
    let boundary = v.soc_boundary * emax;
    let eps = 1e-9;
    match legs.len() {
        1 => {
            let need = legs[0].cons.max(emin + legs[0].cons - boundary).max(0.0);
            (need <= total(&caps[0]) + eps && need <= emax - boundary + eps)
                .then(|| fill(&caps[0], need))
        }
        2 => {
            let (c1, c2) = (legs[0].cons, legs[1].cons);
            // Second charge needed after charging x before the first leg.
            let lcap = boundary + c2 - (boundary - c1);
            let lo = 0f64.max(emin + c1 - boundary).max(lcap - total(&caps[1]));
            let hi = total(&caps[0]).min(emax - boundary);
            if lo > hi + eps {
                return None;
            }
            let mut best: Option<f64> = None;
            let candidates = breakpoints(&caps[0])
                .into_iter()
                .chain(breakpoints(&caps[1]).into_iter().map(|b| lcap - b))
                .chain([lo, hi, lcap]);
            for x in candidates {
                let x = x.clamp(lo, hi.max(lo));
                let e1 = boundary + x - c1;
                let y = (boundary + c2 - e1).max(0.0).max(emin + c2 - e1);
                if y > total(&caps[1]) + eps || e1 + y > emax + eps || e1 < emin - eps {
                    continue;
                }
                let cost = fill(&caps[0], x) + fill(&caps[1], y);
                if best.is_none_or(|b| cost < b) {
                    best = Some(cost);
                }
            }
            best
        }
        0 => Some(0.0),
        n => panic!("oracle supports at most two legs, got {n}"),
    }
}

/// A vehicle's charging choice with the usage bitmap and energy cost.
struct Option_ {
    usage: Vec<(usize, u32, usize)>,
    mask: u128,
    energy: f64,
}

fn vehicle_options(inst: &ProblemInstance, k: usize) -> Vec<Option_> {
    let legs = leg_data(inst, k);
    let types = inst.chargers.len();
    let per_leg: Vec<Vec<Pattern>> = legs.iter().map(|d| patterns(d.len, types)).collect();
    let slots = inst.grid.slot_count as usize;
    let bit = |site: usize, t: u32, r: usize| 1u128 << ((site * slots + t as usize) * types + r);
    let mut out = Vec::new();
    let mut idx = vec![0usize; legs.len()];
    loop {
        let pats: Vec<&Pattern> = idx
            .iter()
            .enumerate()
            .map(|(l, &i)| &per_leg[l][i])
            .collect();
        if times_ok(inst, k, &legs, &pats) {
            let caps: Vec<_> = legs
                .iter()
                .zip(&pats)
                .map(|(d, p)| {
                    d.site
                        .map_or(Vec::new(), |s| capacities(inst, s, d.first, p))
                })
                .collect();
            if let Some(energy) = energy_cost(inst, k, &legs, &caps) {
                let mut usage = Vec::new();
                let mut mask = 0u128;
                for (d, p) in legs.iter().zip(&pats) {
                    for (s, c) in p.iter().enumerate() {
                        if let (Some(site), Some(r)) = (d.site, c) {
                            let t = d.first + s as u32;
                            usage.push((site, t, *r));
                            mask |= bit(site, t, *r);
                        }
                    }
                }
                out.push(Option_ {
                    usage,
                    mask,
                    energy,
                });
            }
        }
        // Odometer over leg patterns.
        let mut l = 0;
        loop {
            if l == idx.len() {
                return prune(out);
            }
            idx[l] += 1;
            if idx[l] < per_leg[l].len() {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
    }
}

/// Drops options whose usage is a superset of a cheaper-or-equal option.
fn prune(mut opts: Vec<Option_>) -> Vec<Option_> {
    opts.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.mask.count_ones().cmp(&b.mask.count_ones()))
    });
    let mut kept: Vec<Option_> = Vec::new();
    for o in opts {
        if !kept
            .iter()
            .any(|k| k.mask & o.mask == k.mask && k.energy <= o.energy + 1e-12)
        {
            kept.push(o);
        }
    }
    kept
}

pub struct OracleResult {
    pub objective: f64,
    pub combinations: usize,
}

/// Enumerated optimum, or `None` when no choice is feasible. Returns
/// `Err(count)` when the search space exceeds `limit` combinations.
pub fn solve(inst: &ProblemInstance, limit: usize) -> Result<Option<OracleResult>, usize> {
    let per_vehicle: Vec<Vec<Option_>> = (0..inst.vehicles.len())
        .map(|k| vehicle_options(inst, k))
        .collect();
    let combinations: usize = per_vehicle.iter().map(|o| o.len().max(1)).product();
    if combinations > limit {
        return Err(combinations);
    }
    if per_vehicle.iter().any(|o| o.is_empty()) {
        return Ok(None);
    }
    let p = &inst.params;
    let n_loc = inst.locations.len();
    let n_types = inst.chargers.len();
    let slots = inst.grid.slot_count as usize;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; per_vehicle.len()];
    loop {
        let mut energy = 0.0;
        let mut count = vec![0u32; n_loc * slots * n_types];
        let mut power = vec![0.0; n_loc * slots];
        for (k, &i) in idx.iter().enumerate() {
            let o = &per_vehicle[k][i];
            energy += o.energy;
            for &(site, t, r) in &o.usage {
                count[(site * slots + t as usize) * n_types + r] += 1;
                power[site * slots + t as usize] += inst.chargers[r].power_kw;
            }
        }
        let mut infra = 0.0;
        let mut peak = 0.0;
        for site in 0..n_loc {
            for (r, ch) in inst.chargers.iter().enumerate() {
                let x = (0..slots)
                    .map(|t| count[(site * slots + t) * n_types + r])
                    .max()
                    .unwrap_or(0);
                infra += f64::from(x) * ch.capital_cost;
            }
            let top = (0..slots)
                .map(|t| power[site * slots + t])
                .fold(0.0, f64::max);
            peak += inst.locations[site].peak_cost_rate * top;
        }
        best = best.min(energy + infra + p.alpha_peak * peak);

        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(Some(OracleResult {
                    objective: best,
                    combinations,
                }));
            }
            idx[k] += 1;
            if idx[k] < per_vehicle[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
