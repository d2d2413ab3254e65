// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{leg_energy, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Grid,
    Charger,
    Vehicle,
    Location,
    Params,
    UnknownReference,
    WindowOrder,
    WindowOutsideGrid,
    Overload,
    Distance,
    Discontinuity,
    EnergyInfeasible,
}

/// One broken invariant, with a human-readable subject such as `leg k3/l2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} [{}]: {}", self.kind, self.subject, self.detail)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, kind: ViolationKind, subject: impl Into<String>, detail: impl Into<String>) {
        self.0.push(Violation {
            kind,
            subject: subject.into(),
            detail: detail.into(),
        });
    }
}

/// Checks every domain invariant and the single-leg energy screen. Never
/// panics on malformed references; each problem becomes a [`Violation`].
pub fn validate_instance(inst: &ProblemInstance) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Collector(Vec::new());

    let grid = &inst.grid;
    if grid.slot_minutes == 0 {
        out.push(Grid, "grid", "slot length must be positive");
    }
    if grid.slot_count == 0 {
        out.push(Grid, "grid", "at least one slot is required");
    }

    for (r, c) in inst.chargers.iter().enumerate() {
        let subject = format!("charger r{r} ({})", c.id);
        if !(c.power_kw > 0.0) {
            out.push(
                Charger,
                &subject,
                format!("rated power {} must be positive", c.power_kw),
            );
        }
        if !(c.efficiency > 0.0 && c.efficiency <= 1.0) {
            out.push(
                Charger,
                &subject,
                format!("efficiency {} outside (0, 1]", c.efficiency),
            );
        }
        if !(c.capital_cost >= 0.0) {
            out.push(
                Charger,
                &subject,
                format!("capital cost {} is negative", c.capital_cost),
            );
        }
    }

    let p = &inst.params;
    if !(p.alpha_peak >= 0.0) {
        out.push(Params, "params", "peak factor must be non-negative");
    }
    if !(p.beta_slack >= 0.0) {
        out.push(Params, "params", "time slack must be non-negative");
    }
    if !(p.gamma_energy > 0.0) {
        out.push(Params, "params", "energy factor must be positive");
    }
    if !(p.mip_gap >= 0.0 && p.mip_gap < 1.0) {
        out.push(Params, "params", "optimality gap must lie in [0, 1)");
    }

    for (i, loc) in inst.locations.iter().enumerate() {
        let subject = format!("location i{i} ({})", loc.id);
        if loc.prices.len() != grid.slot_count as usize {
            out.push(
                Location,
                &subject,
                format!("{} prices for {} slots", loc.prices.len(), grid.slot_count),
            );
        }
        if loc.prices.iter().any(|p| !p.is_finite()) {
            out.push(Location, &subject, "non-finite energy price");
        }
        if !(loc.peak_cost_rate >= 0.0) {
            out.push(Location, &subject, "peak cost rate must be non-negative");
        }
        if let Some(pmax) = loc.contracted_power_kw {
            if !(pmax > 0.0) {
                out.push(Location, &subject, "contracted power must be positive");
            }
        }
    }
    for (a, b, d) in inst.distances.iter() {
        if a >= inst.locations.len() || b >= inst.locations.len() {
            out.push(
                UnknownReference,
                format!("distance i{a}-i{b}"),
                "unknown location",
            );
        }
        if !(d >= 0.0) || (a == b && d != 0.0) {
            out.push(
                Distance,
                format!("distance i{a}-i{b}"),
                format!("invalid distance {d}"),
            );
        }
    }

    for (k, v) in inst.vehicles.iter().enumerate() {
        let subject = format!("vehicle k{k} ({})", v.id);
        let boundary = v.soc_boundary * v.battery_kwh;
        if !(0.0..=1.0).contains(&v.soc_boundary) {
            out.push(Vehicle, &subject, "state-of-energy boundary outside [0, 1]");
        }
        if !(v.min_energy_kwh >= 0.0 && v.min_energy_kwh < boundary && boundary <= v.battery_kwh) {
            out.push(
                Vehicle,
                &subject,
                format!(
                    "need 0 <= E_min ({}) < boundary energy ({boundary}) <= capacity ({})",
                    v.min_energy_kwh, v.battery_kwh
                ),
            );
        }
        if !(v.empty_weight_t > 0.0) {
            out.push(Vehicle, &subject, "empty weight must be positive");
        }
        if !(v.consumption_kwh_per_tkm >= 0.0
            && v.aux_kwh_per_h >= 0.0
            && v.cooling_kwh_per_h >= 0.0)
        {
            out.push(Vehicle, &subject, "consumption rates must be non-negative");
        }

        for (l, leg) in v.itinerary.iter().enumerate() {
            let subject = format!("leg k{k}/l{l}");
            let n_loc = inst.locations.len();
            if leg.origin >= n_loc || leg.destination >= n_loc {
                out.push(
                    UnknownReference,
                    &subject,
                    format!(
                        "location index {} or {} out of range",
                        leg.origin, leg.destination
                    ),
                );
            } else if let Some(table) = inst.distances.get(leg.origin, leg.destination) {
                if (table - leg.distance_km).abs() > 1e-6 * table.abs().max(1.0) {
                    out.push(
                        Distance,
                        &subject,
                        format!(
                            "leg distance {} differs from table {table}",
                            leg.distance_km
                        ),
                    );
                }
            } else {
                out.push(
                    Distance,
                    &subject,
                    format!("no distance entry for i{}-i{}", leg.origin, leg.destination),
                );
            }
            if !(leg.distance_km >= 0.0) {
                out.push(Distance, &subject, "negative distance");
            }
            if leg.dep_earliest > leg.dep_latest {
                out.push(
                    WindowOrder,
                    &subject,
                    format!(
                        "departure window [{}, {}]",
                        leg.dep_earliest, leg.dep_latest
                    ),
                );
            }
            if leg.arr_earliest > leg.arr_latest {
                out.push(
                    WindowOrder,
                    &subject,
                    format!("arrival window [{}, {}]", leg.arr_earliest, leg.arr_latest),
                );
            }
            let last = grid.slot_count.saturating_sub(1);
            if leg.dep_latest > last || leg.arr_latest > last {
                out.push(
                    WindowOutsideGrid,
                    &subject,
                    format!("window beyond slot {last}"),
                );
            }
            if !(leg.payload_t >= 0.0) || leg.payload_t > v.max_load_t {
                out.push(
                    Overload,
                    &subject,
                    format!("payload {} t, maximum {} t", leg.payload_t, v.max_load_t),
                );
            }
            if !(leg.travel_h >= 0.0 && leg.load_h >= 0.0 && leg.unload_h >= 0.0) {
                out.push(WindowOrder, &subject, "durations must be non-negative");
            }
            if l > 0 && v.itinerary[l - 1].destination != leg.origin {
                out.push(
                    Discontinuity,
                    &subject,
                    format!(
                        "starts at i{} but previous leg ended at i{}",
                        leg.origin,
                        v.itinerary[l - 1].destination
                    ),
                );
            }
            let need = leg_energy(v, leg);
            let usable = v.battery_kwh - v.min_energy_kwh;
            if need > usable {
                out.push(
                    EnergyInfeasible,
                    &subject,
                    format!("consumes {need:.3} kWh, usable battery {usable:.3} kWh"),
                );
            }
        }
    }
    out.0
}
