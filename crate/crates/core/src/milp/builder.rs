//! Builds the joint infrastructure and charge-scheduling MILP from an instance.
//!
//! Times are measured in slots, energies in kWh and powers in kW. Charging
//! in slot `t` occupies `[t, t + 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{Family, Model, Sense, VarId, VarKind, VarTag};
use crate::domain::{ChargingWindow, LegRef, ProblemInstance};

/// Variable ids belonging to one leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegVars {
    pub leg: LegRef,
    /// Charging window, empty when the leg cannot charge before departure.
    pub window: ChargingWindow,
    pub departure: VarId,
    pub arrival: VarId,
    pub energy_dep: VarId,
    pub energy_arr: VarId,
    pub energy_char: VarId,
    /// `power[s]` for slot `window.first + s`.
    pub power: Vec<VarId>,
    /// `choice[s][r]`.
    pub choice: Vec<Vec<VarId>>,
    /// `type_power[s][r]`.
    pub type_power: Vec<Vec<VarId>>,
    /// Transition indicators for every window slot after the first.
    pub switch_off: Vec<VarId>,
    pub switch_on: Vec<VarId>,
}

impl LegVars {
    pub fn slots(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.power.len()).map(move |s| (s, self.window.first + s as u32))
    }
}

/// A built model together with the variable layout needed to read solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuiltModel {
    pub model: Model<f64>,
    pub legs: Vec<LegVars>,
    /// `(location, charger type) -> X`.
    pub charger_counts: BTreeMap<(usize, usize), VarId>,
    /// `location -> C^peak`.
    pub peak_costs: BTreeMap<usize, VarId>,
}

impl BuiltModel {
    pub fn leg_vars(&self, leg: LegRef) -> Option<&LegVars> {
        self.legs.iter().find(|v| v.leg == leg)
    }
}

fn leg_label(r: LegRef) -> String {
    format!("k{},l{}", r.vehicle, r.leg)
}

/// Incremental builder; each `add_*` method emits one group of constraint
/// families. [`build_model`] runs them all in order.
pub struct ModelBuilder<'a> {
    inst: &'a ProblemInstance,
    built: BuiltModel,
}

impl<'a> ModelBuilder<'a> {
    /// Declares every variable.
    pub fn new(inst: &'a ProblemInstance) -> Self {
        let mut model = Model::new();
        let beta = inst.params.beta_slack;
        let n_types = inst.chargers.len();
        let mut legs = Vec::new();
        let mut departing: BTreeMap<usize, usize> = BTreeMap::new();

        for (r, leg) in inst.legs() {
            let vehicle = &inst.vehicles[r.vehicle];
            let emax = vehicle.battery_kwh;
            let window = if inst.can_charge_before(r) && n_types > 0 {
                inst.charging_window(r)
            } else {
                ChargingWindow::EMPTY
            };
            let departure = model.add_var(
                VarTag::Departure { leg: r },
                VarKind::Continuous,
                f64::from(leg.dep_earliest),
                f64::from(leg.dep_latest) + beta,
            );
            let arrival = model.add_var(
                VarTag::Arrival { leg: r },
                VarKind::Continuous,
                f64::from(leg.arr_earliest),
                f64::INFINITY,
            );
            let energy_dep = model.add_var(
                VarTag::DepartureEnergy { leg: r },
                VarKind::Continuous,
                0.0,
                emax,
            );
            let energy_arr = model.add_var(
                VarTag::ArrivalEnergy { leg: r },
                VarKind::Continuous,
                0.0,
                emax,
            );
            let energy_char = model.add_var(
                VarTag::ChargedEnergy { leg: r },
                VarKind::Continuous,
                0.0,
                emax,
            );

            let mut power = Vec::new();
            let mut choice = Vec::new();
            let mut type_power = Vec::new();
            let mut switch_off = Vec::new();
            let mut switch_on = Vec::new();
            for slot in window.slots() {
                let max_power = inst.chargers.iter().map(|c| c.power_kw).fold(0.0, f64::max);
                power.push(model.add_var(
                    VarTag::Power { leg: r, slot },
                    VarKind::Continuous,
                    0.0,
                    max_power,
                ));
                choice.push(
                    (0..n_types)
                        .map(|c| {
                            model.add_var(
                                VarTag::ChargeChoice {
                                    leg: r,
                                    charger: c,
                                    slot,
                                },
                                VarKind::Binary,
                                0.0,
                                1.0,
                            )
                        })
                        .collect(),
                );
                type_power.push(
                    inst.chargers
                        .iter()
                        .enumerate()
                        .map(|(c, ch)| {
                            model.add_var(
                                VarTag::TypePower {
                                    leg: r,
                                    charger: c,
                                    slot,
                                },
                                VarKind::Continuous,
                                0.0,
                                ch.power_kw,
                            )
                        })
                        .collect(),
                );
                if slot > window.first {
                    switch_off.push(model.add_var(
                        VarTag::SwitchOff { leg: r, slot },
                        VarKind::Binary,
                        0.0,
                        1.0,
                    ));
                    switch_on.push(model.add_var(
                        VarTag::SwitchOn { leg: r, slot },
                        VarKind::Binary,
                        0.0,
                        1.0,
                    ));
                }
            }
            if !window.is_empty() {
                *departing.entry(leg.origin).or_default() += 1;
            }
            legs.push(LegVars {
                leg: r,
                window,
                departure,
                arrival,
                energy_dep,
                energy_arr,
                energy_char,
                power,
                choice,
                type_power,
                switch_off,
                switch_on,
            });
        }

        let mut charger_counts = BTreeMap::new();
        for site in inst.charger_sites() {
            let cap = departing.get(&site).copied().unwrap_or(0) as f64;
            for c in 0..n_types {
                let x = model.add_var(
                    VarTag::ChargerCount {
                        location: site,
                        charger: c,
                    },
                    VarKind::Integer,
                    0.0,
                    cap,
                );
                charger_counts.insert((site, c), x);
            }
        }
        let mut peak_costs = BTreeMap::new();
        for &site in departing.keys() {
            let v = model.add_var(
                VarTag::PeakCost { location: site },
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
            );
            peak_costs.insert(site, v);
        }

        Self {
            inst,
            built: BuiltModel {
                model,
                legs,
                charger_counts,
                peak_costs,
            },
        }
    }

    /// Charged energy, power caps, energy balance, chaining and battery cap.
    pub fn add_energy_constraints(&mut self) -> &mut Self {
        let inst = self.inst;
        let tau = inst.grid.tau();
        let m = &mut self.built.model;
        for (idx, lv) in self.built.legs.iter().enumerate() {
            let r = lv.leg;
            let label = leg_label(r);
            let vehicle = &inst.vehicles[r.vehicle];
            let cons = inst.leg_energy(r);

            let mut terms = vec![(lv.energy_char, 1.0)];
            terms.extend(lv.power.iter().map(|&p| (p, -tau)));
            m.add_row(Family::ChargedEnergy, label.clone(), terms, Sense::Eq, 0.0);

            for (s, slot) in lv.slots() {
                let sl = format!("{label},t{slot}");
                let mut cap = vec![(lv.power[s], 1.0)];
                for (c, ch) in inst.chargers.iter().enumerate() {
                    cap.push((lv.choice[s][c], -ch.power_kw));
                }
                m.add_row(Family::PowerCap, sl.clone(), cap, Sense::Le, 0.0);
                for (c, ch) in inst.chargers.iter().enumerate() {
                    m.add_row(
                        Family::TypePowerCap,
                        format!("{label},r{c},t{slot}"),
                        vec![(lv.type_power[s][c], 1.0), (lv.choice[s][c], -ch.power_kw)],
                        Sense::Le,
                        0.0,
                    );
                }
                let mut split = vec![(lv.power[s], 1.0)];
                split.extend(lv.type_power[s].iter().map(|&p| (p, -1.0)));
                m.add_row(Family::PowerSplit, sl, split, Sense::Eq, 0.0);
            }

            m.add_row(
                Family::EnergyFloor,
                label.clone(),
                vec![(lv.energy_dep, 1.0), (lv.energy_char, 1.0)],
                Sense::Ge,
                vehicle.min_energy_kwh + cons,
            );
            m.add_row(
                Family::EnergyBalance,
                label.clone(),
                vec![
                    (lv.energy_dep, 1.0),
                    (lv.energy_char, 1.0),
                    (lv.energy_arr, -1.0),
                ],
                Sense::Eq,
                cons,
            );
            if r.leg > 0 {
                let prev = &self.built.legs[idx - 1];
                m.add_row(
                    Family::EnergyChain,
                    label.clone(),
                    vec![(prev.energy_arr, 1.0), (lv.energy_dep, -1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
            m.add_row(
                Family::BatteryCap,
                label,
                vec![(lv.energy_dep, 1.0), (lv.energy_char, 1.0)],
                Sense::Le,
                vehicle.battery_kwh,
            );
        }
        self
    }

    /// Departure after charging, charging after the vehicle is ready, travel
    /// time with slack, and handling time between legs.
    pub fn add_schedule_constraints(&mut self) -> &mut Self {
        let inst = self.inst;
        let tau = inst.grid.tau();
        let beta = inst.params.beta_slack;
        let m = &mut self.built.model;
        for (idx, lv) in self.built.legs.iter().enumerate() {
            let r = lv.leg;
            let label = leg_label(r);
            let leg = inst.leg(r);
            let prev = (r.leg > 0).then(|| {
                (
                    &self.built.legs[idx - 1],
                    inst.leg(LegRef {
                        vehicle: r.vehicle,
                        leg: r.leg - 1,
                    }),
                )
            });

            for (s, slot) in lv.slots() {
                let t = f64::from(slot);
                let sl = format!("{label},t{slot}");
                let mut terms: Vec<_> = lv.choice[s].iter().map(|&y| (y, t + 1.0)).collect();
                terms.push((lv.departure, -1.0));
                m.add_row(Family::DepartAfterCharge, sl.clone(), terms, Sense::Le, 0.0);

                // Ready once the previous leg is driven, unloaded and the
                // truck loaded again; charging in slot t needs ready <= t.
                if let Some((pv, pleg)) = prev {
                    let c = (pleg.travel_h + pleg.unload_h + pleg.load_h) / tau;
                    let big_m = f64::from(pleg.dep_latest) + beta + c - t;
                    if big_m > 0.0 {
                        let mut terms = vec![(pv.departure, 1.0)];
                        terms.extend(lv.choice[s].iter().map(|&y| (y, big_m)));
                        m.add_row(
                            Family::ChargeAfterReady,
                            sl,
                            terms,
                            Sense::Le,
                            big_m + t - c,
                        );
                    }
                }
            }

            m.add_row(
                Family::ArriveAfterTravel,
                label.clone(),
                vec![(lv.departure, 1.0), (lv.arrival, -1.0)],
                Sense::Le,
                -(leg.travel_h / tau + beta),
            );
            if let Some((pv, pleg)) = prev {
                m.add_row(
                    Family::DepartAfterArrival,
                    label,
                    vec![(pv.arrival, 1.0), (lv.departure, -1.0)],
                    Sense::Le,
                    -(pleg.load_h + pleg.unload_h) / tau,
                );
            }
        }
        self
    }

    /// Charger capacity per site, type and slot, and one type per slot.
    pub fn add_infrastructure_constraints(&mut self) -> &mut Self {
        let inst = self.inst;
        let m = &mut self.built.model;
        let mut usage: BTreeMap<(usize, usize, u32), Vec<VarId>> = BTreeMap::new();
        for lv in &self.built.legs {
            let origin = inst.leg(lv.leg).origin;
            for (s, slot) in lv.slots() {
                for (c, &y) in lv.choice[s].iter().enumerate() {
                    usage.entry((origin, c, slot)).or_default().push(y);
                }
                let terms = lv.choice[s].iter().map(|&y| (y, 1.0)).collect();
                m.add_row(
                    Family::SingleCharger,
                    format!("{},t{slot}", leg_label(lv.leg)),
                    terms,
                    Sense::Le,
                    1.0,
                );
            }
        }
        for ((site, c, slot), ys) in usage {
            let x = self.built.charger_counts[&(site, c)];
            let mut terms: Vec<_> = ys.into_iter().map(|y| (y, 1.0)).collect();
            terms.push((x, -1.0));
            m.add_row(
                Family::ChargerCapacity,
                format!("i{site},r{c},t{slot}"),
                terms,
                Sense::Le,
                0.0,
            );
        }
        self
    }

    /// Consecutive slots may go idle to charging, charging to idle, or stay
    /// on the same charger type, but never switch types directly.
    pub fn add_practical_charging_constraints(&mut self) -> &mut Self {
        let m = &mut self.built.model;
        for lv in &self.built.legs {
            let label = leg_label(lv.leg);
            for (s, slot) in lv.slots().skip(1) {
                let u = lv.switch_off[s - 1];
                let v = lv.switch_on[s - 1];
                for c in 0..lv.choice[s].len() {
                    let (prev, cur) = (lv.choice[s - 1][c], lv.choice[s][c]);
                    let rl = format!("{label},r{c},t{slot}");
                    m.add_row(
                        Family::SwitchUpper,
                        rl.clone(),
                        vec![(prev, 1.0), (cur, -1.0), (u, -1.0)],
                        Sense::Le,
                        0.0,
                    );
                    m.add_row(
                        Family::SwitchLower,
                        rl,
                        vec![(prev, 1.0), (cur, -1.0), (v, 1.0)],
                        Sense::Ge,
                        0.0,
                    );
                }
                m.add_row(
                    Family::SwitchPair,
                    format!("{label},t{slot}"),
                    vec![(u, 1.0), (v, 1.0)],
                    Sense::Le,
                    1.0,
                );
            }
        }
        self
    }

    /// Energy at the start of the horizon is the boundary level and energy at
    /// the end is at least that level.
    pub fn add_periodicity_constraints(&mut self) -> &mut Self {
        let inst = self.inst;
        let m = &mut self.built.model;
        for (k, vehicle) in inst.vehicles.iter().enumerate() {
            let n = vehicle.itinerary.len();
            if n == 0 {
                continue;
            }
            let level = vehicle.boundary_energy();
            let first = self
                .built
                .legs
                .iter()
                .find(|lv| lv.leg == LegRef { vehicle: k, leg: 0 })
                .expect("first leg declared");
            let last = self
                .built
                .legs
                .iter()
                .find(|lv| {
                    lv.leg
                        == LegRef {
                            vehicle: k,
                            leg: n - 1,
                        }
                })
                .expect("last leg declared");
            m.add_row(
                Family::PeriodStart,
                format!("k{k}"),
                vec![(first.energy_dep, 1.0)],
                Sense::Eq,
                level,
            );
            m.add_row(
                Family::PeriodEnd,
                format!("k{k}"),
                vec![(last.energy_arr, 1.0)],
                Sense::Ge,
                level,
            );
        }
        self
    }

    /// Energy, capital and peak cost terms plus the peak epigraph rows.
    pub fn build_objective(&mut self) -> &mut Self {
        let inst = self.inst;
        let p = &inst.params;
        let tau = inst.grid.tau();
        let m = &mut self.built.model;

        let mut peak_terms: BTreeMap<(usize, u32), Vec<(VarId, f64)>> = BTreeMap::new();
        for lv in &self.built.legs {
            let origin = inst.leg(lv.leg).origin;
            let rate = inst.locations[origin].peak_cost_rate;
            for (s, slot) in lv.slots() {
                let price = inst.price(origin, slot);
                for (c, ch) in inst.chargers.iter().enumerate() {
                    let coeff = p.gamma_energy * tau * price / ch.efficiency;
                    if coeff != 0.0 {
                        m.set_objective(lv.type_power[s][c], coeff);
                    }
                    peak_terms
                        .entry((origin, slot))
                        .or_default()
                        .push((lv.choice[s][c], rate * ch.power_kw));
                }
            }
        }
        for (&(_, c), &x) in &self.built.charger_counts {
            let cost = inst.chargers[c].capital_cost;
            if cost != 0.0 {
                m.set_objective(x, cost);
            }
        }
        for &v in self.built.peak_costs.values() {
            if p.alpha_peak != 0.0 {
                m.set_objective(v, p.alpha_peak);
            }
        }
        for ((site, slot), mut terms) in peak_terms {
            terms.push((self.built.peak_costs[&site], -1.0));
            m.add_row(
                Family::PeakEpigraph,
                format!("i{site},t{slot}"),
                terms,
                Sense::Le,
                0.0,
            );
        }
        self
    }

    /// Attaches warnings for legs that cannot charge and cannot be covered
    /// by the energy carried over from earlier charging opportunities.
    pub fn check_carry_over(&mut self) -> &mut Self {
        let inst = self.inst;
        for (k, vehicle) in inst.vehicles.iter().enumerate() {
            let mut available = vehicle.boundary_energy();
            for l in 0..vehicle.itinerary.len() {
                let r = LegRef { vehicle: k, leg: l };
                let lv = self.built.leg_vars(r).expect("leg declared");
                if !lv.window.is_empty() {
                    available = vehicle.battery_kwh;
                }
                available -= inst.leg_energy(r);
                if lv.window.is_empty() && available < vehicle.min_energy_kwh {
                    self.built.model.warnings.push(format!(
                        "leg {} of vehicle {} cannot charge and needs more energy than can be carried over",
                        l, vehicle.id
                    ));
                }
            }
        }
        self
    }

    pub fn finish(self) -> BuiltModel {
        self.built
    }
}

/// Builds the complete model.
pub fn build_model(inst: &ProblemInstance) -> BuiltModel {
    let mut b = ModelBuilder::new(inst);
    b.add_energy_constraints()
        .add_schedule_constraints()
        .add_infrastructure_constraints()
        .add_practical_charging_constraints()
        .add_periodicity_constraints()
        .build_objective()
        .check_carry_over();
    b.finish()
}
