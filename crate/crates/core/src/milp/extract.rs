//! Reads infrastructure designs and charging schedules out of solutions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::builder::BuiltModel;
use crate::domain::{ChargerType, LegRef, ProblemInstance};
use crate::error::{Error, Result};

/// Integrality slack tolerated before extraction refuses a solution.
pub const EXTRACT_INT_TOL: f64 = 1e-5;

/// Installed charger counts per location and charger type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfrastructureDesign {
    /// `location index -> counts per charger type`; locations without any
    /// charger are omitted.
    pub sites: BTreeMap<usize, Vec<u32>>,
}

impl InfrastructureDesign {
    pub fn is_empty(&self) -> bool {
        self.sites.values().all(|c| c.iter().all(|&n| n == 0))
    }

    pub fn count(&self, location: usize, charger: usize) -> u32 {
        self.sites
            .get(&location)
            .and_then(|c| c.get(charger))
            .copied()
            .unwrap_or(0)
    }

    pub fn set(&mut self, location: usize, counts: Vec<u32>) {
        if counts.iter().any(|&n| n > 0) {
            self.sites.insert(location, counts);
        } else {
            self.sites.remove(&location);
        }
    }

    pub fn total_chargers(&self) -> u32 {
        self.sites.values().flatten().sum()
    }

    /// Sum of rated powers of all installed units in kW.
    pub fn total_power_kw(&self, catalog: &[ChargerType]) -> f64 {
        self.sites
            .values()
            .flat_map(|c| c.iter().zip(catalog))
            .map(|(&n, ch)| f64::from(n) * ch.power_kw)
            .sum()
    }

    pub fn capital_cost(&self, catalog: &[ChargerType]) -> f64 {
        self.sites
            .values()
            .flat_map(|c| c.iter().zip(catalog))
            .map(|(&n, ch)| f64::from(n) * ch.capital_cost)
            .sum()
    }

    pub fn to_document(&self, inst: &ProblemInstance) -> DesignDocument {
        DesignDocument {
            sites: self
                .sites
                .iter()
                .map(|(&loc, counts)| SiteDoc {
                    location: inst.locations[loc].id.clone(),
                    chargers: inst
                        .chargers
                        .iter()
                        .zip(counts)
                        .map(|(c, &n)| (c.id.clone(), n))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &DesignDocument, inst: &ProblemInstance) -> Result<Self> {
        let mut design = Self::default();
        for site in &doc.sites {
            let loc = inst
                .locations
                .iter()
                .position(|l| l.id == site.location)
                .ok_or_else(|| Error::Document(format!("unknown location {}", site.location)))?;
            let mut counts = vec![0; inst.chargers.len()];
            for (id, &n) in &site.chargers {
                let r = inst
                    .chargers
                    .iter()
                    .position(|c| &c.id == id)
                    .ok_or_else(|| Error::Document(format!("unknown charger type {id}")))?;
                counts[r] = n;
            }
            design.set(loc, counts);
        }
        Ok(design)
    }

    pub fn load(path: &Path, inst: &ProblemInstance) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(&serde_json::from_str(&text)?, inst)
    }

    pub fn save(&self, path: &Path, inst: &ProblemInstance) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_document(inst))? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// File form of a design, keyed by location and charger ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub sites: Vec<SiteDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDoc {
    pub location: String,
    pub chargers: BTreeMap<String, u32>,
}

/// One slot of charging on a given charger type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub slot: u32,
    pub charger: usize,
    /// Power delivered to the battery in kW.
    pub power_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSchedule {
    pub leg: LegRef,
    /// Location where the sessions take place (the leg's origin).
    pub location: usize,
    /// Sessions in slot order.
    pub sessions: Vec<Session>,
    /// Planned departure in slots from the horizon start.
    pub departure: f64,
    /// Planned arrival in slots from the horizon start.
    pub arrival: f64,
    pub energy_dep: f64,
    pub energy_arr: f64,
    pub energy_charged: f64,
}

impl LegSchedule {
    /// Energy delivered by the sessions, `tau * sum P`.
    pub fn session_energy(&self, tau: f64) -> f64 {
        tau * self.sessions.iter().map(|s| s.power_kw).sum::<f64>()
    }
}

/// Charging sessions and planned times for every leg.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChargingSchedule {
    pub slot_minutes: u32,
    pub legs: Vec<LegSchedule>,
}

impl ChargingSchedule {
    pub fn leg(&self, r: LegRef) -> Option<&LegSchedule> {
        self.legs.iter().find(|l| l.leg == r)
    }

    pub fn session_count(&self) -> usize {
        self.legs.iter().map(|l| l.sessions.len()).sum()
    }

    /// Scheduled charger output per location and slot, in kW.
    pub fn power_profile(&self, slots: u32) -> BTreeMap<usize, Vec<f64>> {
        let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for l in &self.legs {
            for s in &l.sessions {
                let series = out
                    .entry(l.location)
                    .or_insert_with(|| vec![0.0; slots as usize]);
                series[s.slot as usize] += s.power_kw;
            }
        }
        out
    }

    /// Highest scheduled charger output per location, in kW.
    pub fn peak_power(&self, slots: u32) -> BTreeMap<usize, f64> {
        self.power_profile(slots)
            .into_iter()
            .map(|(loc, p)| (loc, p.into_iter().fold(0.0, f64::max)))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Cost terms of a solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Grid energy cost (unweighted).
    pub energy: f64,
    pub infrastructure: f64,
    /// Peak connection cost (unweighted).
    pub peak: f64,
    /// Objective: weighted energy plus infrastructure plus weighted peak.
    pub total: f64,
}

fn integral(built: &BuiltModel, values: &[f64], var: usize) -> Result<f64> {
    let v = values[var];
    let r = v.round();
    if (v - r).abs() > EXTRACT_INT_TOL {
        return Err(Error::NonIntegral {
            name: built.model.var_name(var),
            value: v,
        });
    }
    Ok(r)
}

/// Extracts the design and the schedule from a solution of `built`.
///
/// Planned times are normalized to the earliest values consistent with the
/// chosen charging slots and the itinerary, so a truck following the
/// schedule never waits idle for a planned time the solver left loose.
pub fn extract_design_and_schedule(
    inst: &ProblemInstance,
    built: &BuiltModel,
    values: &[f64],
) -> Result<(InfrastructureDesign, ChargingSchedule)> {
    if values.len() != built.model.num_vars() {
        return Err(Error::Solver(format!(
            "solution has {} values for {} variables",
            values.len(),
            built.model.num_vars()
        )));
    }
    for j in built.model.integer_vars() {
        integral(built, values, j)?;
    }

    let mut design = InfrastructureDesign::default();
    let mut per_site: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (&(site, c), &x) in &built.charger_counts {
        let n = integral(built, values, x)? as u32;
        per_site
            .entry(site)
            .or_insert_with(|| vec![0; inst.chargers.len()])[c] = n;
    }
    for (site, counts) in per_site {
        design.set(site, counts);
    }

    let tau = inst.grid.tau();
    let beta = inst.params.beta_slack;
    let mut schedule = ChargingSchedule {
        slot_minutes: inst.grid.slot_minutes,
        legs: Vec::new(),
    };
    let mut prev_arrival = 0.0;
    for lv in &built.legs {
        let leg = inst.leg(lv.leg);
        let mut sessions = Vec::new();
        for (s, slot) in lv.slots() {
            let chosen = lv.choice[s].iter().position(|&y| values[y].round() == 1.0);
            let power = values[lv.power[s]];
            if let Some(c) = chosen {
                if power > 1e-9 {
                    sessions.push(Session {
                        slot,
                        charger: c,
                        power_kw: power,
                    });
                }
            }
        }
        let mut departure = f64::from(leg.dep_earliest);
        if lv.leg.leg > 0 {
            let prev = &inst.vehicles[lv.leg.vehicle].itinerary[lv.leg.leg - 1];
            departure = departure.max(prev_arrival + (prev.load_h + prev.unload_h) / tau);
        }
        if let Some(last) = lv
            .slots()
            .filter(|&(s, _)| lv.choice[s].iter().any(|&y| values[y].round() == 1.0))
            .map(|(_, t)| t)
            .last()
        {
            departure = departure.max(f64::from(last) + 1.0);
        }
        let arrival = f64::from(leg.arr_earliest).max(departure + leg.travel_h / tau + beta);
        prev_arrival = arrival;
        schedule.legs.push(LegSchedule {
            leg: lv.leg,
            location: leg.origin,
            sessions,
            departure,
            arrival,
            energy_dep: values[lv.energy_dep],
            energy_arr: values[lv.energy_arr],
            energy_charged: values[lv.energy_char],
        });
    }
    Ok((design, schedule))
}

/// Evaluates the objective terms from a solution.
pub fn cost_breakdown(inst: &ProblemInstance, built: &BuiltModel, values: &[f64]) -> CostBreakdown {
    let tau = inst.grid.tau();
    let mut energy = 0.0;
    for lv in &built.legs {
        let origin = inst.leg(lv.leg).origin;
        for (s, slot) in lv.slots() {
            for (c, ch) in inst.chargers.iter().enumerate() {
                energy +=
                    tau * inst.price(origin, slot) * values[lv.type_power[s][c]] / ch.efficiency;
            }
        }
    }
    let infrastructure = built
        .charger_counts
        .iter()
        .map(|(&(_, c), &x)| inst.chargers[c].capital_cost * values[x])
        .sum();
    let peak = built.peak_costs.values().map(|&v| values[v]).sum();
    let p = &inst.params;
    CostBreakdown {
        energy,
        infrastructure,
        peak,
        total: p.gamma_energy * energy + infrastructure + p.alpha_peak * peak,
    }
}
