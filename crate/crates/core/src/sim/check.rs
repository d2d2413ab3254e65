//! Invariant scan over an event log.

use std::collections::BTreeMap;

use super::engine::SimSetup;
use super::log::{EventLog, RecordKind};

/// Tolerance on energy bounds, kWh.
const ENERGY_TOL: f64 = 1e-9;

/// Lists every violated invariant: monotone time, contracted power at each
/// power sample, concurrent sessions per type within the installed count,
/// and on-board energy within `[0, battery]`.
pub fn check_log(log: &EventLog, setup: &SimSetup<'_>) -> Vec<String> {
    let inst = setup.inst;
    let mut out = Vec::new();
    if !log.is_monotone() {
        out.push("timestamps are not monotone".to_string());
    }
    let mut busy: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for r in &log.records {
        match r.kind {
            RecordKind::Power { kw } => {
                if let Some(p) = setup.contracted_kw(r.location) {
                    if kw > p {
                        out.push(format!(
                            "{} kW at location {} exceeds {p} kW at t={}",
                            kw, r.location, r.time_h
                        ));
                    }
                }
            }
            RecordKind::SessionStart { charger, .. } => {
                let n = busy.entry((r.location, charger)).or_default();
                *n += 1;
                let cap = setup.design.count(r.location, charger);
                if *n > cap {
                    out.push(format!(
                        "{n} sessions of type {charger} at location {} with {cap} installed, t={}",
                        r.location, r.time_h
                    ));
                }
            }
            RecordKind::SessionEnd { charger, .. } => {
                *busy.entry((r.location, charger)).or_default() -= 1;
            }
            RecordKind::Depart { energy } | RecordKind::Arrive { energy, .. } => {
                let cap = r
                    .truck
                    .map_or(f64::INFINITY, |k| inst.vehicles[k].battery_kwh);
                if !(energy >= -ENERGY_TOL && energy <= cap + ENERGY_TOL) {
                    out.push(format!("energy {energy} out of range at t={}", r.time_h));
                }
            }
            _ => {}
        }
    }
    out
}
