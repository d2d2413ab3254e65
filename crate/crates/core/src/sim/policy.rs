//! Truck charging policies and the location admission gate.

use crate::error::{Error, Result};
use crate::milp::LegSchedule;

/// Energy to charge before a leg under the rule policy: enough to finish
/// the leg with the reserve intact, nothing if that already holds.
pub fn rule_charge_amount(energy: f64, leg_energy: f64, min_energy: f64) -> f64 {
    if energy >= leg_energy + min_energy {
        0.0
    } else {
        leg_energy - energy + min_energy
    }
}

/// Picks the charger type with the shortest queue, preferring the higher
/// power on ties. `installed` lists `(type, rated kW, queue length)`.
pub fn charger_choice(installed: &[(usize, f64, usize)]) -> Result<usize> {
    let mut best: Option<(usize, f64, usize)> = None;
    for &(r, kw, q) in installed {
        let better = match best {
            None => true,
            Some((_, bkw, bq)) => q < bq || (q == bq && kw > bkw),
        };
        if better {
            best = Some((r, kw, q));
        }
    }
    best.map(|b| b.0)
        .ok_or_else(|| Error::Simulation("no charger installed at the location".into()))
}

/// Rule-policy decision for one charging opportunity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleDecision {
    /// Energy to charge in kWh.
    pub amount: f64,
    /// Charger type, `None` when no charge is needed.
    pub charger: Option<usize>,
    /// Power drawn by the battery in kW.
    pub power_kw: f64,
}

impl RuleDecision {
    pub const NONE: RuleDecision = RuleDecision {
        amount: 0.0,
        charger: None,
        power_kw: 0.0,
    };

    pub fn duration_h(&self) -> f64 {
        if self.power_kw > 0.0 {
            self.amount / self.power_kw
        } else {
            0.0
        }
    }
}

/// Charges `amount` (capped by the free battery room) at the full power of
/// the chosen type, capped at the contracted power so a lone truck can
/// always be admitted.
pub fn rule_policy(
    amount: f64,
    room: f64,
    installed: &[(usize, f64, usize)],
    contracted_kw: Option<f64>,
) -> Result<RuleDecision> {
    let amount = amount.min(room).max(0.0);
    if amount <= 0.0 {
        return Ok(RuleDecision::NONE);
    }
    let r = charger_choice(installed)?;
    let rated = installed.iter().find(|i| i.0 == r).map_or(0.0, |i| i.1);
    Ok(RuleDecision {
        amount,
        charger: Some(r),
        power_kw: contracted_kw.map_or(rated, |p| rated.min(p)),
    })
}

/// Whether a truck asking for `demand_kw` may start while the location
/// already draws `current_kw`.
pub fn location_gate(current_kw: f64, demand_kw: f64, contracted_kw: Option<f64>) -> bool {
    contracted_kw.is_none_or(|p| current_kw + demand_kw <= p)
}

/// One scheduled slot of charging, in hours from the horizon start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directive {
    pub start_h: f64,
    pub end_h: f64,
    pub charger: usize,
    pub power_kw: f64,
}

/// Session directives of a leg, in slot order. A missing entry means the
/// truck does not charge before the leg.
pub fn schedule_directives(leg: Option<&LegSchedule>, tau: f64) -> Vec<Directive> {
    leg.map(|l| {
        l.sessions
            .iter()
            .map(|s| Directive {
                start_h: f64::from(s.slot) * tau,
                end_h: f64::from(s.slot + 1) * tau,
                charger: s.charger,
                power_kw: s.power_kw,
            })
            .collect()
    })
    .unwrap_or_default()
}
