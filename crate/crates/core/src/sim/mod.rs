//! Agent-based simulation of trucks, charger queues and charging policies.

mod check;
mod engine;
mod log;
mod montecarlo;
mod perturb;
mod policy;

pub use check::check_log;
pub use engine::{run_rng, run_seeded, run_simulation, Policy, SimSetup};
pub use log::{EventLog, Record, RecordKind, TruckState, LOG_HEADER};
pub use montecarlo::run_monte_carlo;
pub use perturb::{sample_perturbation, LegNoise, Realization, StochasticConfig};
pub use policy::{
    charger_choice, location_gate, rule_charge_amount, rule_policy, schedule_directives, Directive,
    RuleDecision,
};
