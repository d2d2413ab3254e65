#![allow(dead_code)]

pub mod oracle;

use chargeplan::domain::ProblemInstance;
use chargeplan::generator::{generate_instance, GeneratorConfig};
use chargeplan::milp::{BnbParams, OptimizeOptions};

/// Synthetic fleet on an hourly grid.
pub fn fleet(trucks: u32, days: u32, seed: u64) -> ProblemInstance {
    let cfg = GeneratorConfig {
        seed,
        slot_minutes: 60,
        ..GeneratorConfig::for_fleet(trucks, days)
    };
    generate_instance(&cfg).expect("generated instance")
}

/// Heuristic plan only, for fleets too large for the root relaxation.
pub fn heuristic_only() -> OptimizeOptions {
    OptimizeOptions {
        bnb: BnbParams {
            node_limit: 0,
            ..BnbParams::default()
        },
        lp_guided: false,
        ..OptimizeOptions::default()
    }
}
