//! Charging infrastructure and schedule planning for battery-electric truck
//! fleets, with a stochastic simulator to evaluate plans.

pub mod domain;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod generator;
pub mod metrics;
pub mod milp;
pub mod num;
pub mod sim;

pub use error::{Error, Result};
pub use num::Scalar;
