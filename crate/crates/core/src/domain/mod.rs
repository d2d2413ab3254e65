//! Fleet, charger, location and itinerary data shared by the optimizer and
//! the simulator.
//!
//! All quantities use the units of the instance document: energies in kWh,
//! powers in kW, distances in km, weights in tons, durations in hours.
//! Itinerary time windows are stored as slot indices of the [`TimeGrid`].

mod document;
mod energy;
mod validate;
mod window;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub use document::{
    ChargerDoc, DistanceDoc, InstanceDocument, ItineraryDoc, LegDoc, LocationDoc, ParamsDoc,
    PriceSeriesDoc, TimeGridDoc, VehicleDoc,
};
pub use energy::leg_energy;
pub use validate::{validate_instance, Violation, ViolationKind};
pub use window::{charging_window, ChargingWindow};

/// Default fraction of battery capacity kept as reserve when a vehicle does
/// not specify its own minimum energy.
pub const DEFAULT_MIN_ENERGY_FRACTION: f64 = 0.05;

/// Default state-of-energy fraction at the start and end of the horizon.
pub const DEFAULT_SOC_BOUNDARY: f64 = 0.8;

/// Uniform discretization of the planning horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon_start: NaiveDateTime,
    /// Slot length in minutes.
    pub slot_minutes: u32,
    pub slot_count: u32,
}

impl TimeGrid {
    pub fn new(horizon_start: NaiveDateTime, slot_minutes: u32, slot_count: u32) -> Self {
        Self {
            horizon_start,
            slot_minutes,
            slot_count,
        }
    }

    /// Slot length in hours.
    #[inline]
    pub fn tau(&self) -> f64 {
        f64::from(self.slot_minutes) / 60.0
    }

    #[inline]
    pub fn horizon_hours(&self) -> f64 {
        self.tau() * f64::from(self.slot_count)
    }

    /// Start of slot `t` in hours from the horizon start.
    #[inline]
    pub fn slot_start_hours(&self, slot: u32) -> f64 {
        self.tau() * f64::from(slot)
    }

    /// Slot containing the instant `hours` (clamped to the grid).
    pub fn slot_at(&self, hours: f64) -> u32 {
        if hours <= 0.0 || self.slot_count == 0 {
            return 0;
        }
        let slot = (hours / self.tau()).floor() as u64;
        slot.min(u64::from(self.slot_count - 1)) as u32
    }

    pub fn slot_timestamp(&self, slot: u32) -> NaiveDateTime {
        self.horizon_start + Duration::minutes(i64::from(slot) * i64::from(self.slot_minutes))
    }

    fn minutes_from_start(&self, at: NaiveDateTime) -> i64 {
        (at - self.horizon_start).num_minutes()
    }

    /// Slot index of a wall-clock instant, rounding down.
    pub fn floor_slot(&self, at: NaiveDateTime) -> i64 {
        self.minutes_from_start(at)
            .div_euclid(i64::from(self.slot_minutes))
    }

    /// Slot index of a wall-clock instant, rounding up.
    pub fn ceil_slot(&self, at: NaiveDateTime) -> i64 {
        let m = self.minutes_from_start(at);
        let s = i64::from(self.slot_minutes);
        m.div_euclid(s) + i64::from(m.rem_euclid(s) != 0)
    }
}

/// A charger model that can be installed at a charger site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerType {
    pub id: String,
    /// Rated output power in kW.
    pub power_kw: f64,
    /// Grid-to-battery efficiency in (0, 1].
    pub efficiency: f64,
    /// Capital cost per unit over the analysis period.
    pub capital_cost: f64,
}

/// One leg of a vehicle itinerary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripLeg {
    pub origin: usize,
    pub destination: usize,
    pub distance_km: f64,
    pub payload_t: f64,
    /// Refrigerated cargo.
    pub cold: bool,
    pub dep_earliest: u32,
    pub dep_latest: u32,
    pub arr_earliest: u32,
    pub arr_latest: u32,
    pub travel_h: f64,
    pub load_h: f64,
    pub unload_h: f64,
}

/// A battery-electric truck with its itinerary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: String,
    pub kind: String,
    pub battery_kwh: f64,
    pub min_energy_kwh: f64,
    pub empty_weight_t: f64,
    pub max_load_t: f64,
    pub consumption_kwh_per_tkm: f64,
    pub aux_kwh_per_h: f64,
    /// Refrigeration draw per hour of travel.
    pub cooling_kwh_per_h: f64,
    /// State-of-energy fraction required at the start and end of the horizon.
    pub soc_boundary: f64,
    pub itinerary: Vec<TripLeg>,
}

impl Vehicle {
    #[inline]
    pub fn boundary_energy(&self) -> f64 {
        self.soc_boundary * self.battery_kwh
    }
}

/// A depot or retailer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
    /// Whether chargers may be installed here.
    pub charger_site: bool,
    /// Prorated connection cost per kW of peak power over the analysis period.
    pub peak_cost_rate: f64,
    /// Contracted grid connection in kW; used only by the simulator.
    pub contracted_power_kw: Option<f64>,
    /// Energy price per kWh for every slot of the grid.
    pub prices: Vec<f64>,
}

/// Symmetric sparse table of road distances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    entries: std::collections::BTreeMap<(usize, usize), f64>,
}

impl DistanceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: usize, b: usize, km: f64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.entries.insert(key, km);
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        if a == b {
            return Some(self.entries.get(&(a, a)).copied().unwrap_or(0.0));
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        self.entries.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(a, b), &d)| (a, b, d))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Tuning knobs of the cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationParams {
    /// Multiplier on the peak connection cost.
    pub alpha_peak: f64,
    /// Schedule slack in slots (may be fractional when the slack is not a
    /// whole number of slots).
    pub beta_slack: f64,
    /// Multiplier on the energy cost.
    pub gamma_energy: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub mip_gap: f64,
}

impl OptimizationParams {
    /// Case-study defaults for a grid with the given slot length.
    pub fn with_slot_minutes(slot_minutes: u32) -> Self {
        Self {
            alpha_peak: 1.0,
            beta_slack: 15.0 / f64::from(slot_minutes),
            gamma_energy: 1.0,
            mip_gap: 0.01,
        }
    }
}

impl Default for OptimizationParams {
    fn default() -> Self {
        Self::with_slot_minutes(15)
    }
}

/// Identifies leg `leg` (0-based) of vehicle `vehicle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LegRef {
    pub vehicle: usize,
    pub leg: usize,
}

/// Complete input of the planning problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub grid: TimeGrid,
    pub chargers: Vec<ChargerType>,
    pub vehicles: Vec<Vehicle>,
    pub locations: Vec<Location>,
    pub distances: DistanceTable,
    pub params: OptimizationParams,
}

impl ProblemInstance {
    pub fn leg(&self, r: LegRef) -> &TripLeg {
        &self.vehicles[r.vehicle].itinerary[r.leg]
    }

    pub fn legs(&self) -> impl Iterator<Item = (LegRef, &TripLeg)> + '_ {
        self.vehicles.iter().enumerate().flat_map(|(k, v)| {
            v.itinerary
                .iter()
                .enumerate()
                .map(move |(l, leg)| (LegRef { vehicle: k, leg: l }, leg))
        })
    }

    pub fn leg_count(&self) -> usize {
        self.vehicles.iter().map(|v| v.itinerary.len()).sum()
    }

    pub fn charger_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.locations
            .iter()
            .enumerate()
            .filter(|(_, l)| l.charger_site)
            .map(|(i, _)| i)
    }

    /// Energy consumed on a leg.
    pub fn leg_energy(&self, r: LegRef) -> f64 {
        leg_energy(&self.vehicles[r.vehicle], self.leg(r))
    }

    /// Slot window in which the vehicle may charge before the leg.
    pub fn charging_window(&self, r: LegRef) -> ChargingWindow {
        charging_window(
            &self.grid,
            &self.vehicles[r.vehicle].itinerary,
            r.leg,
            self.params.beta_slack,
        )
    }

    /// Whether the leg departs from a charger site with a non-empty window.
    pub fn can_charge_before(&self, r: LegRef) -> bool {
        let leg = self.leg(r);
        self.locations
            .get(leg.origin)
            .is_some_and(|loc| loc.charger_site)
            && !self.charging_window(r).is_empty()
    }

    pub fn price(&self, location: usize, slot: u32) -> f64 {
        self.locations[location].prices[slot as usize]
    }
}
