//! JSON instance document.
//!
//! Wall-clock times are ISO-8601 local timestamps (`2023-11-06T03:15:00`).
//! Departure bounds are floored and arrival bounds are ceiled onto the slot
//! grid when the document is turned into a [`ProblemInstance`].

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{
    ChargerType, DistanceTable, Location, OptimizationParams, ProblemInstance, TimeGrid, TripLeg,
    Vehicle, DEFAULT_MIN_ENERGY_FRACTION, DEFAULT_SOC_BOUNDARY,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGridDoc {
    pub horizon_start: NaiveDateTime,
    pub slot_minutes: u32,
    pub slot_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerDoc {
    pub id: String,
    pub power_kw: f64,
    pub efficiency: f64,
    pub capital_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleDoc {
    pub id: String,
    #[serde(default)]
    pub kind: String,
    pub battery_kwh: f64,
    /// Defaults to 5% of the battery capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_energy_kwh: Option<f64>,
    pub empty_weight_t: f64,
    pub max_load_t: f64,
    pub consumption_kwh_per_tkm: f64,
    pub aux_kwh_per_h: f64,
    pub cooling_kwh_per_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_boundary: Option<f64>,
}

/// A piecewise-constant price series starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeriesDoc {
    pub start: NaiveDateTime,
    pub resolution_minutes: u32,
    /// Price per kWh for each interval.
    pub values: Vec<f64>,
}

impl PriceSeriesDoc {
    /// Price in force at `at`, if the series covers it.
    pub fn at(&self, at: NaiveDateTime) -> Option<f64> {
        let minutes = (at - self.start).num_minutes();
        if minutes < 0 || self.resolution_minutes == 0 {
            return None;
        }
        self.values
            .get((minutes / i64::from(self.resolution_minutes)) as usize)
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationDoc {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub charger_site: bool,
    #[serde(default)]
    pub peak_cost_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contracted_power_kw: Option<f64>,
    /// Overrides the document-wide price series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceSeriesDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDoc {
    pub from: String,
    pub to: String,
    pub km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegDoc {
    pub origin: String,
    pub destination: String,
    pub distance_km: f64,
    pub payload_t: f64,
    #[serde(default)]
    pub cold: bool,
    pub departure_earliest: NaiveDateTime,
    pub departure_latest: NaiveDateTime,
    pub arrival_earliest: NaiveDateTime,
    pub arrival_latest: NaiveDateTime,
    pub travel_h: f64,
    pub load_h: f64,
    pub unload_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryDoc {
    pub vehicle: String,
    pub legs: Vec<LegDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsDoc {
    pub alpha_peak: f64,
    pub beta_slack_minutes: f64,
    pub gamma_energy: f64,
    pub mip_gap: f64,
}

impl Default for ParamsDoc {
    fn default() -> Self {
        Self {
            alpha_peak: 1.0,
            beta_slack_minutes: 15.0,
            gamma_energy: 1.0,
            mip_gap: 0.01,
        }
    }
}

/// Serialized form of a [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub time_grid: TimeGridDoc,
    pub chargers: Vec<ChargerDoc>,
    pub vehicles: Vec<VehicleDoc>,
    pub locations: Vec<LocationDoc>,
    pub energy_prices: PriceSeriesDoc,
    pub distances: Vec<DistanceDoc>,
    pub itineraries: Vec<ItineraryDoc>,
    #[serde(default)]
    pub params: ParamsDoc,
}

impl InstanceDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Re-discretizes the horizon with a different slot length, keeping the
    /// covered wall-clock span (rounded up to whole slots).
    pub fn regrid(&mut self, slot_minutes: u32) -> Result<()> {
        if slot_minutes == 0 {
            return Err(Error::Config("slot length must be positive".into()));
        }
        let span = self.time_grid.slot_minutes * self.time_grid.slot_count;
        self.time_grid.slot_count = span.div_ceil(slot_minutes);
        self.time_grid.slot_minutes = slot_minutes;
        Ok(())
    }

    /// Resolves identifiers and maps wall-clock windows onto slot indices.
    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let g = &self.time_grid;
        let grid = TimeGrid::new(g.horizon_start, g.slot_minutes, g.slot_count);
        if grid.slot_minutes == 0 {
            return Err(Error::Document("slot length must be positive".into()));
        }
        let mut problems = Vec::new();

        let loc_index: BTreeMap<&str, usize> = self
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.as_str(), i))
            .collect();
        if loc_index.len() != self.locations.len() {
            problems.push("duplicate location id".to_string());
        }
        let veh_index: BTreeMap<&str, usize> = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.as_str(), i))
            .collect();
        if veh_index.len() != self.vehicles.len() {
            problems.push("duplicate vehicle id".to_string());
        }

        let locations = self
            .locations
            .iter()
            .map(|l| {
                let series = l.prices.as_ref().unwrap_or(&self.energy_prices);
                let prices = (0..grid.slot_count)
                    .map_while(|t| series.at(grid.slot_timestamp(t)))
                    .collect();
                Location {
                    id: l.id.clone(),
                    latitude: l.latitude,
                    longitude: l.longitude,
                    charger_site: l.charger_site,
                    peak_cost_rate: l.peak_cost_rate,
                    contracted_power_kw: l.contracted_power_kw,
                    prices,
                }
            })
            .collect();

        let mut distances = DistanceTable::new();
        for d in &self.distances {
            match (loc_index.get(d.from.as_str()), loc_index.get(d.to.as_str())) {
                (Some(&a), Some(&b)) => distances.insert(a, b, d.km),
                _ => problems.push(format!("distance {}-{}: unknown location", d.from, d.to)),
            }
        }

        let mut vehicles: Vec<Vehicle> = self
            .vehicles
            .iter()
            .map(|v| Vehicle {
                id: v.id.clone(),
                kind: v.kind.clone(),
                battery_kwh: v.battery_kwh,
                min_energy_kwh: v
                    .min_energy_kwh
                    .unwrap_or(DEFAULT_MIN_ENERGY_FRACTION * v.battery_kwh),
                empty_weight_t: v.empty_weight_t,
                max_load_t: v.max_load_t,
                consumption_kwh_per_tkm: v.consumption_kwh_per_tkm,
                aux_kwh_per_h: v.aux_kwh_per_h,
                cooling_kwh_per_h: v.cooling_kwh_per_h,
                soc_boundary: v.soc_boundary.unwrap_or(DEFAULT_SOC_BOUNDARY),
                itinerary: Vec::new(),
            })
            .collect();

        let slot = |at: NaiveDateTime, ceil: bool, what: &str, problems: &mut Vec<String>| {
            let s = if ceil {
                grid.ceil_slot(at)
            } else {
                grid.floor_slot(at)
            };
            if s < 0 || s > i64::from(u32::MAX) {
                problems.push(format!("{what} {at} lies outside the horizon"));
                0
            } else {
                s as u32
            }
        };

        for it in &self.itineraries {
            let Some(&k) = veh_index.get(it.vehicle.as_str()) else {
                problems.push(format!("itinerary for unknown vehicle {}", it.vehicle));
                continue;
            };
            for (l, leg) in it.legs.iter().enumerate() {
                let (Some(&origin), Some(&destination)) = (
                    loc_index.get(leg.origin.as_str()),
                    loc_index.get(leg.destination.as_str()),
                ) else {
                    problems.push(format!(
                        "leg {}/{l}: unknown location {} or {}",
                        it.vehicle, leg.origin, leg.destination
                    ));
                    continue;
                };
                let tag = format!("leg {}/{l}", it.vehicle);
                vehicles[k].itinerary.push(TripLeg {
                    origin,
                    destination,
                    distance_km: leg.distance_km,
                    payload_t: leg.payload_t,
                    cold: leg.cold,
                    dep_earliest: slot(leg.departure_earliest, false, &tag, &mut problems),
                    dep_latest: slot(leg.departure_latest, false, &tag, &mut problems),
                    arr_earliest: slot(leg.arrival_earliest, true, &tag, &mut problems),
                    arr_latest: slot(leg.arrival_latest, true, &tag, &mut problems),
                    travel_h: leg.travel_h,
                    load_h: leg.load_h,
                    unload_h: leg.unload_h,
                });
            }
        }

        if !problems.is_empty() {
            return Err(Error::Document(problems.join("; ")));
        }

        let p = &self.params;
        Ok(ProblemInstance {
            grid,
            chargers: self
                .chargers
                .iter()
                .map(|c| ChargerType {
                    id: c.id.clone(),
                    power_kw: c.power_kw,
                    efficiency: c.efficiency,
                    capital_cost: c.capital_cost,
                })
                .collect(),
            vehicles,
            locations,
            distances,
            params: OptimizationParams {
                alpha_peak: p.alpha_peak,
                beta_slack: p.beta_slack_minutes / f64::from(g.slot_minutes),
                gamma_energy: p.gamma_energy,
                mip_gap: p.mip_gap,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2023, 11, 6)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn doc() -> InstanceDocument {
        let at = |m: i64| t0() + Duration::minutes(m);
        InstanceDocument {
            time_grid: TimeGridDoc {
                horizon_start: t0(),
                slot_minutes: 15,
                slot_count: 96,
            },
            chargers: vec![ChargerDoc {
                id: "dc360".into(),
                power_kw: 360.0,
                efficiency: 0.97,
                capital_cost: 0.33,
            }],
            vehicles: vec![VehicleDoc {
                id: "truck-1".into(),
                kind: "euro".into(),
                battery_kwh: 315.0,
                min_energy_kwh: None,
                empty_weight_t: 14.0,
                max_load_t: 10.0,
                consumption_kwh_per_tkm: 0.06,
                aux_kwh_per_h: 2.0,
                cooling_kwh_per_h: 3.0,
                soc_boundary: None,
            }],
            locations: vec![
                LocationDoc {
                    id: "dc".into(),
                    latitude: 53.2,
                    longitude: 6.5,
                    charger_site: true,
                    peak_cost_rate: 1.0,
                    contracted_power_kw: None,
                    prices: None,
                },
                LocationDoc {
                    id: "shop".into(),
                    latitude: 53.3,
                    longitude: 6.6,
                    charger_site: false,
                    peak_cost_rate: 0.0,
                    contracted_power_kw: None,
                    prices: None,
                },
            ],
            energy_prices: PriceSeriesDoc {
                start: t0(),
                resolution_minutes: 60,
                values: (0..24).map(|h| 0.05 + 0.004 * h as f64).collect(),
            },
            distances: vec![DistanceDoc {
                from: "dc".into(),
                to: "shop".into(),
                km: 20.0,
            }],
            itineraries: vec![ItineraryDoc {
                vehicle: "truck-1".into(),
                legs: vec![LegDoc {
                    origin: "dc".into(),
                    destination: "shop".into(),
                    distance_km: 20.0,
                    payload_t: 5.0,
                    cold: true,
                    departure_earliest: at(4 * 60 + 10),
                    departure_latest: at(5 * 60 + 20),
                    arrival_earliest: at(4 * 60 + 40),
                    arrival_latest: at(5 * 60 + 50),
                    travel_h: 0.5,
                    load_h: 0.25,
                    unload_h: 0.25,
                }],
            }],
            params: ParamsDoc::default(),
        }
    }

    #[test]
    fn windows_floor_departures_and_ceil_arrivals() {
        let inst = doc().to_instance().unwrap();
        let leg = &inst.vehicles[0].itinerary[0];
        assert_eq!((leg.dep_earliest, leg.dep_latest), (16, 21));
        assert_eq!((leg.arr_earliest, leg.arr_latest), (19, 24));
        assert_eq!(inst.vehicles[0].min_energy_kwh, 0.05 * 315.0);
        assert_eq!(inst.vehicles[0].soc_boundary, 0.8);
        assert_eq!(inst.params.beta_slack, 1.0);
    }

    #[test]
    fn hourly_prices_expand_to_slots() {
        let inst = doc().to_instance().unwrap();
        let p = &inst.locations[0].prices;
        assert_eq!(p.len(), 96);
        assert_eq!(p[0], 0.05);
        assert_eq!(p[3], 0.05);
        assert!((p[4] - 0.054).abs() < 1e-12);
    }

    #[test]
    fn unknown_reference_is_reported() {
        let mut d = doc();
        d.itineraries[0].legs[0].destination = "nowhere".into();
        let err = d.to_instance().unwrap_err();
        assert!(err.to_string().contains("nowhere"));
    }

    #[test]
    fn json_round_trip() {
        let d = doc();
        let back = InstanceDocument::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn regrid_keeps_span() {
        let mut d = doc();
        d.regrid(60).unwrap();
        assert_eq!(d.time_grid.slot_count, 24);
        let inst = d.to_instance().unwrap();
        assert_eq!(inst.locations[0].prices.len(), 24);
        assert_eq!(inst.params.beta_slack, 0.25);
    }
}
