//! Synthetic instances shaped like a grocery distribution fleet: one depot
//! with chargers, retailers scattered around it, multi-drop delivery tours
//! starting in the early morning, and hourly day-shaped energy prices.
//!
//! Every itinerary closes with a zero-length leg from the depot to itself
//! on the last evening, the only leg with equal origin and destination, so
//! trucks can recharge to the boundary level before the horizon ends.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    leg_energy, validate_instance, ChargerDoc, DistanceDoc, InstanceDocument, ItineraryDoc, LegDoc,
    LocationDoc, ParamsDoc, PriceSeriesDoc, ProblemInstance, TimeGridDoc, TripLeg, Vehicle,
    VehicleDoc, DEFAULT_MIN_ENERGY_FRACTION,
};
use crate::error::{Error, Result};
use crate::milp::vehicle_can_complete;

/// Hour of the last day at which the closing stand-still leg departs.
const PARKING_HOUR: f64 = 22.0;

/// Attempts per truck before the generator gives up on an itinerary.
const ATTEMPTS: u64 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruckCounts {
    pub rigid: u32,
    pub euro: u32,
    pub city: u32,
}

impl Default for TruckCounts {
    fn default() -> Self {
        Self {
            rigid: 20,
            euro: 50,
            city: 30,
        }
    }
}

impl TruckCounts {
    pub fn total(&self) -> u32 {
        self.rigid + self.euro + self.city
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub trucks: TruckCounts,
    /// Depot plus retailers.
    pub location_count: u32,
    /// Mean deliveries each retailer receives per day.
    pub deliveries_per_location_per_day: f64,
    /// Mean tonnage each retailer receives per day.
    pub daily_tonnage: f64,
    pub horizon_days: u32,
    /// Lowest and highest energy price per kWh.
    pub price_range: [f64; 2],
    pub slot_minutes: u32,
    pub start_date: NaiveDate,
    /// Overrides the delivery rate with a fixed mean number of legs per
    /// truck and day.
    pub legs_per_truck_per_day: Option<f64>,
    pub max_drops_per_tour: u32,
    pub radius_km: f64,
    /// Road distance over straight-line distance.
    pub road_factor: f64,
    pub speed_kmh: f64,
    pub load_h: f64,
    pub unload_h: f64,
    /// Time at the depot between the end of a tour and the next departure.
    pub turnaround_h: f64,
    /// Width of departure and arrival windows, raised to one slot if shorter.
    pub window_minutes: u32,
    /// Share of tours with refrigerated cargo.
    pub cold_fraction: f64,
    /// Share of first daily departures drawn before 03:00.
    pub early_start_fraction: f64,
    /// Latest planned return to the depot, hours after midnight.
    pub latest_return_hour: f64,
    /// Peak connection cost at the depot per kW over the horizon.
    pub peak_cost_rate: f64,
    /// Multiplies the scaled charger capital costs.
    pub capital_cost_scale: f64,
    pub params: ParamsDoc,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trucks: TruckCounts::default(),
            location_count: 356,
            deliveries_per_location_per_day: 2.15,
            daily_tonnage: 29.28,
            horizon_days: 7,
            price_range: [0.043, 0.151],
            slot_minutes: 15,
            start_date: NaiveDate::from_ymd_opt(2023, 11, 6).expect("valid date"),
            legs_per_truck_per_day: None,
            max_drops_per_tour: 3,
            radius_km: 25.0,
            road_factor: 1.3,
            speed_kmh: 50.0,
            load_h: 0.5,
            unload_h: 1.0 / 3.0,
            turnaround_h: 1.5,
            window_minutes: 30,
            cold_fraction: 0.3,
            early_start_fraction: 0.03,
            latest_return_hour: 22.0,
            peak_cost_rate: 1.0,
            capital_cost_scale: 1.0,
            params: ParamsDoc::default(),
        }
    }
}

impl GeneratorConfig {
    /// Case-study fleet shrunk to `trucks` vehicles over `days` days, with
    /// the same truck mix and retailers per truck.
    pub fn for_fleet(trucks: u32, days: u32) -> Self {
        let base = Self::default();
        let rigid = (trucks as f64 * 0.2).round() as u32;
        let euro = (trucks as f64 * 0.5).round() as u32;
        let per_truck = f64::from(base.location_count - 1) / f64::from(base.trucks.total());
        Self {
            trucks: TruckCounts {
                rigid,
                euro,
                city: trucks - rigid - euro,
            },
            location_count: (f64::from(trucks) * per_truck).round() as u32 + 1,
            horizon_days: days,
            ..base
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let t = &self.trucks;
        if t.total() == 0 {
            return bad("the fleet has no trucks");
        }
        if self.location_count < 2 {
            return bad("need a depot and at least one retailer");
        }
        if self.horizon_days == 0 || self.slot_minutes == 0 || (24 * 60) % self.slot_minutes != 0 {
            return bad("horizon days must be positive and slots must divide a day");
        }
        if !(self.price_range[0] < self.price_range[1]) || self.price_range[0] < 0.0 {
            return bad("price range needs 0 <= min < max");
        }
        if !(self.deliveries_per_location_per_day > 0.0 && self.daily_tonnage > 0.0) {
            return bad("delivery rate and tonnage must be positive");
        }
        if let Some(l) = self.legs_per_truck_per_day {
            if !(l >= 2.0) {
                return bad("a tour has at least two legs per day");
            }
        }
        if self.max_drops_per_tour == 0 {
            return bad("tours need at least one drop");
        }
        let positive = [self.radius_km, self.road_factor, self.speed_kmh];
        if positive.iter().any(|&x| !(x > 0.0)) {
            return bad("radius, road factor and speed must be positive");
        }
        let non_negative = [
            self.load_h,
            self.unload_h,
            self.turnaround_h,
            self.peak_cost_rate,
            self.capital_cost_scale,
        ];
        if non_negative.iter().any(|&x| !(x >= 0.0)) {
            return bad("durations and cost factors must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.cold_fraction)
            || !(0.0..=1.0).contains(&self.early_start_fraction)
        {
            return bad("fractions must lie in [0, 1]");
        }
        if !(self.latest_return_hour > 6.0 && self.latest_return_hour <= 23.5) {
            return bad("latest return must lie in (6, 23.5] hours");
        }
        Ok(())
    }

    /// Window width in minutes, at least one slot so floored windows never
    /// close before they open.
    pub fn effective_window(&self) -> i64 {
        i64::from(self.window_minutes.max(self.slot_minutes))
    }

    /// Mean deliveries per truck and day implied by the delivery rate.
    pub fn deliveries_per_truck_per_day(&self) -> f64 {
        self.deliveries_per_location_per_day * f64::from(self.location_count - 1)
            / f64::from(self.trucks.total())
    }
}

struct TruckKind {
    name: &'static str,
    empty_weight_t: f64,
    max_load_t: f64,
    battery_kwh: f64,
    consumption_kwh_per_tkm: f64,
}

const KINDS: [TruckKind; 3] = [
    TruckKind {
        name: "rigid",
        empty_weight_t: 10.0,
        max_load_t: 8.0,
        battery_kwh: 225.0,
        consumption_kwh_per_tkm: 0.08,
    },
    TruckKind {
        name: "euro",
        empty_weight_t: 14.0,
        max_load_t: 10.0,
        battery_kwh: 315.0,
        consumption_kwh_per_tkm: 0.06,
    },
    TruckKind {
        name: "city",
        empty_weight_t: 14.5,
        max_load_t: 10.0,
        battery_kwh: 315.0,
        consumption_kwh_per_tkm: 0.058,
    },
];

const AUX_KWH_PER_H: f64 = 2.0;
const COOLING_KWH_PER_H: f64 = 3.0;

/// The charger catalog: rated kW, efficiency and scaled capital cost.
pub const CATALOG: [(f64, f64, f64); 5] = [
    (60.0, 0.98, 0.08),
    (180.0, 0.98, 0.16),
    (360.0, 0.97, 0.33),
    (720.0, 0.97, 0.5),
    (1080.0, 0.97, 1.0),
];

/// Relative price level per hour of the day, 0 cheapest and 1 dearest.
const DAY_SHAPE: [f64; 24] = [
    0.05, 0.0, 0.0, 0.02, 0.08, 0.2, 0.45, 0.75, 0.9, 0.7, 0.5, 0.4, 0.35, 0.3, 0.35, 0.45, 0.65,
    0.9, 1.0, 0.9, 0.7, 0.45, 0.25, 0.12,
];

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la1, lo1) = (a.0.to_radians(), a.1.to_radians());
    let (la2, lo2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2)
        + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().asin()
}

struct Geography {
    coords: Vec<(f64, f64)>,
}

impl Geography {
    const DEPOT: (f64, f64) = (51.44, 5.47);

    fn sample(cfg: &GeneratorConfig) -> Self {
        let mut rng = stream(cfg.seed, 1);
        let mut coords = vec![Self::DEPOT];
        let km_lat = 111.32;
        let km_lon = 111.32 * Self::DEPOT.0.to_radians().cos();
        for _ in 1..cfg.location_count {
            let r = cfg.radius_km * rng.gen::<f64>().sqrt();
            let a = rng.gen::<f64>() * std::f64::consts::TAU;
            let lat = Self::DEPOT.0 + r * a.sin() / km_lat;
            let lon = Self::DEPOT.1 + r * a.cos() / km_lon;
            coords.push(((lat * 1e5).round() / 1e5, (lon * 1e5).round() / 1e5));
        }
        Self { coords }
    }

    fn km(&self, cfg: &GeneratorConfig, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        (haversine_km(self.coords[a], self.coords[b]) * cfg.road_factor * 10.0).round() / 10.0
    }
}

fn location_id(i: usize) -> String {
    if i == 0 {
        "depot".to_string()
    } else {
        format!("r{i:03}")
    }
}

fn price_series(cfg: &GeneratorConfig, start: NaiveDateTime) -> PriceSeriesDoc {
    let mut rng = stream(cfg.seed, 2);
    let [lo, hi] = cfg.price_range;
    let values = (0..cfg.horizon_days * 24)
        .map(|h| {
            let level = (DAY_SHAPE[(h % 24) as usize] + rng.gen_range(-0.08..0.08)).clamp(0.0, 1.0);
            ((lo + (hi - lo) * level) * 1e4).round() / 1e4
        })
        .collect();
    PriceSeriesDoc {
        start,
        resolution_minutes: 60,
        values,
    }
}

/// Planned leg with times in minutes from the horizon start.
struct PlannedLeg {
    origin: usize,
    destination: usize,
    km: f64,
    payload_t: f64,
    cold: bool,
    depart: i64,
    travel: i64,
    load_h: f64,
    unload_h: f64,
}

/// Splits `legs` into tours of at most `max_drops + 1` legs with at least
/// two legs each; returns drops per tour.
fn split_tours(legs: u32, max_drops: u32) -> Vec<u32> {
    if legs < 2 {
        return Vec::new();
    }
    let tours = legs.div_ceil(max_drops + 1);
    let base = legs / tours;
    let extra = legs % tours;
    (0..tours)
        .map(|i| base + u32::from(i < extra) - 1)
        .collect()
}

fn tour_energy(kind: &TruckKind, legs: &[PlannedLeg]) -> f64 {
    let v = vehicle_of(kind, String::new());
    legs.iter().map(|l| leg_energy(&v, &trip_of(l))).sum()
}

fn vehicle_of(kind: &TruckKind, id: String) -> Vehicle {
    Vehicle {
        id,
        kind: kind.name.to_string(),
        battery_kwh: kind.battery_kwh,
        min_energy_kwh: DEFAULT_MIN_ENERGY_FRACTION * kind.battery_kwh,
        empty_weight_t: kind.empty_weight_t,
        max_load_t: kind.max_load_t,
        consumption_kwh_per_tkm: kind.consumption_kwh_per_tkm,
        aux_kwh_per_h: AUX_KWH_PER_H,
        cooling_kwh_per_h: COOLING_KWH_PER_H,
        soc_boundary: crate::domain::DEFAULT_SOC_BOUNDARY,
        itinerary: Vec::new(),
    }
}

fn trip_of(l: &PlannedLeg) -> TripLeg {
    TripLeg {
        origin: l.origin,
        destination: l.destination,
        distance_km: l.km,
        payload_t: l.payload_t,
        cold: l.cold,
        dep_earliest: 0,
        dep_latest: 0,
        arr_earliest: 0,
        arr_latest: 0,
        travel_h: l.travel as f64 / 60.0,
        load_h: l.load_h,
        unload_h: l.unload_h,
    }
}

/// Plans one truck's itinerary over the horizon.
fn plan_truck(
    cfg: &GeneratorConfig,
    geo: &Geography,
    kind: &TruckKind,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlannedLeg>> {
    let retailers = cfg.location_count as usize - 1;
    let beta = cfg.params.beta_slack_minutes.max(0.0).ceil() as i64;
    let slot = i64::from(cfg.slot_minutes);
    let usable = kind.battery_kwh * (1.0 - DEFAULT_MIN_ENERGY_FRACTION);
    let per_drop_t = cfg.daily_tonnage / cfg.deliveries_per_location_per_day;
    let mut out: Vec<PlannedLeg> = Vec::new();
    let mut carry = rng.gen::<f64>();
    for day in 0..i64::from(cfg.horizon_days) {
        let tours = match cfg.legs_per_truck_per_day {
            Some(l) => {
                let legs = (l + carry).floor();
                carry += l - legs;
                split_tours(legs as u32, cfg.max_drops_per_tour)
            }
            None => {
                let d = cfg.deliveries_per_truck_per_day();
                let drops = (d + carry).floor();
                carry += d - drops;
                let drops = drops as u32;
                let n = drops.div_ceil(cfg.max_drops_per_tour);
                (0..n)
                    .map(|i| drops / n + u32::from(i < drops % n))
                    .collect()
            }
        };
        let day_start = day * 24 * 60;
        let first = if rng.gen_bool(cfg.early_start_fraction) {
            rng.gen_range(120..180)
        } else {
            rng.gen_range(180..=360)
        };
        let mut t = day_start + first / 5 * 5;
        let mut latest_return_h = cfg.latest_return_hour;
        if day + 1 == i64::from(cfg.horizon_days) {
            latest_return_h = latest_return_h.min(PARKING_HOUR - cfg.turnaround_h);
        }
        let latest_return = day_start + (latest_return_h * 60.0) as i64;
        for drops in tours {
            if drops == 0 {
                continue;
            }
            let cold = rng.gen_bool(cfg.cold_fraction);
            let mut tour = None;
            for _ in 0..ATTEMPTS {
                let mut stops: BTreeSet<usize> = BTreeSet::new();
                while stops.len() < (drops as usize).min(retailers) {
                    stops.insert(rng.gen_range(1..=retailers));
                }
                let mut stops: Vec<usize> = stops.into_iter().collect();
                // Visit stops nearest-neighbour from the depot.
                let mut route = vec![0];
                while !stops.is_empty() {
                    let cur = *route.last().expect("route starts at the depot");
                    let (i, _) = stops
                        .iter()
                        .enumerate()
                        .min_by(|a, b| geo.km(cfg, cur, *a.1).total_cmp(&geo.km(cfg, cur, *b.1)))
                        .expect("stops left");
                    route.push(stops.swap_remove(i));
                }
                route.push(0);
                let drop_t: Vec<f64> = (0..route.len() - 2)
                    .map(|_| {
                        per_drop_t.min(kind.max_load_t / f64::from(drops))
                            * rng.gen_range(0.85..1.0)
                    })
                    .map(|w| (w * 100.0).floor() / 100.0)
                    .collect();
                let mut legs = Vec::new();
                let mut clock = t;
                for (i, pair) in route.windows(2).enumerate() {
                    let km = geo.km(cfg, pair[0], pair[1]);
                    let travel = (km / cfg.speed_kmh * 60.0).ceil() as i64;
                    // Handling after arrival: unloading at a retailer,
                    // loading the next tour at the depot.
                    let (load_h, unload_h) = if pair[1] == 0 {
                        (cfg.load_h, 0.0)
                    } else {
                        (0.0, cfg.unload_h)
                    };
                    legs.push(PlannedLeg {
                        origin: pair[0],
                        destination: pair[1],
                        km,
                        payload_t: drop_t[i.min(drop_t.len())..].iter().sum(),
                        cold,
                        depart: clock,
                        travel,
                        load_h,
                        unload_h,
                    });
                    clock += travel + beta + ((load_h + unload_h) * 60.0).ceil() as i64;
                    clock = up_to_5(clock);
                }
                if tour_energy(kind, &legs) <= 0.9 * usable {
                    tour = Some((legs, clock));
                    break;
                }
            }
            let Some((legs, end)) = tour else {
                return Err(Error::Generation {
                    constraint: "tour energy within the usable battery".into(),
                    detail: format!(
                        "no {drops}-drop tour of a {} truck fits in {usable:.0} kWh within {} km",
                        kind.name, cfg.radius_km
                    ),
                });
            };
            let arrive = legs
                .last()
                .map_or(end, |l| l.depart + l.travel + beta + cfg.effective_window());
            if arrive > latest_return {
                break;
            }
            out.extend(legs);
            let next = end + (cfg.turnaround_h * 60.0).ceil() as i64 + slot;
            t = up_to_5(next);
        }
    }
    if !out.is_empty() {
        // Stand-still leg at the depot so the week can end with a charge.
        out.push(PlannedLeg {
            origin: 0,
            destination: 0,
            km: 0.0,
            payload_t: 0.0,
            cold: false,
            depart: (i64::from(cfg.horizon_days) - 1) * 24 * 60 + (PARKING_HOUR * 60.0) as i64,
            travel: 0,
            load_h: 0.0,
            unload_h: 0.0,
        });
    }
    Ok(out)
}

/// Rounds non-negative minutes up to a multiple of five.
fn up_to_5(m: i64) -> i64 {
    (m + 4) / 5 * 5
}

fn leg_doc(cfg: &GeneratorConfig, start: NaiveDateTime, l: &PlannedLeg) -> LegDoc {
    let at = |m: i64| start + Duration::minutes(m);
    let w = cfg.effective_window();
    let beta = cfg.params.beta_slack_minutes.max(0.0).ceil() as i64;
    let slot = i64::from(cfg.slot_minutes);
    let last = i64::from(cfg.horizon_days) * 24 * 60 - slot;
    LegDoc {
        origin: location_id(l.origin),
        destination: location_id(l.destination),
        distance_km: l.km,
        payload_t: l.payload_t,
        cold: l.cold,
        departure_earliest: at(l.depart),
        departure_latest: at((l.depart + w).min(last)),
        // Floored to the grid so ceiling it onto slots never delays the
        // planned arrival.
        arrival_earliest: at((l.depart + l.travel) / slot * slot),
        arrival_latest: at((l.depart + l.travel + beta + w).min(last)),
        travel_h: l.travel as f64 / 60.0,
        load_h: l.load_h,
        unload_h: l.unload_h,
    }
}

/// Generates the instance document for `cfg`.
pub fn generate_document(cfg: &GeneratorConfig) -> Result<InstanceDocument> {
    cfg.check()?;
    let start = cfg.start_date.and_hms_opt(0, 0, 0).expect("midnight");
    let geo = Geography::sample(cfg);
    let slot_count = cfg.horizon_days * 24 * 60 / cfg.slot_minutes;

    let chargers: Vec<ChargerDoc> = CATALOG
        .iter()
        .map(|&(kw, eff, cost)| ChargerDoc {
            id: format!("dc{kw:.0}"),
            power_kw: kw,
            efficiency: eff,
            capital_cost: cost * cfg.capital_cost_scale,
        })
        .collect();

    let kinds: Vec<&TruckKind> = [
        (&KINDS[0], cfg.trucks.rigid),
        (&KINDS[1], cfg.trucks.euro),
        (&KINDS[2], cfg.trucks.city),
    ]
    .into_iter()
    .flat_map(|(k, n)| std::iter::repeat_n(k, n as usize))
    .collect();
    let mut vehicles = Vec::new();
    let mut itineraries = Vec::new();
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut doc = InstanceDocument {
        time_grid: TimeGridDoc {
            horizon_start: start,
            slot_minutes: cfg.slot_minutes,
            slot_count,
        },
        chargers,
        vehicles: Vec::new(),
        locations: Vec::new(),
        energy_prices: price_series(cfg, start),
        distances: Vec::new(),
        itineraries: Vec::new(),
        params: cfg.params.clone(),
    };

    for (k, kind) in kinds.iter().enumerate() {
        let id = format!("{}-{:03}", kind.name, k + 1);
        let mut accepted = None;
        for attempt in 0..ATTEMPTS {
            let mut rng = stream(cfg.seed, 1000 + (k as u64) * ATTEMPTS + attempt);
            let legs = plan_truck(cfg, &geo, kind, &mut rng)?;
            let mut v = vehicle_of(kind, id.clone());
            v.itinerary = legs
                .iter()
                .map(|l| slotted(&doc, l, &leg_doc(cfg, start, l)))
                .collect();
            if legs.is_empty() || single_vehicle_ok(&doc, &v) {
                accepted = Some(legs);
                break;
            }
        }
        let Some(legs) = accepted else {
            return Err(Error::Generation {
                constraint: "itinerary completable with the fastest charger".into(),
                detail: format!("truck {id}: no attempt leaves enough charging time between tours"),
            });
        };
        for l in &legs {
            used.insert((l.origin.min(l.destination), l.origin.max(l.destination)));
        }
        vehicles.push(VehicleDoc {
            id: id.clone(),
            kind: kind.name.to_string(),
            battery_kwh: kind.battery_kwh,
            min_energy_kwh: None,
            empty_weight_t: kind.empty_weight_t,
            max_load_t: kind.max_load_t,
            consumption_kwh_per_tkm: kind.consumption_kwh_per_tkm,
            aux_kwh_per_h: AUX_KWH_PER_H,
            cooling_kwh_per_h: COOLING_KWH_PER_H,
            soc_boundary: None,
        });
        itineraries.push(ItineraryDoc {
            vehicle: id,
            legs: legs.iter().map(|l| leg_doc(cfg, start, l)).collect(),
        });
    }

    doc.locations = geo
        .coords
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| LocationDoc {
            id: location_id(i),
            latitude: lat,
            longitude: lon,
            charger_site: i == 0,
            peak_cost_rate: if i == 0 { cfg.peak_cost_rate } else { 0.0 },
            contracted_power_kw: None,
            prices: None,
        })
        .collect();
    doc.distances = used
        .into_iter()
        .map(|(a, b)| DistanceDoc {
            from: location_id(a),
            to: location_id(b),
            km: geo.km(cfg, a, b),
        })
        .collect();
    doc.vehicles = vehicles;
    doc.itineraries = itineraries;
    Ok(doc)
}

/// Slot-indexed leg with placeholder location indices 0/1 standing for
/// depot and elsewhere.
fn slotted(doc: &InstanceDocument, l: &PlannedLeg, d: &LegDoc) -> TripLeg {
    let g = &doc.time_grid;
    let grid = crate::domain::TimeGrid::new(g.horizon_start, g.slot_minutes, g.slot_count);
    let s = |at, ceil| {
        let v = if ceil {
            grid.ceil_slot(at)
        } else {
            grid.floor_slot(at)
        };
        v.max(0) as u32
    };
    TripLeg {
        origin: usize::from(l.origin != 0),
        destination: usize::from(l.destination != 0),
        dep_earliest: s(d.departure_earliest, false),
        dep_latest: s(d.departure_latest, false),
        arr_earliest: s(d.arrival_earliest, true),
        arr_latest: s(d.arrival_latest, true),
        ..trip_of(l)
    }
}

/// Checks one vehicle alone on a two-location copy of the instance: the
/// depot with the full catalog and one stand-in for every retailer.
fn single_vehicle_ok(doc: &InstanceDocument, v: &Vehicle) -> bool {
    let g = &doc.time_grid;
    let grid = crate::domain::TimeGrid::new(g.horizon_start, g.slot_minutes, g.slot_count);
    let prices: Vec<f64> = (0..grid.slot_count)
        .map(|t| doc.energy_prices.at(grid.slot_timestamp(t)).unwrap_or(0.0))
        .collect();
    let loc = |id: &str, site: bool| crate::domain::Location {
        id: id.to_string(),
        latitude: 0.0,
        longitude: 0.0,
        charger_site: site,
        peak_cost_rate: 0.0,
        contracted_power_kw: None,
        prices: prices.clone(),
    };
    let p = &doc.params;
    let inst = ProblemInstance {
        grid,
        chargers: doc
            .chargers
            .iter()
            .map(|c| crate::domain::ChargerType {
                id: c.id.clone(),
                power_kw: c.power_kw,
                efficiency: c.efficiency,
                capital_cost: c.capital_cost,
            })
            .collect(),
        vehicles: vec![v.clone()],
        locations: vec![loc("depot", true), loc("elsewhere", false)],
        distances: crate::domain::DistanceTable::new(),
        params: crate::domain::OptimizationParams {
            alpha_peak: p.alpha_peak,
            beta_slack: p.beta_slack_minutes / f64::from(g.slot_minutes),
            gamma_energy: p.gamma_energy,
            mip_gap: p.mip_gap,
        },
    };
    vehicle_can_complete(&inst, 0)
}

/// Generates, converts and validates an instance.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<ProblemInstance> {
    let inst = generate_document(cfg)?.to_instance()?;
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(inst)
}
