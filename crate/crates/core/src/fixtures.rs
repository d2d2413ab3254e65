//! Small hand-sized instances for tests, examples and benchmarks.
//!
//! Micro instances use a 10 km depot-to-shop link and vehicles with an empty
//! weight of 1 t and 0.1 kWh/(t km), so a leg with payload `w` consumes
//! exactly `w + 1` kWh.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    ChargerType, DistanceTable, Location, OptimizationParams, ProblemInstance, TimeGrid, TripLeg,
    Vehicle,
};

pub const DEPOT: usize = 0;
pub const SHOP: usize = 1;
const LINK_KM: f64 = 10.0;

pub fn charger(id: &str, power_kw: f64, efficiency: f64, capital_cost: f64) -> ChargerType {
    ChargerType {
        id: id.to_string(),
        power_kw,
        efficiency,
        capital_cost,
    }
}

/// Leg of a micro instance consuming `energy_kwh`.
#[derive(Debug, Clone)]
pub struct MicroLeg {
    pub origin: usize,
    pub destination: usize,
    pub energy_kwh: f64,
    pub dep: (u32, u32),
    pub arr: (u32, u32),
    pub travel_h: f64,
    pub load_h: f64,
    pub unload_h: f64,
}

impl MicroLeg {
    pub fn new(
        origin: usize,
        destination: usize,
        energy_kwh: f64,
        dep: (u32, u32),
        arr: (u32, u32),
    ) -> Self {
        Self {
            origin,
            destination,
            energy_kwh,
            dep,
            arr,
            travel_h: 0.25,
            load_h: 0.0,
            unload_h: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MicroVehicle {
    pub battery_kwh: f64,
    pub min_energy_kwh: f64,
    pub soc_boundary: f64,
    pub legs: Vec<MicroLeg>,
}

/// Builds a two-location instance on a 15-minute grid.
pub fn micro_instance(
    slots: u32,
    chargers: Vec<ChargerType>,
    prices: Vec<f64>,
    shop_is_site: bool,
    vehicles: Vec<MicroVehicle>,
    params: OptimizationParams,
) -> ProblemInstance {
    assert_eq!(prices.len(), slots as usize);
    let start = NaiveDate::from_ymd_opt(2023, 11, 6)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    let mut distances = DistanceTable::new();
    distances.insert(DEPOT, SHOP, LINK_KM);
    let location = |id: &str, lat: f64, site: bool| Location {
        id: id.to_string(),
        latitude: lat,
        longitude: 6.5,
        charger_site: site,
        peak_cost_rate: 0.001,
        contracted_power_kw: None,
        prices: prices.clone(),
    };
    let vehicles = vehicles
        .into_iter()
        .enumerate()
        .map(|(k, v)| Vehicle {
            id: format!("truck-{}", k + 1),
            kind: "micro".to_string(),
            battery_kwh: v.battery_kwh,
            min_energy_kwh: v.min_energy_kwh,
            empty_weight_t: 1.0,
            max_load_t: 1000.0,
            consumption_kwh_per_tkm: 0.1,
            aux_kwh_per_h: 0.0,
            cooling_kwh_per_h: 0.0,
            soc_boundary: v.soc_boundary,
            itinerary: v
                .legs
                .into_iter()
                .map(|l| TripLeg {
                    origin: l.origin,
                    destination: l.destination,
                    distance_km: if l.origin == l.destination {
                        0.0
                    } else {
                        LINK_KM
                    },
                    payload_t: l.energy_kwh / (0.1 * LINK_KM) - 1.0,
                    cold: false,
                    dep_earliest: l.dep.0,
                    dep_latest: l.dep.1,
                    arr_earliest: l.arr.0,
                    arr_latest: l.arr.1,
                    travel_h: l.travel_h,
                    load_h: l.load_h,
                    unload_h: l.unload_h,
                })
                .collect(),
        })
        .collect();
    ProblemInstance {
        grid: TimeGrid::new(start, 15, slots),
        chargers,
        vehicles,
        locations: vec![
            location("depot", 53.2, true),
            location("shop", 53.3, shop_is_site),
        ],
        distances,
        params,
    }
}

/// One truck, one leg needing 30 kWh, chargers of 60 and 180 kW, four
/// quarter-hour slots at a flat price.
pub fn single_leg() -> ProblemInstance {
    micro_instance(
        4,
        vec![
            charger("ac60", 60.0, 0.98, 0.08),
            charger("dc180", 180.0, 0.98, 0.16),
        ],
        vec![0.1; 4],
        false,
        vec![MicroVehicle {
            battery_kwh: 100.0,
            min_energy_kwh: 5.0,
            soc_boundary: 0.2,
            legs: vec![MicroLeg::new(DEPOT, SHOP, 30.0, (2, 3), (3, 3))],
        }],
        OptimizationParams {
            alpha_peak: 1.0,
            beta_slack: 0.0,
            gamma_energy: 1.0,
            mip_gap: 0.0,
        },
    )
}

/// Random micro instance with at most two trucks, two legs per truck, two
/// charger types and eight slots. Instances may be infeasible.
pub fn random_micro(seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = rng.gen_range(5..=8u32);
    let catalog = [
        charger("ac60", 60.0, 0.98, 0.08),
        charger("dc180", 180.0, 0.98, 0.16),
        charger("dc120", 120.0, 0.97, 0.12),
    ];
    let n_types = rng.gen_range(1..=2);
    let first = rng.gen_range(0..catalog.len());
    let mut chargers = vec![catalog[first].clone()];
    if n_types == 2 {
        chargers.push(catalog[(first + 1 + rng.gen_range(0..2)) % catalog.len()].clone());
    }
    let prices: Vec<f64> = (0..slots)
        .map(|_| (rng.gen_range(40..=150) as f64) / 1000.0)
        .collect();
    let shop_is_site = rng.gen_bool(0.5);
    let trucks = rng.gen_range(1..=2);
    let mut vehicles = Vec::new();
    for _ in 0..trucks {
        let legs = rng.gen_range(1..=2);
        let battery = 100.0;
        let mut list = Vec::new();
        // First leg leaves the depot in the first half of the horizon.
        let d0 = rng.gen_range(1..=slots / 2);
        let d0_late = (d0 + rng.gen_range(0..=1)).min(slots - 2);
        list.push(MicroLeg::new(
            DEPOT,
            SHOP,
            rng.gen_range(5..=45) as f64,
            (d0, d0_late),
            (d0 + 1, (d0_late + 1).min(slots - 1)),
        ));
        if legs == 2 {
            let d1 = (d0_late + 2).min(slots - 2);
            let d1_late = (d1 + rng.gen_range(0..=1)).min(slots - 2);
            list.push(MicroLeg::new(
                SHOP,
                DEPOT,
                rng.gen_range(5..=45) as f64,
                (d1, d1_late),
                ((d1 + 1).min(slots - 1), (d1_late + 1).min(slots - 1)),
            ));
        }
        vehicles.push(MicroVehicle {
            battery_kwh: battery,
            min_energy_kwh: 5.0,
            soc_boundary: [0.2, 0.3, 0.5][rng.gen_range(0..3)],
            legs: list,
        });
    }
    let params = OptimizationParams {
        alpha_peak: [0.0, 1.0, 2.0][rng.gen_range(0..3)],
        beta_slack: [0.0, 1.0][rng.gen_range(0..2)],
        gamma_energy: [1.0, 2.0][rng.gen_range(0..2)],
        mip_gap: 0.0,
    };
    micro_instance(slots, chargers, prices, shop_is_site, vehicles, params)
}
