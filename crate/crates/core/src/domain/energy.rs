use super::{TripLeg, Vehicle};

/// Energy in kWh a vehicle spends on a leg: traction proportional to
/// ton-kilometres at gross weight, plus auxiliary and (for cold cargo)
/// refrigeration draw over the travel time.
pub fn leg_energy(vehicle: &Vehicle, leg: &TripLeg) -> f64 {
    let gross_t = vehicle.empty_weight_t + leg.payload_t;
    let traction = vehicle.consumption_kwh_per_tkm * leg.distance_km * gross_t;
    let cooling = if leg.cold {
        vehicle.cooling_kwh_per_h
    } else {
        0.0
    };
    traction + (vehicle.aux_kwh_per_h + cooling) * leg.travel_h
}
