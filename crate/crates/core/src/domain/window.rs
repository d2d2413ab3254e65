use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{TimeGrid, TripLeg};

/// Contiguous slots in which a vehicle may charge before a leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargingWindow {
    pub first: u32,
    pub last: u32,
}

impl ChargingWindow {
    pub const EMPTY: ChargingWindow = ChargingWindow { first: 1, last: 0 };

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.first > self.last
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.last - self.first + 1) as usize
        }
    }

    pub fn contains(&self, slot: u32) -> bool {
        slot >= self.first && slot <= self.last
    }

    pub fn slots(&self) -> RangeInclusive<u32> {
        self.first..=self.last
    }
}

/// Slots from the earliest arrival of the previous leg up to the latest
/// departure of this leg plus `beta_slack`, clipped to the grid. The first
/// leg of an itinerary may charge from the start of the horizon.
pub fn charging_window(
    grid: &TimeGrid,
    itinerary: &[TripLeg],
    leg: usize,
    beta_slack: f64,
) -> ChargingWindow {
    if grid.slot_count == 0 || leg >= itinerary.len() {
        return ChargingWindow::EMPTY;
    }
    let first = if leg == 0 {
        0
    } else {
        itinerary[leg - 1].arr_earliest
    };
    let end = (f64::from(itinerary[leg].dep_latest) + beta_slack.max(0.0)).floor();
    let last = end.min(f64::from(grid.slot_count - 1)) as u32;
    if first > last {
        ChargingWindow::EMPTY
    } else {
        ChargingWindow { first, last }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn grid(slots: u32) -> TimeGrid {
        let start = NaiveDate::from_ymd_opt(2023, 11, 6)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        TimeGrid::new(start, 15, slots)
    }

    fn leg(dep: (u32, u32), arr: (u32, u32)) -> TripLeg {
        TripLeg {
            origin: 0,
            destination: 1,
            distance_km: 10.0,
            payload_t: 1.0,
            cold: false,
            dep_earliest: dep.0,
            dep_latest: dep.1,
            arr_earliest: arr.0,
            arr_latest: arr.1,
            travel_h: 0.5,
            load_h: 0.0,
            unload_h: 0.0,
        }
    }

    #[test]
    fn window_between_previous_arrival_and_latest_departure() {
        let it = vec![leg((0, 2), (10, 12)), leg((18, 20), (25, 26))];
        let w = charging_window(&grid(96), &it, 1, 2.0);
        assert_eq!(w.slots(), 10..=22);
        assert_eq!(w.len(), 13);
    }

    #[test]
    fn degenerate_single_slot() {
        let it = vec![leg((0, 1), (5, 5)), leg((5, 5), (8, 8))];
        let w = charging_window(&grid(96), &it, 1, 0.0);
        assert_eq!(w.slots(), 5..=5);
    }

    #[test]
    fn clipped_at_horizon_end() {
        let it = vec![leg((0, 1), (5, 5)), leg((90, 94), (96, 96))];
        let w = charging_window(&grid(96), &it, 1, 4.0);
        assert_eq!(w.last, 95);
    }

    #[test]
    fn first_leg_starts_at_horizon_start() {
        let it = vec![leg((12, 14), (20, 21))];
        let w = charging_window(&grid(96), &it, 0, 1.0);
        assert_eq!(w.slots(), 0..=15);
    }

    #[test]
    fn empty_when_previous_arrival_after_deadline() {
        let it = vec![leg((0, 1), (30, 31)), leg((20, 22), (40, 41))];
        assert!(charging_window(&grid(96), &it, 1, 1.0).is_empty());
    }

    #[test]
    fn fractional_slack_rounds_down() {
        let it = vec![leg((4, 6), (10, 10))];
        assert_eq!(charging_window(&grid(96), &it, 0, 0.25).last, 6);
    }

    proptest! {
        #[test]
        fn monotone_in_slack(arr in 0u32..60, dep in 0u32..90, b1 in 0.0..10.0f64, extra in 0.0..10.0f64) {
            let it = vec![leg((0, 1), (arr, arr)), leg((dep, dep), (95, 95))];
            let g = grid(96);
            let small = charging_window(&g, &it, 1, b1);
            let large = charging_window(&g, &it, 1, b1 + extra);
            for s in small.slots() {
                prop_assert!(large.contains(s));
            }
        }
    }
}
