//! Event log of a simulation run and its tab-separated text form.
//!
//! Columns: `time_h kind truck leg location charger kw kwh ref_h detail`,
//! with `-` for fields a record kind does not use. Times are hours from the
//! horizon start.
//!
//! | kind            | fields                                              |
//! |-----------------|-----------------------------------------------------|
//! | `state`         | truck, leg, location, detail = new state            |
//! | `queue_enter`   | truck, leg, location, charger                       |
//! | `queue_exit`    | truck, leg, location, charger                       |
//! | `session_start` | truck, leg, location, charger, kw                   |
//! | `session_end`   | truck, leg, location, charger, kw, kwh to battery   |
//! | `depart`        | truck, leg, location, kwh = energy on board         |
//! | `arrive`        | truck, leg, location, kwh = energy on board, ref_h = planned arrival |
//! | `failure`       | truck, leg, location, kwh = energy before recovery  |
//! | `power`         | location, kw = total charger output                 |

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TruckState {
    Idle,
    Loading,
    QueuedForCharger,
    Charging,
    Transport,
    Unloading,
}

impl TruckState {
    pub fn name(self) -> &'static str {
        match self {
            TruckState::Idle => "idle",
            TruckState::Loading => "loading",
            TruckState::QueuedForCharger => "queued",
            TruckState::Charging => "charging",
            TruckState::Transport => "transport",
            TruckState::Unloading => "unloading",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecordKind {
    State(TruckState),
    QueueEnter { charger: usize },
    QueueExit { charger: usize },
    SessionStart { charger: usize, kw: f64 },
    SessionEnd { charger: usize, kw: f64, kwh: f64 },
    Depart { energy: f64 },
    Arrive { energy: f64, planned_h: f64 },
    Failure { energy: f64 },
    Power { kw: f64 },
}

/// `truck` and `leg` are `None` only for `Power` records. `leg` is the leg
/// the truck is about to drive (or just drove, for arrivals); after the
/// last leg it equals the itinerary length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub time_h: f64,
    pub truck: Option<usize>,
    pub leg: Option<usize>,
    pub location: usize,
    pub kind: RecordKind,
}

impl Record {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RecordKind::State(_) => "state",
            RecordKind::QueueEnter { .. } => "queue_enter",
            RecordKind::QueueExit { .. } => "queue_exit",
            RecordKind::SessionStart { .. } => "session_start",
            RecordKind::SessionEnd { .. } => "session_end",
            RecordKind::Depart { .. } => "depart",
            RecordKind::Arrive { .. } => "arrive",
            RecordKind::Failure { .. } => "failure",
            RecordKind::Power { .. } => "power",
        }
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (charger, kw, kwh, ref_h, detail) = match &self.kind {
            RecordKind::State(s) => (None, None, None, None, s.name()),
            RecordKind::QueueEnter { charger } | RecordKind::QueueExit { charger } => {
                (Some(*charger), None, None, None, "-")
            }
            RecordKind::SessionStart { charger, kw } => {
                (Some(*charger), Some(*kw), None, None, "-")
            }
            RecordKind::SessionEnd { charger, kw, kwh } => {
                (Some(*charger), Some(*kw), Some(*kwh), None, "-")
            }
            RecordKind::Depart { energy } | RecordKind::Failure { energy } => {
                (None, None, Some(*energy), None, "-")
            }
            RecordKind::Arrive { energy, planned_h } => {
                (None, None, Some(*energy), Some(*planned_h), "-")
            }
            RecordKind::Power { kw } => (None, Some(*kw), None, None, "-"),
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.time_h,
            self.kind_name(),
            opt(self.truck),
            opt(self.leg),
            self.location,
            opt(charger),
            opt(kw),
            opt(kwh),
            opt(ref_h),
            detail
        )
    }
}

pub const LOG_HEADER: &str = "time_h\tkind\ttruck\tleg\tlocation\tcharger\tkw\tkwh\tref_h\tdetail";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<Record>,
}

impl EventLog {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[0].time_h <= w[1].time_h)
    }
}
