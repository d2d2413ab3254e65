//! Discrete-event simulation of trucks working through their itineraries
//! and queueing for chargers.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use chrono::Timelike;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::log::{EventLog, Record, RecordKind, TruckState};
use super::perturb::{Realization, StochasticConfig};
use super::policy::{
    location_gate, rule_charge_amount, rule_policy, schedule_directives, Directive,
};
use crate::domain::{LegRef, ProblemInstance};
use crate::error::{Error, Result};
use crate::milp::{ChargingSchedule, InfrastructureDesign};

/// Times closer than this (hours) to a planned time count as on time.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    /// Charge on arrival just enough for the next leg; fill up overnight.
    Rule,
    /// Follow the optimized sessions, shifted when running late.
    Schedule(&'a ChargingSchedule),
}

#[derive(Debug, Clone)]
pub struct SimSetup<'a> {
    pub inst: &'a ProblemInstance,
    pub design: &'a InfrastructureDesign,
    pub policy: Policy<'a>,
    /// Contracted power per location in kW. Locations missing here use the
    /// instance value; without either the location is not gated.
    pub contracted: BTreeMap<usize, f64>,
}

impl<'a> SimSetup<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        design: &'a InfrastructureDesign,
        policy: Policy<'a>,
    ) -> Self {
        Self {
            inst,
            design,
            policy,
            contracted: BTreeMap::new(),
        }
    }

    pub fn with_contracted(mut self, contracted: BTreeMap<usize, f64>) -> Self {
        self.contracted = contracted;
        self
    }

    pub fn contracted_kw(&self, location: usize) -> Option<f64> {
        self.contracted.get(&location).copied().or_else(|| {
            self.inst
                .locations
                .get(location)
                .and_then(|l| l.contracted_power_kw)
        })
    }

    /// Every contracted power that applies, for the metrics.
    pub fn contracted_map(&self) -> BTreeMap<usize, f64> {
        (0..self.inst.locations.len())
            .filter_map(|i| self.contracted_kw(i).map(|p| (i, p)))
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let inst = self.inst;
        for (&site, counts) in &self.design.sites {
            if site >= inst.locations.len() || counts.len() != inst.chargers.len() {
                return Err(Error::Simulation(format!(
                    "design entry for location {site} does not match the instance"
                )));
            }
        }
        if let Policy::Schedule(schedule) = self.policy {
            if schedule.slot_minutes != inst.grid.slot_minutes {
                return Err(Error::Simulation(format!(
                    "schedule uses {}-minute slots, instance uses {}",
                    schedule.slot_minutes, inst.grid.slot_minutes
                )));
            }
            for ls in &schedule.legs {
                let LegRef { vehicle, leg } = ls.leg;
                let Some(trip) = inst
                    .vehicles
                    .get(vehicle)
                    .and_then(|v| v.itinerary.get(leg))
                else {
                    return Err(Error::Simulation(format!(
                        "schedule names unknown leg {vehicle}/{leg}"
                    )));
                };
                for s in &ls.sessions {
                    if self.design.count(trip.origin, s.charger) == 0 {
                        return Err(Error::Simulation(format!(
                            "vehicle {} charges on type {} at {} but the design installs none there",
                            inst.vehicles[vehicle].id,
                            inst.chargers.get(s.charger).map_or("?", |c| c.id.as_str()),
                            inst.locations[trip.origin].id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EvKind {
    ChargeComplete,
    ChargeRequest,
    Depart,
    Arrive,
    UnloadDone,
    Ready,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    kind: EvKind,
    truck: usize,
    seq: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.kind.cmp(&other.kind))
            .then(self.truck.cmp(&other.truck))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Request {
    charger: usize,
    power_kw: f64,
    amount: f64,
    /// Planned slot of a scheduled session.
    planned: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Truck {
    energy: f64,
    leg: usize,
    location: usize,
    state: TruckState,
    pending: VecDeque<Directive>,
    request: Option<Request>,
}

#[derive(Debug, Clone)]
struct Site {
    installed: Vec<u32>,
    busy: Vec<u32>,
    queues: Vec<VecDeque<usize>>,
    active: BTreeMap<usize, f64>,
    power: f64,
    contracted: Option<f64>,
}

struct Sim<'s, 'a> {
    setup: &'s SimSetup<'a>,
    noise: &'s Realization,
    tau: f64,
    day_offset_h: f64,
    trucks: Vec<Truck>,
    sites: BTreeMap<usize, Site>,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    log: EventLog,
}

impl<'s, 'a> Sim<'s, 'a> {
    fn new(setup: &'s SimSetup<'a>, noise: &'s Realization) -> Self {
        let inst = setup.inst;
        let start = inst.grid.horizon_start.time();
        let sites = setup
            .design
            .sites
            .iter()
            .map(|(&loc, counts)| {
                let n = counts.len();
                (
                    loc,
                    Site {
                        installed: counts.clone(),
                        busy: vec![0; n],
                        queues: vec![VecDeque::new(); n],
                        active: BTreeMap::new(),
                        power: 0.0,
                        contracted: setup.contracted_kw(loc),
                    },
                )
            })
            .collect();
        let trucks = inst
            .vehicles
            .iter()
            .map(|v| Truck {
                energy: v.boundary_energy(),
                leg: 0,
                location: v.itinerary.first().map_or(0, |l| l.origin),
                state: TruckState::Idle,
                pending: VecDeque::new(),
                request: None,
            })
            .collect();
        Self {
            setup,
            noise,
            tau: inst.grid.tau(),
            day_offset_h: f64::from(start.num_seconds_from_midnight()) / 3600.0,
            trucks,
            sites,
            heap: BinaryHeap::new(),
            seq: 0,
            log: EventLog::default(),
        }
    }

    fn push(&mut self, t: f64, kind: EvKind, truck: usize) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            t,
            kind,
            truck,
            seq: self.seq,
        }));
    }

    fn record(&mut self, t: f64, k: usize, kind: RecordKind) {
        let tr = &self.trucks[k];
        self.log.push(Record {
            time_h: t,
            truck: Some(k),
            leg: Some(tr.leg),
            location: tr.location,
            kind,
        });
    }

    fn set_state(&mut self, t: f64, k: usize, state: TruckState) {
        if self.trucks[k].state != state {
            self.trucks[k].state = state;
            self.record(t, k, RecordKind::State(state));
        }
    }

    fn legs_of(&self, k: usize) -> usize {
        self.setup.inst.vehicles[k].itinerary.len()
    }

    fn day(&self, t: f64) -> i64 {
        ((self.day_offset_h + t) / 24.0).floor() as i64
    }

    fn run(mut self) -> Result<EventLog> {
        for k in 0..self.trucks.len() {
            self.record(0.0, k, RecordKind::State(TruckState::Idle));
            if self.legs_of(k) > 0 {
                self.push(0.0, EvKind::Ready, k);
            }
        }
        while let Some(Reverse(ev)) = self.heap.pop() {
            match ev.kind {
                EvKind::Ready => self.on_ready(ev.t, ev.truck),
                EvKind::ChargeRequest => self.on_request(ev.t, ev.truck),
                EvKind::ChargeComplete => self.on_complete(ev.t, ev.truck),
                EvKind::Depart => self.on_depart(ev.t, ev.truck),
                EvKind::Arrive => self.on_arrive(ev.t, ev.truck),
                EvKind::UnloadDone => {
                    self.set_state(ev.t, ev.truck, TruckState::Loading);
                    let l = self.trucks[ev.truck].leg - 1;
                    let load = self.noise.legs[ev.truck][l].load_h;
                    self.push(ev.t + load, EvKind::Ready, ev.truck);
                }
            }
        }
        for (&loc, site) in &self.sites {
            if let Some(q) = site.queues.iter().find(|q| !q.is_empty()) {
                return Err(Error::Simulation(format!(
                    "vehicle {} never got a charger at {}",
                    self.setup.inst.vehicles[q[0]].id, self.setup.inst.locations[loc].id
                )));
            }
        }
        Ok(self.log)
    }

    fn installed(&self, loc: usize) -> Vec<(usize, f64, usize)> {
        let chargers = &self.setup.inst.chargers;
        self.sites.get(&loc).map_or_else(Vec::new, |s| {
            s.installed
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(r, _)| (r, chargers[r].power_kw, s.queues[r].len()))
                .collect()
        })
    }

    fn on_ready(&mut self, t: f64, k: usize) {
        let inst = self.setup.inst;
        let v = &inst.vehicles[k];
        let l = self.trucks[k].leg;
        let n = v.itinerary.len();
        let energy = self.trucks[k].energy;
        match self.setup.policy {
            Policy::Rule => {
                let overnight = l == n
                    || self.day(f64::from(v.itinerary[l].dep_earliest) * self.tau) > self.day(t);
                let amount = if overnight {
                    v.battery_kwh - energy
                } else {
                    rule_charge_amount(
                        energy,
                        inst.leg_energy(LegRef { vehicle: k, leg: l }),
                        v.min_energy_kwh,
                    )
                };
                let loc = self.trucks[k].location;
                let installed = self.installed(loc);
                let decision = if amount > TIME_EPS && !installed.is_empty() {
                    rule_policy(
                        amount,
                        v.battery_kwh - energy,
                        &installed,
                        self.sites[&loc].contracted,
                    )
                    .expect("installed types are non-empty")
                } else {
                    super::policy::RuleDecision::NONE
                };
                match decision.charger {
                    Some(charger) => {
                        self.trucks[k].request = Some(Request {
                            charger,
                            power_kw: decision.power_kw,
                            amount: decision.amount,
                            planned: None,
                        });
                        self.push(t, EvKind::ChargeRequest, k);
                    }
                    None => self.after_charging(t, k),
                }
            }
            Policy::Schedule(schedule) => {
                if l < n {
                    let ls = schedule.leg(LegRef { vehicle: k, leg: l });
                    self.trucks[k].pending = schedule_directives(ls, self.tau).into();
                }
                self.next_directive(t, k);
            }
        }
    }

    fn next_directive(&mut self, t: f64, k: usize) {
        let battery = self.setup.inst.vehicles[k].battery_kwh;
        while let Some(d) = self.trucks[k].pending.pop_front() {
            let amount = (d.power_kw * (d.end_h - d.start_h)).min(battery - self.trucks[k].energy);
            if amount <= 0.0 {
                continue;
            }
            let contracted = self
                .sites
                .get(&self.trucks[k].location)
                .and_then(|s| s.contracted);
            self.trucks[k].request = Some(Request {
                charger: d.charger,
                power_kw: contracted.map_or(d.power_kw, |p| d.power_kw.min(p)),
                amount,
                planned: Some((d.start_h, d.end_h)),
            });
            let at = if t <= d.start_h + TIME_EPS {
                d.start_h
            } else {
                t
            };
            if at > t {
                self.set_state(t, k, TruckState::Idle);
            }
            self.push(at, EvKind::ChargeRequest, k);
            return;
        }
        self.after_charging(t, k);
    }

    /// Schedules the departure for the current leg, or retires the truck
    /// after its last leg.
    fn after_charging(&mut self, t: f64, k: usize) {
        let inst = self.setup.inst;
        let l = self.trucks[k].leg;
        if l == self.legs_of(k) {
            self.set_state(t, k, TruckState::Idle);
            return;
        }
        let trip = &inst.vehicles[k].itinerary[l];
        let planned_slot = match self.setup.policy {
            Policy::Rule => f64::from(trip.dep_earliest),
            Policy::Schedule(s) => s
                .leg(LegRef { vehicle: k, leg: l })
                .map_or(f64::from(trip.dep_earliest), |ls| ls.departure),
        };
        let planned = planned_slot * self.tau;
        let at = if t <= planned + TIME_EPS {
            planned.max(t)
        } else {
            t
        };
        if at > t {
            self.set_state(t, k, TruckState::Idle);
        }
        self.push(at, EvKind::Depart, k);
    }

    fn on_request(&mut self, t: f64, k: usize) {
        let req = self.trucks[k].request.expect("request set before queueing");
        let loc = self.trucks[k].location;
        self.set_state(t, k, TruckState::QueuedForCharger);
        self.record(
            t,
            k,
            RecordKind::QueueEnter {
                charger: req.charger,
            },
        );
        self.sites
            .get_mut(&loc)
            .expect("requests only at sites")
            .queues[req.charger]
            .push_back(k);
        self.release(t, loc);
    }

    /// Starts every queue head that has a free unit and fits under the
    /// contracted power.
    fn release(&mut self, t: f64, loc: usize) {
        let types = self.sites[&loc].installed.len();
        for r in 0..types {
            loop {
                let site = &self.sites[&loc];
                let Some(&k) = site.queues[r].front() else {
                    break;
                };
                let req = self.trucks[k]
                    .request
                    .expect("queued trucks hold a request");
                if site.busy[r] >= site.installed[r]
                    || !location_gate(site.power, req.power_kw, site.contracted)
                {
                    break;
                }
                let site = self.sites.get_mut(&loc).expect("site exists");
                site.queues[r].pop_front();
                site.busy[r] += 1;
                site.active.insert(k, req.power_kw);
                site.power = site.active.values().sum();
                let power = site.power;
                self.record(t, k, RecordKind::QueueExit { charger: r });
                self.set_state(t, k, TruckState::Charging);
                self.record(
                    t,
                    k,
                    RecordKind::SessionStart {
                        charger: r,
                        kw: req.power_kw,
                    },
                );
                self.log.push(Record {
                    time_h: t,
                    truck: None,
                    leg: None,
                    location: loc,
                    kind: RecordKind::Power { kw: power },
                });
                let end = match req.planned {
                    Some((s, e)) if t == s && req.amount == req.power_kw * (e - s) => e,
                    _ => t + req.amount / req.power_kw,
                };
                self.push(end, EvKind::ChargeComplete, k);
            }
        }
    }

    fn on_complete(&mut self, t: f64, k: usize) {
        let req = self.trucks[k]
            .request
            .take()
            .expect("charging trucks hold a request");
        let loc = self.trucks[k].location;
        let battery = self.setup.inst.vehicles[k].battery_kwh;
        self.trucks[k].energy = (self.trucks[k].energy + req.amount).min(battery);
        self.record(
            t,
            k,
            RecordKind::SessionEnd {
                charger: req.charger,
                kw: req.power_kw,
                kwh: req.amount,
            },
        );
        let site = self.sites.get_mut(&loc).expect("site exists");
        site.busy[req.charger] -= 1;
        site.active.remove(&k);
        site.power = site.active.values().sum();
        let power = site.power;
        self.log.push(Record {
            time_h: t,
            truck: None,
            leg: None,
            location: loc,
            kind: RecordKind::Power { kw: power },
        });
        self.release(t, loc);
        match self.setup.policy {
            Policy::Rule => self.after_charging(t, k),
            Policy::Schedule(_) => self.next_directive(t, k),
        }
    }

    fn on_depart(&mut self, t: f64, k: usize) {
        let energy = self.trucks[k].energy;
        self.record(t, k, RecordKind::Depart { energy });
        self.set_state(t, k, TruckState::Transport);
        let travel = self.noise.legs[k][self.trucks[k].leg].travel_h;
        self.push(t + travel, EvKind::Arrive, k);
    }

    fn on_arrive(&mut self, t: f64, k: usize) {
        let inst = self.setup.inst;
        let v = &inst.vehicles[k];
        let l = self.trucks[k].leg;
        let trip = &v.itinerary[l];
        let noise = self.noise.legs[k][l];
        self.trucks[k].location = trip.destination;
        let mut energy = self.trucks[k].energy - noise.energy_kwh;
        if energy < v.min_energy_kwh - TIME_EPS {
            self.record(t, k, RecordKind::Failure { energy });
            energy = v.min_energy_kwh;
        }
        self.trucks[k].energy = energy;
        let planned_h = f64::from(trip.dep_earliest) * self.tau + trip.travel_h;
        self.record(t, k, RecordKind::Arrive { energy, planned_h });
        self.trucks[k].leg = l + 1;
        self.set_state(t, k, TruckState::Unloading);
        self.push(t + noise.unload_h, EvKind::UnloadDone, k);
    }
}

/// Runs one simulation with the given realized durations and energies.
pub fn run_simulation(setup: &SimSetup<'_>, noise: &Realization) -> Result<EventLog> {
    setup.check()?;
    let shape_ok = noise.legs.len() == setup.inst.vehicles.len()
        && noise
            .legs
            .iter()
            .zip(&setup.inst.vehicles)
            .all(|(n, v)| n.len() == v.itinerary.len());
    if !shape_ok {
        return Err(Error::Simulation(
            "realization does not match the itineraries".into(),
        ));
    }
    Sim::new(setup, noise).run()
}

/// Random stream of run `run` under `master_seed`.
pub fn run_rng(master_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run);
    rng
}

/// Draws the noise of run `run` and simulates it.
pub fn run_seeded(setup: &SimSetup<'_>, cfg: &StochasticConfig, run: u64) -> Result<EventLog> {
    let noise = Realization::draw(setup.inst, cfg, &mut run_rng(cfg.master_seed, run));
    run_simulation(setup, &noise)
}
