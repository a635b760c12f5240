//! Slot-synchronous simulation of a formation running the protocol.
//!
//! Every superframe walks G, GN, S, SO, SN and then T1..Tn. In each slot the
//! engine collects the transmitters, classifies what every other present UAV
//! receives and hands that over. Growth agreed in the grow slots applies to
//! the same superframe; removals apply at the boundary. Resolution and
//! convergence are detected by an omniscient observer at boundaries only.

mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{adapt_tx_power, beacon_tx_power, slot_outcome, ChannelParams, CollisionModel, Emitter, Reception};
use crate::error::{Error, Result};
use crate::protocol::{Beacon, Heard, Lifecycle, ProtocolParams, SlotId, TxSlot, UavEvent, UavState, MANAGEMENT_SLOTS};
use crate::topology::{Formation, FormationSpec};

pub use validate::{validate_allocation, Oracle, Snapshot, Violation};

/// Default extra SINR headroom of the beacon power over the bare threshold at
/// the safety radius, dB.
pub const DEFAULT_BEACON_MARGIN_DB: f64 = 6.0;

/// Superframes without any change, while some joiner still waits, after which
/// a run is abandoned as stalled.
pub const STALL_SUPERFRAMES: u64 = 2000;

pub const DEFAULT_MAX_SLOTS: u64 = 10_000_000;

/// When a run ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopCondition {
    Resolution,
    #[default]
    Convergence,
    /// Keep going for this many slots regardless.
    Slots(u64),
}

impl FromStr for StopCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resolution" => Ok(StopCondition::Resolution),
            "convergence" => Ok(StopCondition::Convergence),
            other => other
                .strip_prefix("slots:")
                .and_then(|n| n.parse().ok())
                .map(StopCondition::Slots)
                .ok_or_else(|| Error::Config(format!("stop must be resolution, convergence or slots:N, got {other:?}"))),
        }
    }
}

impl fmt::Display for StopCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCondition::Resolution => f.write_str("resolution"),
            StopCondition::Convergence => f.write_str("convergence"),
            StopCondition::Slots(n) => write!(f, "slots:{n}"),
        }
    }
}

impl Serialize for StopCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StopCondition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Protocol settings as written in a config file. Transmit powers are derived
/// from the channel and formation unless pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub ct: u32,
    pub gm: u32,
    pub st: u32,
    pub dss: u32,
    pub tsr: f64,
    pub fst: u32,
    pub backoff_cap: u32,
    pub beacon_margin_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beacon_tx_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapt_tx_power: Option<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        ProtocolConfig {
            ct: p.ct,
            gm: p.gm,
            st: p.st,
            dss: p.dss,
            tsr: p.tsr,
            fst: p.fst,
            backoff_cap: p.backoff_cap,
            beacon_margin_db: DEFAULT_BEACON_MARGIN_DB,
            beacon_tx_power: None,
            adapt_tx_power: None,
        }
    }
}

impl ProtocolConfig {
    /// Resolve to concrete parameters for `formation`. The adapt power covers
    /// the formation diameter (the safety radius for a lone UAV) and is never
    /// below the beacon power.
    pub fn resolve(&self, formation: &Formation, channel: &ChannelParams) -> Result<ProtocolParams> {
        let radius = formation.safety_radius();
        let beacon = match self.beacon_tx_power {
            Some(p) => p,
            None => beacon_tx_power(radius, channel, self.beacon_margin_db)?,
        };
        let adapt = match self.adapt_tx_power {
            Some(p) => p,
            None => {
                let diameter = formation.max_diameter();
                let reach = if diameter > 0.0 { diameter } else { radius };
                adapt_tx_power(reach, channel)?.max(beacon)
            }
        };
        let params = ProtocolParams {
            ct: self.ct,
            gm: self.gm,
            st: self.st,
            dss: self.dss,
            tsr: self.tsr,
            fst: self.fst,
            backoff_cap: self.backoff_cap,
            beacon_tx_power: beacon,
            adapt_tx_power: adapt,
        };
        params.validate()?;
        Ok(params)
    }
}

fn default_safety_radius() -> f64 {
    10.0
}

fn default_join_superframe() -> u64 {
    2
}

fn default_max_slots() -> u64 {
    DEFAULT_MAX_SLOTS
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub formation: FormationSpec,
    #[serde(default = "default_safety_radius")]
    pub safety_radius: f64,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub seed: u64,
    /// The UAV that starts the formation at superframe 0.
    #[serde(default)]
    pub first_uav: u32,
    /// Superframe at which every other UAV powers on.
    #[serde(default = "default_join_superframe")]
    pub join_superframe: u64,
    /// Per-UAV overrides of the join superframe.
    #[serde(default)]
    pub join: BTreeMap<u32, u64>,
    /// UAV id to the superframe carrying its final beacon.
    #[serde(default)]
    pub leave: BTreeMap<u32, u64>,
    #[serde(default)]
    pub stop: StopCondition,
    #[serde(default = "default_max_slots")]
    pub max_slots: u64,
    /// Collision model for management slots; transmission slots always use SINR.
    #[serde(default)]
    pub mgmt_model: CollisionModel,
    #[serde(default)]
    pub trace: bool,
}

impl Scenario {
    pub fn new(formation: FormationSpec) -> Self {
        Scenario {
            formation,
            safety_radius: default_safety_radius(),
            protocol: ProtocolConfig::default(),
            channel: ChannelParams::default(),
            seed: 0,
            first_uav: 0,
            join_superframe: default_join_superframe(),
            join: BTreeMap::new(),
            leave: BTreeMap::new(),
            stop: StopCondition::Convergence,
            max_slots: DEFAULT_MAX_SLOTS,
            mgmt_model: CollisionModel::default(),
            trace: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    /// Join superframe for every UAV.
    pub fn join_times(&self, uav_count: usize) -> Vec<u64> {
        (0..uav_count as u32)
            .map(|id| match self.join.get(&id) {
                Some(&k) => k,
                None if id == self.first_uav => 0,
                None => self.join_superframe,
            })
            .collect()
    }

    pub fn validate(&self, formation: &Formation) -> Result<()> {
        self.channel.validate()?;
        let n = formation.len();
        if self.first_uav as usize >= n {
            return Err(Error::Config(format!("first_uav {} outside a formation of {n}", self.first_uav)));
        }
        for &id in self.join.keys().chain(self.leave.keys()) {
            if id as usize >= n {
                return Err(Error::Config(format!("schedule names UAV {id} outside a formation of {n}")));
            }
        }
        let joins = self.join_times(n);
        let first = joins[self.first_uav as usize];
        if joins.iter().enumerate().any(|(i, &k)| i != self.first_uav as usize && k <= first) {
            return Err(Error::Config("exactly one UAV must join before all others".into()));
        }
        for (&id, &k) in &self.leave {
            if k < joins[id as usize] {
                return Err(Error::Config(format!("UAV {id} leaves before it joins")));
            }
        }
        if self.max_slots == 0 {
            return Err(Error::Config("max_slots must be >= 1".into()));
        }
        Ok(())
    }
}

/// One UAV at the end of one superframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub superframe: u64,
    pub uav: u32,
    pub state: Lifecycle,
    pub claimed_slot: Option<TxSlot>,
    pub tentative_slot: Option<TxSlot>,
    pub superframe_size: Option<u32>,
    pub events: Vec<UavEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub uav_count: usize,
    pub seed: u64,
    pub resolution_slot: Option<u64>,
    pub convergence_slot: Option<u64>,
    pub resolution_rounds: Option<f64>,
    pub convergence_rounds: Option<f64>,
    /// Transmission slots when resolution was first detected.
    pub resolution_superframe: Option<u32>,
    /// Transmission slots at the end of the run.
    pub final_superframe: u32,
    /// Management-slot transmissions up to convergence (or the end of the run).
    pub control_packets: u64,
    /// Control packets per UAV per round.
    pub overhead_normalized: Option<f64>,
    /// UAVs per transmission slot.
    pub reuse: f64,
    /// Removals executed between resolution and convergence.
    pub removed_slots: u64,
    /// Removals executed over the whole run.
    pub total_removals: u64,
    /// Superframe boundaries where every UAV was resolved but the allocation
    /// failed the SINR check.
    pub invalid_resolved_boundaries: u64,
    pub superframes: u64,
    pub slots: u64,
    pub converged: bool,
    /// Abandoned because some joiner could never hear anyone.
    pub stalled: bool,
    /// Final allocation passes the full check, empty slots included.
    pub valid: bool,
    /// Final slot of every UAV still present.
    pub allocation: Vec<Option<TxSlot>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

/// Simulate `scenario` until its stop condition or `max_slots`.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    let formation = scenario.formation.build(scenario.safety_radius)?;
    run_formation(scenario, &formation)
}

/// Same as [`run`] on explicit positions; `scenario.formation` is ignored.
pub fn run_formation(scenario: &Scenario, formation: &Formation) -> Result<RunResult> {
    scenario.validate(formation)?;
    let params = scenario.protocol.resolve(formation, &scenario.channel)?;
    Engine::new(scenario, formation, params).run()
}

struct Engine<'a> {
    scenario: &'a Scenario,
    formation: &'a Formation,
    params: ProtocolParams,
    joins: Vec<u64>,
    uavs: Vec<Option<UavState>>,
    departed: Vec<bool>,
    rngs: Vec<ChaCha8Rng>,
    control_packets: u64,
    trace: Option<Vec<TraceRecord>>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, formation: &'a Formation, params: ProtocolParams) -> Self {
        let n = formation.len();
        let rngs = (0..n as u64)
            .map(|id| {
                let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
                rng.set_stream(id);
                rng
            })
            .collect();
        Engine {
            scenario,
            formation,
            params,
            joins: scenario.join_times(n),
            uavs: vec![None; n],
            departed: vec![false; n],
            rngs,
            control_packets: 0,
            trace: scenario.trace.then(Vec::new),
        }
    }

    fn view_size(&self) -> Option<u32> {
        self.uavs.iter().flatten().find_map(|u| u.superframe_size())
    }

    fn check_consensus(&self, superframe: u64) -> Result<Option<u32>> {
        let mut size = None;
        for u in self.uavs.iter().flatten() {
            if let Some(s) = u.superframe_size() {
                match size {
                    None => size = Some(s),
                    Some(prev) if prev != s => {
                        return Err(Error::Fault {
                            superframe,
                            detail: format!("superframe size disagreement: UAV {} has {s}, others {prev}", u.id()),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(size)
    }

    /// Run one slot: `pick` decides who transmits, everybody else listens.
    fn slot<F>(&mut self, slot: SlotId, power: f64, model: CollisionModel, mut pick: F) -> usize
    where
        F: FnMut(&mut UavState) -> Option<Beacon>,
    {
        let mut senders = Vec::new();
        let mut beacons = Vec::new();
        for (i, u) in self.uavs.iter_mut().enumerate() {
            if let Some(u) = u {
                if let Some(b) = pick(u) {
                    senders.push(i);
                    beacons.push(b);
                }
            }
        }
        if senders.is_empty() {
            return 0;
        }
        self.deliver(slot, &senders, &beacons, power, model);
        senders.len()
    }

    fn deliver(&mut self, slot: SlotId, senders: &[usize], beacons: &[Beacon], power: f64, model: CollisionModel) {
        let ch = &self.scenario.channel;
        let emitters: Vec<Emitter> =
            senders.iter().map(|&i| Emitter { position: self.formation.position(i), power_dbm: power }).collect();
        let floor = ch.energy_floor_mw();
        let mut next_sender = 0;
        for (i, u) in self.uavs.iter_mut().enumerate() {
            if next_sender < senders.len() && senders[next_sender] == i {
                next_sender += 1;
                continue;
            }
            let Some(u) = u else { continue };
            let rx = self.formation.position(i);
            let reception = if model == CollisionModel::Pessimistic && emitters.len() > 1 {
                // Only energy or silence is possible; stop summing once sensed.
                let mut total = 0.0;
                let mut sensed = false;
                for e in &emitters {
                    total += ch.rx_power_mw(e.power_dbm, rx.dist_sq(&e.position));
                    if total >= floor {
                        sensed = true;
                        break;
                    }
                }
                if sensed {
                    Reception::Energy
                } else {
                    Reception::Nothing
                }
            } else {
                slot_outcome(rx, &emitters, ch, model)
            };
            let heard = match reception {
                Reception::Nothing => continue,
                Reception::Energy => Heard::Energy,
                Reception::Decoded(k) => Heard::Decoded(&beacons[k]),
            };
            u.observe(slot, heard);
        }
    }

    fn snapshot(&self, superframe_size: u32) -> Snapshot {
        Snapshot {
            lifecycle: self.uavs.iter().map(|u| u.as_ref().map(|u| u.lifecycle())).collect(),
            assignment: self.uavs.iter().map(|u| u.as_ref().and_then(|u| u.tx_slot())).collect(),
            superframe_size,
        }
    }

    fn run(mut self) -> Result<RunResult> {
        let sc = self.scenario;
        let uav_count = self.formation.len();
        let oracle = Oracle { formation: self.formation, channel: &sc.channel, beacon_power: self.params.beacon_tx_power };
        // Detection waits until every scheduled join and departure is behind us.
        let settle_after = self.joins.iter().chain(sc.leave.values()).copied().max().unwrap_or(0);
        let params = self.params;

        let mut slots = 0u64;
        let mut resolution: Option<(u64, u32)> = None;
        let mut convergence: Option<u64> = None;
        let mut control_at_convergence = None;
        let mut removals_total = 0u64;
        let mut removals_at_resolution = 0u64;
        let mut invalid_resolved = 0u64;
        let mut superframe = 0u64;
        let mut last_size = params.dss;
        let mut stalled = false;
        let mut quiet = 0u64;
        let mut last_fingerprint: Option<(Snapshot, u64)> = None;

        loop {
            let k = superframe;
            match sc.stop {
                StopCondition::Slots(n) if slots >= n => break,
                StopCondition::Resolution if resolution.is_some() => break,
                StopCondition::Convergence if convergence.is_some() => break,
                _ => {}
            }
            if slots >= sc.max_slots {
                break;
            }

            for id in 0..uav_count {
                if self.joins[id] == k && !self.departed[id] {
                    let pos = self.formation.position(id);
                    let mut u = if id == sc.first_uav as usize {
                        UavState::first(id as u32, pos, sc.safety_radius, &params)
                    } else {
                        UavState::joiner(id as u32, pos, sc.safety_radius)
                    };
                    if let Some(&at) = sc.leave.get(&(id as u32)) {
                        u.schedule_leave(at);
                    }
                    self.uavs[id] = Some(u);
                }
            }
            for (&id, &at) in &sc.leave {
                if at == k {
                    match &self.uavs[id as usize] {
                        Some(u) if u.lifecycle() == Lifecycle::Resolved => {}
                        _ => {
                            return Err(Error::Config(format!(
                                "UAV {id} scheduled to leave at superframe {k} but is not resolved"
                            )))
                        }
                    }
                }
            }

            let adapt = params.adapt_tx_power;
            let model = sc.mgmt_model;
            let mut mgmt = 0;
            mgmt += self.slot(SlotId::Grow, adapt, model, |u| u.grow_beacon(k));
            mgmt += self.slot(SlotId::GrowNack, adapt, model, |u| u.grow_nack_beacon(k));
            for (u, rng) in self.uavs.iter_mut().zip(self.rngs.iter_mut()) {
                if let Some(u) = u {
                    u.finish_grow_phase(&params, rng);
                }
            }
            mgmt += self.slot(SlotId::Shrink, adapt, model, |u| u.shrink_beacon(&params, k));
            mgmt += self.slot(SlotId::ShrinkObject, adapt, model, |u| u.shrink_object_beacon(k));
            mgmt += self.slot(SlotId::ShrinkNack, adapt, model, |u| u.shrink_nack_beacon(k));
            let mut removal_agreed = false;
            for (u, rng) in self.uavs.iter_mut().zip(self.rngs.iter_mut()) {
                if let Some(u) = u {
                    let d = u.finish_shrink_phase(&params, rng);
                    removal_agreed |= matches!(d, crate::protocol::ShrinkDecision::RemoveSlot(_)) && u.superframe_size().is_some();
                }
            }
            if convergence.is_none() {
                self.control_packets += mgmt as u64;
            }

            let n = match self.check_consensus(k)? {
                Some(n) => n,
                None => self.view_size().unwrap_or(params.dss),
            };
            for (i, u) in self.uavs.iter().enumerate() {
                if let Some(t) = u.as_ref().and_then(|u| u.tx_slot()) {
                    if t.number() > n {
                        return Err(Error::Fault { superframe: k, detail: format!("UAV {i} holds {t} of {n}") });
                    }
                }
            }
            for index in 0..n as usize {
                let t = TxSlot::from_index(index);
                let mut senders = Vec::new();
                let mut beacons = Vec::new();
                for (i, (u, rng)) in self.uavs.iter_mut().zip(self.rngs.iter_mut()).enumerate() {
                    if let Some(b) = u.as_mut().and_then(|u| u.transmit(t, k, &params, rng)) {
                        senders.push(i);
                        beacons.push(b);
                    }
                }
                if !senders.is_empty() {
                    self.deliver(SlotId::Tx(t), &senders, &beacons, params.beacon_tx_power, CollisionModel::Sinr);
                }
            }
            slots += (MANAGEMENT_SLOTS + n) as u64;

            // Boundary.
            for (u, rng) in self.uavs.iter_mut().zip(self.rngs.iter_mut()) {
                if let Some(u) = u {
                    u.end_superframe(&params, rng)
                        .map_err(|e| Error::Fault { superframe: k, detail: e.to_string() })?;
                }
            }
            if removal_agreed {
                removals_total += 1;
            }
            for (&id, &at) in &sc.leave {
                if at == k {
                    self.uavs[id as usize] = None;
                    self.departed[id as usize] = true;
                }
            }
            if let Some(trace) = self.trace.as_mut() {
                for u in self.uavs.iter_mut().flatten() {
                    trace.push(TraceRecord {
                        superframe: k,
                        uav: u.id(),
                        state: u.lifecycle(),
                        claimed_slot: u.claimed_slot(),
                        tentative_slot: u.tentative_slot(),
                        superframe_size: u.superframe_size(),
                        events: u.take_events(),
                    });
                }
            } else {
                for u in self.uavs.iter_mut().flatten() {
                    u.take_events();
                }
            }
            let size = self.check_consensus(k)?.unwrap_or(n);
            last_size = size;
            superframe += 1;

            if k < settle_after {
                continue;
            }
            let snap = self.snapshot(size);

            // Joiners that can never decode a beacon, with nothing else going
            // on, stay that way forever.
            let waiting = snap.lifecycle.iter().flatten().any(|l| *l == Lifecycle::Start);
            let fingerprint = (snap.clone(), self.control_packets);
            if waiting && last_fingerprint.as_ref() == Some(&fingerprint) {
                quiet += 1;
                if quiet >= STALL_SUPERFRAMES.max(4 * size as u64) {
                    stalled = true;
                    break;
                }
            } else {
                quiet = 0;
            }
            last_fingerprint = Some(fingerprint);

            if snap.lifecycle.iter().flatten().all(|l| *l == Lifecycle::Resolved) {
                if !oracle.detect_resolution(&snap) {
                    invalid_resolved += 1;
                } else {
                    if resolution.is_none() {
                        resolution = Some((slots, size));
                        removals_at_resolution = removals_total;
                    }
                    if convergence.is_none() && oracle.detect_convergence(&snap) {
                        convergence = Some(slots);
                        control_at_convergence = Some(self.control_packets);
                    }
                }
            }
        }

        let u = uav_count as f64;
        let snap = self.snapshot(last_size);
        let valid = oracle.validate(&snap, true).is_empty()
            && snap.lifecycle.iter().flatten().all(|l| *l == Lifecycle::Resolved);
        let control_packets = control_at_convergence.unwrap_or(self.control_packets);
        let convergence_rounds = convergence.map(|s| s as f64 / u);
        Ok(RunResult {
            uav_count,
            seed: sc.seed,
            resolution_slot: resolution.map(|r| r.0),
            convergence_slot: convergence,
            resolution_rounds: resolution.map(|r| r.0 as f64 / u),
            convergence_rounds,
            resolution_superframe: resolution.map(|r| r.1),
            final_superframe: last_size,
            control_packets,
            overhead_normalized: convergence_rounds.map(|r| control_packets as f64 / (u * r)),
            reuse: u / last_size.max(1) as f64,
            removed_slots: removals_total - removals_at_resolution,
            total_removals: removals_total,
            invalid_resolved_boundaries: invalid_resolved,
            superframes: superframe,
            slots,
            converged: convergence.is_some(),
            stalled,
            valid,
            allocation: snap.assignment,
            trace: self.trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(count: usize, dss: u32) -> Scenario {
        let mut sc = Scenario::new(FormationSpec::SingleHop { count });
        sc.protocol.dss = dss;
        sc
    }

    #[test]
    fn stop_condition_parsing() {
        assert_eq!("resolution".parse::<StopCondition>().unwrap(), StopCondition::Resolution);
        assert_eq!("slots:40".parse::<StopCondition>().unwrap(), StopCondition::Slots(40));
        assert!("slots:x".parse::<StopCondition>().is_err());
        assert_eq!(StopCondition::Slots(7).to_string(), "slots:7");
    }

    #[test]
    fn lone_uav_shrinks_to_one_slot() {
        let r = run(&single(1, 5)).unwrap();
        assert!(r.converged);
        assert_eq!(r.final_superframe, 1);
        assert_eq!(r.total_removals, 4);
        assert_eq!(r.resolution_superframe, Some(5));
        assert!(r.valid);
    }

    #[test]
    fn neighbor_pair_uses_two_slots() {
        let r = run(&single(2, 2)).unwrap();
        assert!(r.converged);
        assert_eq!(r.final_superframe, 2);
        assert_eq!(r.reuse, 1.0);
        assert!(r.valid);
        assert_ne!(r.allocation[0], r.allocation[1]);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let err = Scenario::from_json(r#"{"formation":{"kind":"single_hop","count":3},"bogus":1}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let ok = Scenario::from_json(r#"{"formation":{"kind":"single_hop","count":3},"stop":"slots:100"}"#).unwrap();
        assert_eq!(ok.stop, StopCondition::Slots(100));
    }

    #[test]
    fn two_first_uavs_rejected() {
        let mut sc = single(3, 4);
        sc.join.insert(1, 0);
        assert!(run(&sc).is_err());
    }
}
