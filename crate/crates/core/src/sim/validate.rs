use serde::Serialize;

use crate::channel::{mw_to_dbm, sinr_linear, ChannelParams, Emitter};
use crate::protocol::{Lifecycle, TxSlot};
use crate::topology::Formation;

/// One reason an allocation is unusable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Slot number beyond the superframe.
    OutOfRange { uav: usize, slot: u32, superframe: u32 },
    /// Two neighbors in the same slot; neither hears the other.
    SharedSlot { a: usize, b: usize, slot: u32 },
    /// A neighbor that does not decode the transmitter.
    NotDecoded { tx: usize, rx: usize, slot: u32, sinr_db: f64 },
    /// No transmitter anywhere in the formation.
    EmptySlot { slot: u32 },
}

/// Who is doing what, as seen by the omniscient observer.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// `None` for UAVs not taking part (departed or not yet joined).
    pub lifecycle: Vec<Option<Lifecycle>>,
    /// Slot each UAV currently transmits beacons in.
    pub assignment: Vec<Option<TxSlot>>,
    pub superframe_size: u32,
}

/// Checks every transmitter against every neighbor by full SINR. UAVs with no
/// assignment are treated as absent: they neither transmit nor need to hear.
pub fn validate_allocation(
    formation: &Formation,
    assignment: &[Option<TxSlot>],
    superframe_size: u32,
    channel: &ChannelParams,
    beacon_power: f64,
    require_full: bool,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut by_slot: Vec<Vec<usize>> = vec![Vec::new(); superframe_size as usize];
    for (uav, slot) in assignment.iter().enumerate() {
        let Some(slot) = *slot else { continue };
        if slot.number() > superframe_size {
            violations.push(Violation::OutOfRange { uav, slot: slot.number(), superframe: superframe_size });
        } else {
            by_slot[slot.index()].push(uav);
        }
    }

    let threshold = channel.sinr_threshold_linear();
    for (index, txs) in by_slot.iter().enumerate() {
        let slot = index as u32 + 1;
        if txs.is_empty() {
            if require_full {
                violations.push(Violation::EmptySlot { slot });
            }
            continue;
        }
        let emitters: Vec<Emitter> =
            txs.iter().map(|&u| Emitter { position: formation.position(u), power_dbm: beacon_power }).collect();
        for (k, &tx) in txs.iter().enumerate() {
            for &rx in formation.neighbors(tx) {
                if assignment[rx].is_none() {
                    continue;
                }
                if assignment[rx] == Some(TxSlot::new(slot)) {
                    if tx < rx {
                        violations.push(Violation::SharedSlot { a: tx, b: rx, slot });
                    }
                    continue;
                }
                let sinr = sinr_linear(formation.position(rx), k, &emitters, channel);
                if sinr < threshold {
                    violations.push(Violation::NotDecoded { tx, rx, slot, sinr_db: mw_to_dbm(sinr) });
                }
            }
        }
    }
    violations
}

/// Observer-side detection. Never consulted by the UAVs themselves.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'a> {
    pub formation: &'a Formation,
    pub channel: &'a ChannelParams,
    pub beacon_power: f64,
}

impl Oracle<'_> {
    pub fn validate(&self, snap: &Snapshot, require_full: bool) -> Vec<Violation> {
        validate_allocation(
            self.formation,
            &snap.assignment,
            snap.superframe_size,
            self.channel,
            self.beacon_power,
            require_full,
        )
    }

    fn all_resolved(snap: &Snapshot) -> bool {
        let mut any = false;
        for l in snap.lifecycle.iter().flatten() {
            if *l != Lifecycle::Resolved {
                return false;
            }
            any = true;
        }
        any
    }

    /// Every participating UAV is resolved and every beacon gets through.
    pub fn detect_resolution(&self, snap: &Snapshot) -> bool {
        Self::all_resolved(snap) && self.validate(snap, false).is_empty()
    }

    /// Resolution with no globally unused transmission slot.
    pub fn detect_convergence(&self, snap: &Snapshot) -> bool {
        Self::all_resolved(snap) && self.validate(snap, true).is_empty()
    }
}
