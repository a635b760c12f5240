//! Centralized first-fit allocator. Knows every position, so it gives a
//! reference superframe size the distributed protocol can be compared with.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{sinr_linear, ChannelParams, Emitter};
use crate::protocol::TxSlot;
use crate::sim::validate_allocation;
use crate::topology::Formation;
use crate::{Error, Result};

/// Order in which UAVs are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    #[default]
    ById,
    /// Most neighbors first, ties by id.
    ByDegree,
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-id" => Ok(Order::ById),
            "by-degree" => Ok(Order::ByDegree),
            other => Err(Error::Config(format!("unknown order {other:?}, expected by-id or by-degree"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralSchedule {
    /// Slot of each UAV, indexed by id.
    pub assignment: Vec<TxSlot>,
    pub slot_count: u32,
}

impl CentralSchedule {
    pub fn as_options(&self) -> Vec<Option<TxSlot>> {
        self.assignment.iter().copied().map(Some).collect()
    }

    /// `uav,slot` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["uav", "slot"])?;
        for (uav, slot) in self.assignment.iter().enumerate() {
            w.write_record([uav.to_string(), slot.number().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every transmitter in `txs` decoded by all its neighbors, and no two of them
/// neighbors of each other.
fn slot_feasible(formation: &Formation, txs: &[usize], channel: &ChannelParams, power: f64) -> bool {
    let threshold = channel.sinr_threshold_linear();
    let emitters: Vec<Emitter> =
        txs.iter().map(|&u| Emitter { position: formation.position(u), power_dbm: power }).collect();
    txs.iter().enumerate().all(|(k, &tx)| {
        formation.neighbors(tx).iter().all(|&rx| {
            !txs.contains(&rx) && sinr_linear(formation.position(rx), k, &emitters, channel) >= threshold
        })
    })
}

/// Place each UAV in the lowest slot that stays SINR-feasible, opening a new
/// slot when none does. Every neighbor is required to decode, whether or not
/// it has been placed yet, so the result never needs repair.
pub fn greedy_allocate(formation: &Formation, channel: &ChannelParams, beacon_power: f64, order: Order) -> CentralSchedule {
    let mut ids: Vec<usize> = (0..formation.len()).collect();
    if order == Order::ByDegree {
        ids.sort_by_key(|&u| (std::cmp::Reverse(formation.neighbors(u).len()), u));
    }
    let mut slots: Vec<Vec<usize>> = Vec::new();
    let mut assignment = vec![TxSlot::new(1); formation.len()];
    for u in ids {
        let mut placed = false;
        for (index, txs) in slots.iter_mut().enumerate() {
            txs.push(u);
            if slot_feasible(formation, txs, channel, beacon_power) {
                assignment[u] = TxSlot::from_index(index);
                placed = true;
                break;
            }
            txs.pop();
        }
        if !placed {
            assignment[u] = TxSlot::from_index(slots.len());
            slots.push(vec![u]);
        }
    }
    let schedule = CentralSchedule { assignment, slot_count: slots.len() as u32 };
    debug_assert!(validate_allocation(
        formation,
        &schedule.as_options(),
        schedule.slot_count,
        channel,
        beacon_power,
        true
    )
    .is_empty());
    schedule
}
