//! The per-UAV slot allocation protocol.
//!
//! A superframe is five management slots (grow, grow-NACK, shrink,
//! shrink-objection, shrink-NACK) followed by `n` transmission slots. UAVs
//! self-allocate transmission slots by trial, learn whether their beacons got
//! through from the records their neighbors broadcast, grow the superframe when
//! contention is too high and negotiate the removal of unused slots.
//!
//! The free functions in [`ops`] are the individual protocol rules; [`UavState`]
//! strings them together into the per-superframe state machine driven by the
//! simulator.

mod forbidden;
pub mod ops;
mod record;
mod uav;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Vec3;

pub use forbidden::{forbidden_set_tick, ForbiddenSet};
pub use ops::*;
pub use record::{decode_record, encode_record, EncodedRecord, Record, Setting};
pub use uav::{Heard, UavEvent, UavState};

/// Number of management slots at the head of every superframe.
pub const MANAGEMENT_SLOTS: u32 = 5;

/// A transmission slot, numbered from 1 like `T1..Tn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxSlot(u32);

impl TxSlot {
    /// Panics on 0; slot numbering starts at 1.
    pub fn new(number: u32) -> Self {
        assert!(number >= 1, "transmission slots are numbered from 1");
        TxSlot(number)
    }

    pub fn from_index(index: usize) -> Self {
        TxSlot(index as u32 + 1)
    }

    pub fn number(self) -> u32 {
        self.0
    }

    /// Zero-based position in per-slot vectors.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn prev(self) -> Self {
        TxSlot(self.0 - 1)
    }
}

impl fmt::Display for TxSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// Any slot of the superframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotId {
    Grow,
    GrowNack,
    Shrink,
    ShrinkObject,
    ShrinkNack,
    Tx(TxSlot),
}

impl SlotId {
    pub const MANAGEMENT: [SlotId; 5] =
        [SlotId::Grow, SlotId::GrowNack, SlotId::Shrink, SlotId::ShrinkObject, SlotId::ShrinkNack];

    pub fn is_management(self) -> bool {
        !matches!(self, SlotId::Tx(_))
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotId::Grow => f.write_str("G"),
            SlotId::GrowNack => f.write_str("GN"),
            SlotId::Shrink => f.write_str("S"),
            SlotId::ShrinkObject => f.write_str("SO"),
            SlotId::ShrinkNack => f.write_str("SN"),
            SlotId::Tx(t) => t.fmt(f),
        }
    }
}

/// Settings every UAV is configured with before deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Consecutive failed self-allocations before requesting `gm` extra slots.
    pub ct: u32,
    /// Growth margin in slots.
    pub gm: u32,
    /// Superframes a slot must stay silent before a removal is proposed.
    pub st: u32,
    /// Default starting superframe size in transmission slots.
    pub dss: u32,
    /// Time-slot retention probability.
    pub tsr: f64,
    /// Forbidden-set timeout in superframes.
    pub fst: u32,
    /// Exponent cap of the truncated exponential shrink backoff.
    pub backoff_cap: u32,
    /// dBm, transmission slots.
    pub beacon_tx_power: f64,
    /// dBm, management slots.
    pub adapt_tx_power: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            ct: 7,
            gm: 3,
            st: 5,
            dss: 10,
            tsr: 0.75,
            fst: 10,
            backoff_cap: 5,
            beacon_tx_power: -20.0,
            adapt_tx_power: -3.0,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("ct", self.ct), ("gm", self.gm), ("st", self.st), ("dss", self.dss), ("fst", self.fst)];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("protocol.{name} must be >= 1")));
            }
        }
        if self.backoff_cap == 0 || self.backoff_cap > 30 {
            return Err(Error::Config("protocol.backoff_cap must be in 1..=30".into()));
        }
        if !(0.0..=1.0).contains(&self.tsr) {
            return Err(Error::Config("protocol.tsr must be within [0, 1]".into()));
        }
        if !(self.adapt_tx_power >= self.beacon_tx_power) {
            return Err(Error::Config("adapt transmit power must be >= beacon transmit power".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lifecycle {
    Start,
    Allocation,
    Resolved,
}

impl fmt::Display for Lifecycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lifecycle::Start => "start",
            Lifecycle::Allocation => "allocation",
            Lifecycle::Resolved => "resolved",
        })
    }
}

/// Pending request to transmit in the grow slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GrowRequest {
    #[default]
    None,
    /// No available slot was seen.
    PlusOne,
    /// The collision threshold was reached.
    PlusMargin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyInfo {
    pub position: Vec3,
    pub heading: Vec3,
    /// m/s
    pub speed: f64,
}

/// Fixed-size beacon fields; everything but the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconHeader {
    pub superframe_size: u32,
    pub current_slot: SlotId,
    pub grow_margin_flag: bool,
    pub slot_to_remove: Option<TxSlot>,
    pub leaving_flag: bool,
    pub uav_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beacon {
    pub header: BeaconHeader,
    pub safety: SafetyInfo,
    /// Last field; its length follows the sender's superframe view.
    pub record: Record,
}

impl Beacon {
    pub fn validate(&self) -> Result<()> {
        if self.record.len() != self.header.superframe_size as usize {
            return Err(Error::Domain(format!(
                "beacon record has {} entries for a superframe of {}",
                self.record.len(),
                self.header.superframe_size
            )));
        }
        if let Some(s) = self.header.slot_to_remove {
            if s.number() > self.header.superframe_size {
                return Err(Error::Domain(format!("slot to remove {s} beyond superframe")));
            }
        }
        Ok(())
    }
}

/// A listener's view of one slot, keeping only the fixed beacon fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotOutcome {
    #[default]
    Nothing,
    Energy,
    Decoded(BeaconHeader),
}

impl SlotOutcome {
    /// Anything but silence.
    pub fn is_active(&self) -> bool {
        !matches!(self, SlotOutcome::Nothing)
    }

    pub fn setting(&self) -> Setting {
        match self {
            SlotOutcome::Nothing => Setting::Nothing,
            SlotOutcome::Energy => Setting::DecodeFailure,
            SlotOutcome::Decoded(_) => Setting::Received,
        }
    }
}
