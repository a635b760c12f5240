//! Individual protocol rules as pure functions of their inputs.

use rand::Rng;

use crate::protocol::{Beacon, ForbiddenSet, GrowRequest, Lifecycle, Record, Setting, SlotOutcome, TxSlot};

/// Slots with setting 0 or 2.
pub fn available_slots(record: &Record) -> Vec<TxSlot> {
    record
        .settings()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_available())
        .map(|(i, _)| TxSlot::from_index(i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoSlotAvailable;

/// Uniform pick among the available slots.
pub fn select_allocation<R: Rng + ?Sized>(record: &Record, rng: &mut R) -> Result<TxSlot, NoSlotAvailable> {
    let available = available_slots(record);
    if available.is_empty() {
        Err(NoSlotAvailable)
    } else {
        Ok(available[rng.gen_range(0..available.len())])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptOutcome {
    Claimed,
    Failed,
    /// No neighbor beacon heard at all: no evidence either way.
    Silent,
    /// Beacons were heard but none of them covered the slot in question.
    Unknown,
}

/// Running summary of what neighbors reported about one slot of ours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReceptionTally {
    pub beacons: u32,
    pub informative: u32,
    pub failed: bool,
}

impl ReceptionTally {
    pub fn add(&mut self, own_slot: TxSlot, beacon: &Beacon) {
        self.beacons += 1;
        if let Some(setting) = beacon.record.get(own_slot) {
            self.informative += 1;
            if setting != Setting::Received {
                self.failed = true;
            }
        }
    }

    pub fn outcome(&self) -> AttemptOutcome {
        if self.failed {
            AttemptOutcome::Failed
        } else if self.beacons == 0 {
            AttemptOutcome::Silent
        } else if self.informative == 0 {
            AttemptOutcome::Unknown
        } else {
            AttemptOutcome::Claimed
        }
    }
}

pub fn evaluate_attempt<'a>(own_slot: TxSlot, neighbor_beacons: impl IntoIterator<Item = &'a Beacon>) -> AttemptOutcome {
    let mut tally = ReceptionTally::default();
    for b in neighbor_beacons {
        tally.add(own_slot, b);
    }
    tally.outcome()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptFollowUp {
    RetrySelect,
    RequestGrowMargin,
}

/// Count a failed self-allocation; at `ct` ask for `gm` more slots and start over.
pub fn on_attempt_failed(c: &mut u32, ct: u32) -> AttemptFollowUp {
    *c += 1;
    if *c >= ct {
        *c = 0;
        AttemptFollowUp::RequestGrowMargin
    } else {
        AttemptFollowUp::RetrySelect
    }
}

/// Growth agreed in this superframe's G/GN slots. A UAV that transmitted in GN
/// passes `Energy` for `gn`.
pub fn resolve_grow_phase(
    g: &SlotOutcome,
    gn: &SlotOutcome,
    i_transmitted_g: bool,
    my_request: GrowRequest,
    gm: u32,
) -> u32 {
    if gn.is_active() {
        return gm;
    }
    if let SlotOutcome::Decoded(b) = g {
        return if b.grow_margin_flag { gm } else { 1 };
    }
    if i_transmitted_g {
        return match my_request {
            GrowRequest::PlusMargin => gm,
            GrowRequest::PlusOne => 1,
            GrowRequest::None => 0,
        };
    }
    0
}

/// NACK the grow slot when something was sent there but could not be decoded.
pub fn gn_decision(g: &SlotOutcome) -> bool {
    matches!(g, SlotOutcome::Energy)
}

/// Highest slot whose silence counter reached `st`, skipping the claimed slot
/// and anything in the forbidden set. Growth appends at the end, so the tail is
/// where globally unused slots collect.
pub fn highest_eligible_silent(counters: &[u32], claimed: TxSlot, st: u32, forbidden: &ForbiddenSet) -> Option<TxSlot> {
    counters
        .iter()
        .enumerate()
        .rev()
        .map(|(i, &c)| (TxSlot::from_index(i), c))
        .find(|&(slot, c)| c >= st && slot != claimed && !forbidden.contains(slot))
        .map(|(slot, _)| slot)
}

/// End-of-superframe silence bookkeeping for a resolved UAV. Any activity in
/// the grow slots wipes all counters.
pub fn update_silence_counters(
    counters: &mut [u32],
    claimed: TxSlot,
    observations: &[Setting],
    grow_activity: bool,
    st: u32,
    forbidden: &ForbiddenSet,
) -> Option<TxSlot> {
    if grow_activity {
        counters.iter_mut().for_each(|c| *c = 0);
        return None;
    }
    for (i, c) in counters.iter_mut().enumerate() {
        let silent = observations.get(i).copied().unwrap_or(Setting::Nothing) == Setting::Nothing;
        if TxSlot::from_index(i) != claimed && silent {
            *c += 1;
        } else {
            *c = 0;
        }
    }
    highest_eligible_silent(counters, claimed, st, forbidden)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkDecision {
    RemoveSlot(TxSlot),
    NoChange,
    BackoffAndRetry,
    AbortToForbidden(TxSlot),
}

/// Outcome of this superframe's S/SO/SN slots. `my_proposal` is set iff this
/// UAV transmitted in S. A UAV that transmitted in SO or SN passes `Energy`
/// for that slot.
pub fn resolve_shrink_phase(
    s: &SlotOutcome,
    so: &SlotOutcome,
    sn: &SlotOutcome,
    my_proposal: Option<TxSlot>,
) -> ShrinkDecision {
    match my_proposal {
        Some(proposal) => {
            if so.is_active() {
                ShrinkDecision::AbortToForbidden(proposal)
            } else if sn.is_active() {
                ShrinkDecision::BackoffAndRetry
            } else {
                ShrinkDecision::RemoveSlot(proposal)
            }
        }
        None => match s {
            SlotOutcome::Decoded(b) if !so.is_active() && !sn.is_active() => match b.slot_to_remove {
                Some(slot) => ShrinkDecision::RemoveSlot(slot),
                None => ShrinkDecision::NoChange,
            },
            _ => ShrinkDecision::NoChange,
        },
    }
}

/// Object in SO: always while still allocating, or when the proposal targets
/// our own claimed slot.
pub fn so_decision(s: &SlotOutcome, lifecycle: Lifecycle, claimed: Option<TxSlot>) -> bool {
    match lifecycle {
        Lifecycle::Allocation => s.is_active(),
        Lifecycle::Resolved => match s {
            SlotOutcome::Decoded(b) => b.slot_to_remove.is_some() && b.slot_to_remove == claimed,
            _ => false,
        },
        Lifecycle::Start => false,
    }
}

/// NACK the shrink slot when it carried undecodable energy.
pub fn sn_decision(s: &SlotOutcome) -> bool {
    matches!(s, SlotOutcome::Energy)
}

/// Superframes to wait before the next S transmission. The first attempt of a
/// proposal waits the UAV's own slot number; retries draw from
/// `[0, 2^min(s, cap) - 1]`.
pub fn shrink_backoff<R: Rng + ?Sized>(s: u32, backoff_cap: u32, own_slot: TxSlot, first_attempt: bool, rng: &mut R) -> u32 {
    if first_attempt {
        return own_slot.number();
    }
    let window = 1u32 << s.min(backoff_cap);
    rng.gen_range(0..window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureVerdict {
    Keep,
    Release,
}

/// Resolved UAV's end-of-superframe check. One bad superframe is tolerated;
/// from the second consecutive one on the slot is kept only with probability
/// `tsr`.
pub fn resolved_failure_check<R: Rng + ?Sized>(f: &mut u32, all_received: bool, tsr: f64, rng: &mut R) -> FailureVerdict {
    if all_received {
        *f = 0;
        return FailureVerdict::Keep;
    }
    *f += 1;
    if *f >= 2 && !rng.gen_bool(tsr) {
        FailureVerdict::Release
    } else {
        FailureVerdict::Keep
    }
}
