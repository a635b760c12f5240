use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::ops::{
    gn_decision, highest_eligible_silent, on_attempt_failed, resolve_grow_phase, resolve_shrink_phase,
    resolved_failure_check, select_allocation, shrink_backoff, sn_decision, so_decision, update_silence_counters,
    AttemptFollowUp, AttemptOutcome, FailureVerdict, ReceptionTally, ShrinkDecision,
};
use crate::protocol::{
    Beacon, BeaconHeader, ForbiddenSet, GrowRequest, Lifecycle, ProtocolParams, Record, SafetyInfo, Setting, SlotId,
    SlotOutcome, TxSlot,
};
use crate::topology::{within_radius, Vec3};

/// What reached a listening UAV in one slot.
#[derive(Debug, Clone, Copy)]
pub enum Heard<'a> {
    Nothing,
    Energy,
    Decoded(&'a Beacon),
}

impl Heard<'_> {
    fn outcome(&self) -> SlotOutcome {
        match self {
            Heard::Nothing => SlotOutcome::Nothing,
            Heard::Energy => SlotOutcome::Energy,
            Heard::Decoded(b) => SlotOutcome::Decoded(b.header),
        }
    }
}

/// Things worth putting in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", content = "slot", rename_all = "snake_case")]
pub enum UavEvent {
    EnteredAllocation,
    Selected(TxSlot),
    AttemptFailed(TxSlot),
    Claimed(TxSlot),
    Released(TxSlot),
    GrowRequested(GrowRequest),
    Grew(u32),
    Proposed(TxSlot),
    ProposalCollided(TxSlot),
    ProposalVetoed(TxSlot),
    SlotRemoved(TxSlot),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Report {
    epoch: u64,
    /// Someone decoded a beacon there.
    busy: bool,
    /// Someone heard anything there.
    active: bool,
}

#[derive(Debug, Clone, Copy)]
struct PendingProposal {
    /// Superframes to sit out before transmitting in S.
    wait: u32,
    /// Set during the superframe the wait was drawn in; the boundary that
    /// closes that superframe does not count down.
    fresh: bool,
}

/// Scratch state for the superframe in progress.
#[derive(Debug, Clone, Default)]
struct Round {
    g: SlotOutcome,
    gn: SlotOutcome,
    s: SlotOutcome,
    so: SlotOutcome,
    sn: SlotOutcome,
    sent_g: bool,
    sent_gn: bool,
    sent_so: bool,
    sent_sn: bool,
    proposed: Option<TxSlot>,
    heard_size: Option<u32>,
    pending_removal: Option<TxSlot>,
}

impl Round {
    fn grow_activity(&self) -> bool {
        self.sent_g || self.sent_gn || self.g.is_active() || self.gn.is_active()
    }
}

/// One UAV's complete protocol state.
#[derive(Debug, Clone)]
pub struct UavState {
    id: u32,
    position: Vec3,
    safety_radius: f64,
    lifecycle: Lifecycle,
    claimed_slot: Option<TxSlot>,
    tentative: Option<TxSlot>,
    /// Reports on our current slot heard since we last transmitted in it;
    /// `None` until the first transmission there.
    tally: Option<ReceptionTally>,
    /// Consecutive failed self-allocation attempts.
    c: u32,
    /// Consecutive superframes with a failed beacon while resolved.
    f: u32,
    /// Consecutive collided shrink proposals.
    s: u32,
    silence: Vec<u32>,
    forbidden: ForbiddenSet,
    proposal: Option<PendingProposal>,
    superframe_size: u32,
    obs_prev: Vec<Setting>,
    obs_cur: Vec<Setting>,
    /// Freshest neighbor report per slot.
    reports: Vec<Option<Report>>,
    /// Superframes completed, used to age `reports`.
    epoch: u64,
    grow_intent: GrowRequest,
    awaiting_selection: bool,
    leaving_at: Option<u64>,
    round: Round,
    events: Vec<UavEvent>,
}

impl UavState {
    /// A UAV that just powered on and listens for its first beacon.
    pub fn joiner(id: u32, position: Vec3, safety_radius: f64) -> Self {
        UavState {
            id,
            position,
            safety_radius,
            lifecycle: Lifecycle::Start,
            claimed_slot: None,
            tentative: None,
            tally: None,
            c: 0,
            f: 0,
            s: 0,
            silence: Vec::new(),
            forbidden: ForbiddenSet::new(),
            proposal: None,
            superframe_size: 0,
            obs_prev: Vec::new(),
            obs_cur: Vec::new(),
            reports: Vec::new(),
            epoch: 0,
            grow_intent: GrowRequest::None,
            awaiting_selection: false,
            leaving_at: None,
            round: Round::default(),
            events: Vec::new(),
        }
    }

    /// The formation's first UAV: adopts the default superframe and owns T1.
    pub fn first(id: u32, position: Vec3, safety_radius: f64, params: &ProtocolParams) -> Self {
        let mut uav = Self::joiner(id, position, safety_radius);
        let n = params.dss as usize;
        uav.lifecycle = Lifecycle::Resolved;
        uav.claimed_slot = Some(TxSlot::new(1));
        uav.superframe_size = params.dss;
        uav.obs_prev = vec![Setting::Nothing; n];
        uav.obs_cur = vec![Setting::Nothing; n];
        uav.reports = vec![None; n];
        uav.silence = vec![0; n];
        uav.events.push(UavEvent::Claimed(TxSlot::new(1)));
        uav
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn lifecycle(&self) -> Lifecycle {
        self.lifecycle
    }

    pub fn claimed_slot(&self) -> Option<TxSlot> {
        self.claimed_slot
    }

    pub fn tentative_slot(&self) -> Option<TxSlot> {
        self.tentative
    }

    pub fn collision_count(&self) -> u32 {
        self.c
    }

    pub fn failure_count(&self) -> u32 {
        self.f
    }

    pub fn shrink_collisions(&self) -> u32 {
        self.s
    }

    pub fn forbidden(&self) -> &ForbiddenSet {
        &self.forbidden
    }

    pub fn silence_counters(&self) -> &[u32] {
        &self.silence
    }

    pub fn grow_intent(&self) -> GrowRequest {
        self.grow_intent
    }

    pub fn pending_shrink_backoff(&self) -> Option<u32> {
        self.proposal.map(|p| p.wait)
    }

    /// Transmission-slot count in this UAV's view, `None` before it has one.
    pub fn superframe_size(&self) -> Option<u32> {
        (self.lifecycle != Lifecycle::Start).then_some(self.superframe_size)
    }

    /// The transmission slot this UAV beacons in, if any.
    pub fn tx_slot(&self) -> Option<TxSlot> {
        match self.lifecycle {
            Lifecycle::Resolved => self.claimed_slot,
            Lifecycle::Allocation => self.tentative,
            Lifecycle::Start => None,
        }
    }

    pub fn schedule_leave(&mut self, superframe: u64) {
        self.leaving_at = Some(superframe);
    }

    pub fn take_events(&mut self) -> Vec<UavEvent> {
        std::mem::take(&mut self.events)
    }

    /// Record for a beacon sent in `slot`: this superframe's observations for
    /// slots already past, last superframe's for the rest.
    pub fn record_for(&self, slot: SlotId) -> Record {
        let split = match slot {
            SlotId::Tx(t) => t.index().min(self.obs_cur.len()),
            _ => 0,
        };
        let mut settings = Vec::with_capacity(self.superframe_size as usize);
        settings.extend_from_slice(&self.obs_cur[..split]);
        settings.extend_from_slice(&self.obs_prev[split..]);
        Record(settings)
    }

    pub fn build_beacon(&self, slot: SlotId, superframe: u64) -> Beacon {
        Beacon {
            header: BeaconHeader {
                superframe_size: self.superframe_size,
                current_slot: slot,
                grow_margin_flag: false,
                slot_to_remove: None,
                leaving_flag: matches!(slot, SlotId::Tx(_)) && self.leaving_at == Some(superframe),
                uav_id: self.id,
            },
            safety: SafetyInfo { position: self.position, heading: Vec3::new(1.0, 0.0, 0.0), speed: 0.0 },
            record: self.record_for(slot),
        }
    }

    // ---- grow phase ----

    pub fn grow_beacon(&mut self, superframe: u64) -> Option<Beacon> {
        if self.lifecycle != Lifecycle::Allocation || self.grow_intent == GrowRequest::None {
            return None;
        }
        self.round.sent_g = true;
        let mut b = self.build_beacon(SlotId::Grow, superframe);
        b.header.grow_margin_flag = self.grow_intent == GrowRequest::PlusMargin;
        Some(b)
    }

    pub fn grow_nack_beacon(&mut self, superframe: u64) -> Option<Beacon> {
        if self.lifecycle == Lifecycle::Start || self.round.sent_g || !gn_decision(&self.round.g) {
            return None;
        }
        self.round.sent_gn = true;
        Some(self.build_beacon(SlotId::GrowNack, superframe))
    }

    /// Apply the growth agreed in G/GN and, if this UAV was waiting on it,
    /// pick a slot among the enlarged superframe. Returns the growth.
    pub fn finish_grow_phase<R: Rng + ?Sized>(&mut self, params: &ProtocolParams, rng: &mut R) -> u32 {
        if self.lifecycle == Lifecycle::Start {
            // A size learned in G or GN predates this superframe's growth.
            if let Some(size) = self.round.heard_size.as_mut() {
                *size += resolve_grow_phase(&self.round.g, &self.round.gn, false, GrowRequest::None, params.gm);
            }
            return 0;
        }
        let gn = if self.round.sent_gn { SlotOutcome::Energy } else { self.round.gn };
        let growth = resolve_grow_phase(&self.round.g, &gn, self.round.sent_g, self.grow_intent, params.gm);
        if growth > 0 {
            self.superframe_size += growth;
            let n = self.superframe_size as usize;
            self.obs_prev.resize(n, Setting::Nothing);
            self.obs_cur.resize(n, Setting::Nothing);
            self.reports.resize(n, None);
            if self.lifecycle == Lifecycle::Resolved {
                self.silence.resize(n, 0);
            }
            self.events.push(UavEvent::Grew(growth));
        }
        if self.round.sent_g {
            self.grow_intent = GrowRequest::None;
        }
        if self.lifecycle == Lifecycle::Allocation && self.awaiting_selection && self.grow_intent == GrowRequest::None {
            self.select(self.selection_view(None), rng);
        }
        growth
    }

    // ---- shrink phase ----

    pub fn shrink_beacon(&mut self, params: &ProtocolParams, superframe: u64) -> Option<Beacon> {
        let claimed = self.claimed_slot?;
        let pending = self.proposal?;
        if self.lifecycle != Lifecycle::Resolved || pending.wait > 0 || self.round.grow_activity() {
            return None;
        }
        match highest_eligible_silent(&self.silence, claimed, params.st, &self.forbidden) {
            Some(target) => {
                self.round.proposed = Some(target);
                self.events.push(UavEvent::Proposed(target));
                let mut b = self.build_beacon(SlotId::Shrink, superframe);
                b.header.slot_to_remove = Some(target);
                Some(b)
            }
            None => {
                self.proposal = None;
                self.s = 0;
                None
            }
        }
    }

    pub fn shrink_object_beacon(&mut self, superframe: u64) -> Option<Beacon> {
        if self.round.proposed.is_some() || !so_decision(&self.round.s, self.lifecycle, self.claimed_slot) {
            return None;
        }
        self.round.sent_so = true;
        Some(self.build_beacon(SlotId::ShrinkObject, superframe))
    }

    pub fn shrink_nack_beacon(&mut self, superframe: u64) -> Option<Beacon> {
        if self.lifecycle == Lifecycle::Start || self.round.proposed.is_some() || !sn_decision(&self.round.s) {
            return None;
        }
        self.round.sent_sn = true;
        Some(self.build_beacon(SlotId::ShrinkNack, superframe))
    }

    /// Settle this superframe's S/SO/SN exchange. Any agreed removal is
    /// applied at the next superframe boundary.
    pub fn finish_shrink_phase<R: Rng + ?Sized>(&mut self, params: &ProtocolParams, rng: &mut R) -> ShrinkDecision {
        let so = if self.round.sent_so { SlotOutcome::Energy } else { self.round.so };
        let sn = if self.round.sent_sn { SlotOutcome::Energy } else { self.round.sn };
        let decision = resolve_shrink_phase(&self.round.s, &so, &sn, self.round.proposed);
        match decision {
            ShrinkDecision::RemoveSlot(slot) => {
                if self.round.proposed.is_some() {
                    self.proposal = None;
                    self.s = 0;
                }
                self.round.pending_removal = Some(slot);
            }
            ShrinkDecision::BackoffAndRetry => {
                let claimed = self.claimed_slot.expect("proposer is resolved");
                self.s += 1;
                let wait = shrink_backoff(self.s, self.backoff_cap(params), claimed, false, rng);
                self.proposal = Some(PendingProposal { wait, fresh: true });
                self.events.push(UavEvent::ProposalCollided(self.round.proposed.expect("proposer")));
            }
            ShrinkDecision::AbortToForbidden(slot) => {
                self.forbidden.insert(slot);
                if let Some(c) = self.silence.get_mut(slot.index()) {
                    *c = 0;
                }
                self.proposal = None;
                self.s = 0;
                self.events.push(UavEvent::ProposalVetoed(slot));
            }
            ShrinkDecision::NoChange => {
                // A proposal we decoded drew an objection: the slot is in use
                // somewhere, so don't propose it ourselves either.
                if let (SlotOutcome::Decoded(b), true) = (&self.round.s, so.is_active()) {
                    if let (Some(target), Lifecycle::Resolved) = (b.slot_to_remove, self.lifecycle) {
                        if Some(target) != self.claimed_slot && target.number() <= self.superframe_size {
                            self.forbidden.insert(target);
                            if let Some(c) = self.silence.get_mut(target.index()) {
                                *c = 0;
                            }
                        }
                    }
                }
            }
        }
        // Someone else's removal went through: slot order changed, so restart
        // from our own position. A vetoed proposal changes nothing.
        if self.round.proposed.is_none() && matches!(decision, ShrinkDecision::RemoveSlot(_)) {
            // UAVs reusing a slot number share an initial wait; one that has
            // already collided keeps a random draw on top.
            let cap = self.backoff_cap(params);
            if let (Some(p), Some(claimed)) = (self.proposal.as_mut(), self.claimed_slot) {
                let jitter = if self.s > 0 { shrink_backoff(self.s, cap, claimed, false, rng) } else { 0 };
                p.wait = shrink_backoff(0, cap, claimed, true, rng) + jitter;
                p.fresh = true;
            }
        }
        decision
    }

    // ---- observations ----

    pub fn observe(&mut self, slot: SlotId, heard: Heard<'_>) {
        let outcome = heard.outcome();
        if let (Lifecycle::Start, Heard::Decoded(b), true) = (self.lifecycle, heard, slot.is_management()) {
            // Management beacons carry the superframe size too.
            self.round.heard_size = Some(b.header.superframe_size);
        }
        match slot {
            SlotId::Grow => self.round.g = outcome,
            SlotId::GrowNack => self.round.gn = outcome,
            SlotId::Shrink => self.round.s = outcome,
            SlotId::ShrinkObject => self.round.so = outcome,
            SlotId::ShrinkNack => self.round.sn = outcome,
            SlotId::Tx(t) => self.observe_tx(t, heard),
        }
    }

    fn observe_tx(&mut self, slot: TxSlot, heard: Heard<'_>) {
        debug_assert_ne!(self.tx_slot(), Some(slot), "UAV {} cannot receive while transmitting", self.id);
        let mut setting = heard.outcome().setting();
        if let Heard::Decoded(beacon) = heard {
            if beacon.header.leaving_flag {
                // A departing owner frees its slot.
                setting = Setting::Nothing;
            }
            if self.lifecycle == Lifecycle::Start {
                self.round.heard_size = Some(beacon.header.superframe_size);
            }
            if within_radius(&self.position, &beacon.safety.position, self.safety_radius) {
                self.take_reports(slot, beacon.record.settings());
                if let (Some(own), Some(tally)) = (self.tx_slot(), self.tally.as_mut()) {
                    tally.add(own, beacon);
                }
            }
        }
        let i = slot.index();
        if i >= self.obs_cur.len() {
            self.obs_cur.resize(i + 1, Setting::Nothing);
        }
        self.obs_cur[i] = setting;
    }

    /// Entries before the sender's slot describe this superframe, entries after
    /// it the previous one. A newer report replaces an older one; reports on
    /// the same superframe are merged.
    fn take_reports(&mut self, sender: TxSlot, reported: &[Setting]) {
        if self.reports.len() < reported.len() {
            self.reports.resize(reported.len(), None);
        }
        let own = sender.index();
        for (j, &r) in reported.iter().enumerate() {
            if j == own {
                continue;
            }
            let age = if j < own { self.epoch } else { self.epoch.saturating_sub(1) };
            let busy = r == Setting::Received;
            let active = r != Setting::Nothing;
            let entry = &mut self.reports[j];
            match entry {
                Some(e) if e.epoch == age => {
                    e.busy |= busy;
                    e.active |= active;
                }
                Some(e) if e.epoch > age => {}
                _ => *entry = Some(Report { epoch: age, busy, active }),
            }
        }
    }

    /// Beacon for transmission slot `slot`, if this UAV sends in it.
    ///
    /// Every neighbor has reported on our previous transmission by the time our
    /// slot comes round again, so this is where an attempt is judged (and a
    /// resolved slot re-checked). A failed attempt picks its next slot right
    /// away from the freshest view; if that slot is still ahead in this
    /// superframe the new attempt starts immediately.
    pub fn transmit<R: Rng + ?Sized>(
        &mut self,
        slot: TxSlot,
        superframe: u64,
        params: &ProtocolParams,
        rng: &mut R,
    ) -> Option<Beacon> {
        if self.tx_slot() != Some(slot) {
            return None;
        }
        if let Some(tally) = self.tally.take() {
            self.judge(slot, tally.outcome(), params, rng);
            if self.tx_slot() != Some(slot) {
                return None;
            }
        }
        self.tally = Some(ReceptionTally::default());
        Some(self.build_beacon(SlotId::Tx(slot), superframe))
    }

    fn judge<R: Rng + ?Sized>(&mut self, slot: TxSlot, outcome: AttemptOutcome, params: &ProtocolParams, rng: &mut R) {
        match self.lifecycle {
            Lifecycle::Allocation => match outcome {
                AttemptOutcome::Claimed => {
                    self.lifecycle = Lifecycle::Resolved;
                    self.claimed_slot = Some(slot);
                    self.tentative = None;
                    self.c = 0;
                    self.f = 0;
                    self.s = 0;
                    self.silence = vec![0; self.superframe_size as usize];
                    self.proposal = None;
                    self.events.push(UavEvent::Claimed(slot));
                }
                // Success needs a record saying so; hearing nobody is not
                // enough.
                AttemptOutcome::Failed | AttemptOutcome::Silent => {
                    self.tentative = None;
                    self.events.push(UavEvent::AttemptFailed(slot));
                    self.awaiting_selection = true;
                    match on_attempt_failed(&mut self.c, params.ct) {
                        AttemptFollowUp::RetrySelect => self.select(self.selection_view(Some(slot)), rng),
                        AttemptFollowUp::RequestGrowMargin => {
                            self.grow_intent = GrowRequest::PlusMargin;
                            self.events.push(UavEvent::GrowRequested(GrowRequest::PlusMargin));
                        }
                    }
                }
                // Nothing usable heard; keep going another superframe.
                AttemptOutcome::Unknown => {}
            },
            Lifecycle::Resolved => {
                // Only an explicit report counts against a claimed slot.
                let all_received = outcome != AttemptOutcome::Failed;
                if resolved_failure_check(&mut self.f, all_received, params.tsr, rng) == FailureVerdict::Release {
                    self.lifecycle = Lifecycle::Allocation;
                    self.claimed_slot = None;
                    self.f = 0;
                    self.c = 0;
                    self.s = 0;
                    self.silence.clear();
                    self.proposal = None;
                    self.awaiting_selection = true;
                    self.events.push(UavEvent::Released(slot));
                    self.select(self.selection_view(Some(slot)), rng);
                }
            }
            Lifecycle::Start => {}
        }
    }

    /// Slot-free beacon for inspection and tests; the simulator goes through
    /// [`UavState::transmit`].
    pub fn tx_beacon(&self, slot: TxSlot, superframe: u64) -> Option<Beacon> {
        (self.tx_slot() == Some(slot)).then(|| self.build_beacon(SlotId::Tx(slot), superframe))
    }

    // ---- superframe boundary ----

    /// Everything that happens when a superframe closes: joining, silence
    /// bookkeeping, forbidden-set aging, the agreed removal, and picking the
    /// next slot to try.
    pub fn end_superframe<R: Rng + ?Sized>(&mut self, params: &ProtocolParams, rng: &mut R) -> Result<()> {
        let round = std::mem::take(&mut self.round);
        match self.lifecycle {
            Lifecycle::Start => {
                if let Some(size) = round.heard_size {
                    self.superframe_size = size;
                    self.obs_cur.resize(size as usize, Setting::Nothing);
                    self.obs_prev = vec![Setting::Nothing; size as usize];
                    self.reports.resize(size as usize, None);
                    self.lifecycle = Lifecycle::Allocation;
                    self.awaiting_selection = true;
                    self.events.push(UavEvent::EnteredAllocation);
                } else {
                    self.obs_cur.clear();
                    self.reports.clear();
                    return Ok(());
                }
            }
            Lifecycle::Allocation => {}
            Lifecycle::Resolved => self.track_silence(&round, params, rng),
        }

        self.forbidden.tick(params.fst.max(self.superframe_size));
        let n = self.superframe_size as usize;
        self.obs_prev = std::mem::replace(&mut self.obs_cur, vec![Setting::Nothing; n]);
        self.reports.resize(n, None);
        self.epoch += 1;
        if let Some(removed) = round.pending_removal {
            self.apply_slot_removal(removed)?;
            self.events.push(UavEvent::SlotRemoved(removed));
        }
        if self.lifecycle == Lifecycle::Allocation && self.awaiting_selection && self.grow_intent == GrowRequest::None {
            self.select(self.selection_view(None), rng);
        }
        Ok(())
    }

    /// The backoff window has to be able to spread every UAV in the formation,
    /// so it scales with the superframe.
    fn backoff_cap(&self, params: &ProtocolParams) -> u32 {
        let size_bits = u32::BITS - self.superframe_size.max(1).leading_zeros();
        params.backoff_cap.max(size_bits)
    }

    fn track_silence<R: Rng + ?Sized>(&mut self, round: &Round, params: &ProtocolParams, rng: &mut R) {
        let claimed = self.claimed_slot.expect("resolved UAV owns a slot");
        let grow_activity = round.grow_activity();
        // A slot is silent only if neither we nor any neighbor's record saw
        // activity there during this or the previous superframe.
        let mut heard = self.obs_cur.clone();
        for (j, h) in heard.iter_mut().enumerate() {
            if let Some(Some(r)) = self.reports.get(j) {
                if r.active && r.epoch + 1 >= self.epoch && *h == Setting::Nothing {
                    *h = Setting::DecodeFailure;
                }
            }
        }
        let candidate =
            update_silence_counters(&mut self.silence, claimed, &heard, grow_activity, params.st, &self.forbidden);
        if grow_activity {
            self.proposal = None;
            self.s = 0;
        } else if let Some(p) = self.proposal.as_mut() {
            if p.fresh {
                p.fresh = false;
            } else {
                p.wait = p.wait.saturating_sub(1);
            }
        } else if candidate.is_some() {
            let wait = shrink_backoff(0, self.backoff_cap(params), claimed, true, rng);
            self.proposal = Some(PendingProposal { wait, fresh: false });
        }
    }

    /// What a selecting UAV knows: its own latest observations, with every slot
    /// whose freshest neighbor report says received marked taken. `at` is the
    /// transmission slot being left mid-superframe; `None` between superframes.
    fn selection_view(&self, at: Option<TxSlot>) -> Record {
        let mut view = match at {
            Some(t) => self.record_for(SlotId::Tx(t)),
            None => Record(self.obs_prev.clone()),
        };
        for (j, v) in view.0.iter_mut().enumerate() {
            if matches!(self.reports.get(j), Some(Some(Report { busy: true, .. }))) {
                *v = Setting::Received;
            }
        }
        view
    }

    fn select<R: Rng + ?Sized>(&mut self, view: Record, rng: &mut R) {
        match select_allocation(&view, rng) {
            Ok(slot) => {
                self.tentative = Some(slot);
                self.tally = None;
                self.awaiting_selection = false;
                self.events.push(UavEvent::Selected(slot));
            }
            Err(_) => {
                self.grow_intent = GrowRequest::PlusOne;
                self.events.push(UavEvent::GrowRequested(GrowRequest::PlusOne));
            }
        }
    }

    /// Drop transmission slot `removed` from this UAV's view and shift every
    /// higher index down by one.
    pub fn apply_slot_removal(&mut self, removed: TxSlot) -> Result<()> {
        if removed.number() > self.superframe_size || self.superframe_size <= 1 {
            return Err(Error::Domain(format!(
                "UAV {} cannot remove {removed} from a superframe of {}",
                self.id, self.superframe_size
            )));
        }
        if self.claimed_slot == Some(removed) {
            return Err(Error::Domain(format!("UAV {} lost its own slot {removed} to a removal", self.id)));
        }
        if self.tentative == Some(removed) {
            // Picked after the removal was agreed; choose again.
            self.tentative = None;
            self.tally = None;
            self.awaiting_selection = true;
        }
        let shift = |s: &mut Option<TxSlot>| {
            if let Some(slot) = s {
                if *slot > removed {
                    *slot = slot.prev();
                }
            }
        };
        shift(&mut self.claimed_slot);
        shift(&mut self.tentative);
        let i = removed.index();
        for v in [&mut self.obs_prev, &mut self.obs_cur] {
            if i < v.len() {
                v.remove(i);
            }
        }
        if i < self.reports.len() {
            self.reports.remove(i);
        }
        if i < self.silence.len() {
            self.silence.remove(i);
        }
        self.forbidden.shift_after_removal(removed);
        self.superframe_size -= 1;
        Ok(())
    }
}
