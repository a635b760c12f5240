//! Randomized invariant checks shared by the property tests and the
//! acceptance report. Each check runs `cases` random cases and returns the
//! first counterexample, if any.

#![allow(dead_code)]

use dstr::channel::CollisionModel;
use dstr::protocol::{
    available_slots, decode_record, encode_record, highest_eligible_silent, on_attempt_failed, resolve_grow_phase,
    select_allocation, AttemptFollowUp, BeaconHeader, ForbiddenSet, GrowRequest, Heard, Lifecycle, ProtocolParams,
    Record, Setting, SlotId, SlotOutcome, TxSlot, UavState,
};
use dstr::sim::{run, Oracle, Scenario, Snapshot, TraceRecord};
use dstr::topology::{FormationSpec, Vec3};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Check = fn(u32) -> Result<(), String>;

/// Every randomized check with its share of the suite.
pub const SUITE: &[(&str, Check, u32)] = &[
    ("record round-trip up to 512 slots", record_round_trip, 1500),
    ("selection never lands on a received slot", selection_avoids_received, 1500),
    ("collision counter bounded by ct", collision_counter_bounded, 1000),
    ("proposal excludes forbidden and own slot", proposal_eligibility, 1500),
    ("forbidden-set eviction at exactly fst", forbidden_eviction, 1000),
    ("removal order consistency (forbidden set)", forbidden_removal_commutes, 1000),
    ("removal order consistency (UAV state)", uav_removal_commutes, 1000),
    ("runs: consensus, validity, determinism", simulation_invariants, 400),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn settle<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn arb_setting() -> impl Strategy<Value = Setting> {
    prop_oneof![Just(Setting::Nothing), Just(Setting::Received), Just(Setting::DecodeFailure)]
}

fn arb_record(max: usize) -> impl Strategy<Value = Record> {
    prop::collection::vec(arb_setting(), 0..=max).prop_map(Record::new)
}

pub fn record_round_trip(cases: u32) -> Result<(), String> {
    settle(runner(cases).run(&arb_record(512), |r| {
        let enc = encode_record(&r);
        prop_assert_eq!(enc.bit_len(), 2 * r.len());
        prop_assert_eq!(decode_record(&enc).map_err(|e| TestCaseError::fail(e.to_string()))?, r);
        Ok(())
    }))
}

pub fn selection_avoids_received(cases: u32) -> Result<(), String> {
    settle(runner(cases).run(&(arb_record(64), any::<u64>()), |(r, seed)| {
        let available = available_slots(&r);
        for s in &available {
            prop_assert_ne!(r.get(*s), Some(Setting::Received));
        }
        let expected = r.settings().iter().filter(|s| **s != Setting::Received).count();
        prop_assert_eq!(available.len(), expected);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match select_allocation(&r, &mut rng) {
            Ok(s) => prop_assert_ne!(r.get(s), Some(Setting::Received)),
            Err(_) => prop_assert!(available.is_empty()),
        }
        Ok(())
    }))
}

pub fn collision_counter_bounded(cases: u32) -> Result<(), String> {
    settle(runner(cases).run(&(1u32..12, 0usize..60), |(ct, failures)| {
        let mut c = 0;
        let mut grows = 0;
        for _ in 0..failures {
            if on_attempt_failed(&mut c, ct) == AttemptFollowUp::RequestGrowMargin {
                prop_assert_eq!(c, 0);
                grows += 1;
            }
            prop_assert!(c < ct);
        }
        prop_assert_eq!(grows, failures as u32 / ct);
        Ok(())
    }))
}

pub fn proposal_eligibility(cases: u32) -> Result<(), String> {
    let strategy = (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0u32..12, n),
            1..=n as u32,
            1u32..10,
            prop::collection::btree_set(1..=n as u32, 0..n),
        )
    });
    settle(runner(cases).run(&strategy, |(counters, claimed, st, fs)| {
        let claimed = TxSlot::new(claimed);
        let forbidden = ForbiddenSet::from_entries(fs.iter().map(|&s| (TxSlot::new(s), 0)));
        let eligible: Vec<u32> = (1..=counters.len() as u32)
            .filter(|&s| counters[s as usize - 1] >= st && TxSlot::new(s) != claimed && !fs.contains(&s))
            .collect();
        let got = highest_eligible_silent(&counters, claimed, st, &forbidden);
        prop_assert_eq!(got.map(TxSlot::number), eligible.last().copied());
        Ok(())
    }))
}

pub fn forbidden_eviction(cases: u32) -> Result<(), String> {
    let strategy = (1u32..20, prop::collection::btree_map(1u32..30, 0u32..20, 0..10), 0u32..25);
    settle(runner(cases).run(&strategy, |(fst, entries, ticks)| {
        let entries: Vec<(u32, u32)> = entries.into_iter().filter(|&(_, age)| age < fst).collect();
        let mut fs = ForbiddenSet::from_entries(entries.iter().map(|&(s, a)| (TxSlot::new(s), a)));
        for _ in 0..ticks {
            fs.tick(fst);
        }
        for &(s, age) in &entries {
            let aged = age + ticks;
            let want = (aged < fst).then_some(aged);
            prop_assert_eq!(fs.age(TxSlot::new(s)), want);
        }
        prop_assert!(fs.entries().all(|(_, a)| a < fst));
        Ok(())
    }))
}

pub fn forbidden_removal_commutes(cases: u32) -> Result<(), String> {
    let strategy = (2u32..=8)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, a)| (prop::collection::btree_map(1..=n, 0u32..9, 0..=n as usize), Just(a), a + 1..=n));
    settle(runner(cases).run(&strategy, |(entries, a, b)| {
        let fs = ForbiddenSet::from_entries(entries.iter().map(|(&s, &age)| (TxSlot::new(s), age)));
        let mut first_a = fs.clone();
        first_a.shift_after_removal(TxSlot::new(a));
        first_a.shift_after_removal(TxSlot::new(b - 1));
        let mut first_b = fs;
        first_b.shift_after_removal(TxSlot::new(b));
        first_b.shift_after_removal(TxSlot::new(a));
        prop_assert_eq!(first_a, first_b);
        Ok(())
    }))
}

fn observed_uav(n: u32, energy: &[bool]) -> UavState {
    let params = ProtocolParams { dss: n, st: 50, ..ProtocolParams::default() };
    let mut u = UavState::first(0, Vec3::default(), 10.0, &params);
    for (i, &e) in energy.iter().enumerate().take(n as usize).skip(1) {
        let heard = if e { Heard::Energy } else { Heard::Nothing };
        u.observe(SlotId::Tx(TxSlot::new(i as u32 + 1)), heard);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    u.end_superframe(&params, &mut rng).unwrap();
    u
}

fn uav_view(u: &UavState) -> (Option<u32>, Option<TxSlot>, Vec<u32>, Record) {
    (u.superframe_size(), u.claimed_slot(), u.silence_counters().to_vec(), u.record_for(SlotId::Tx(TxSlot::new(1))))
}

pub fn uav_removal_commutes(cases: u32) -> Result<(), String> {
    let strategy = (3u32..=8)
        .prop_flat_map(|n| (Just(n), 2..n))
        .prop_flat_map(|(n, a)| (Just(n), prop::collection::vec(any::<bool>(), n as usize), Just(a), a + 1..=n));
    settle(runner(cases).run(&strategy, |(n, energy, a, b)| {
        let mut first_a = observed_uav(n, &energy);
        let mut first_b = first_a.clone();
        first_a.apply_slot_removal(TxSlot::new(a)).unwrap();
        first_a.apply_slot_removal(TxSlot::new(b - 1)).unwrap();
        first_b.apply_slot_removal(TxSlot::new(b)).unwrap();
        first_b.apply_slot_removal(TxSlot::new(a)).unwrap();
        prop_assert_eq!(uav_view(&first_a), uav_view(&first_b));
        // Slot 1 is below every removal and stays put.
        prop_assert_eq!(first_a.claimed_slot(), Some(TxSlot::new(1)));
        prop_assert_eq!(first_a.superframe_size(), Some(n - 2));
        // The surviving slots keep their observations, in order.
        let mut expect: Vec<bool> = energy.clone();
        expect.remove(b as usize - 1);
        expect.remove(a as usize - 1);
        let got: Vec<bool> =
            first_a.record_for(SlotId::Tx(TxSlot::new(1))).settings().iter().map(|s| *s == Setting::DecodeFailure).collect();
        prop_assert_eq!(&got[1..], &expect[1..]);
        Ok(())
    }))
}

fn allowed(from: Lifecycle, to: Lifecycle) -> bool {
    use Lifecycle::*;
    from == to || matches!((from, to), (Start, Allocation) | (Allocation, Resolved) | (Resolved, Allocation))
}

/// Size agreement and legal lifecycle steps across a whole trace.
pub fn check_trace(trace: &[TraceRecord], uav_count: usize) -> Result<(), String> {
    let mut last: Vec<Option<Lifecycle>> = vec![None; uav_count];
    let mut k = 0;
    let mut i = 0;
    while i < trace.len() {
        k = trace[i].superframe.max(k);
        let mut size = None;
        while i < trace.len() && trace[i].superframe == k {
            let t = &trace[i];
            if t.state != Lifecycle::Start {
                match (size, t.superframe_size) {
                    (None, s) => size = s,
                    (Some(a), Some(b)) if a != b => {
                        return Err(format!("superframe {k}: sizes {a} and {b} disagree"));
                    }
                    _ => {}
                }
            }
            let u = t.uav as usize;
            if let Some(prev) = last[u] {
                if !allowed(prev, t.state) {
                    return Err(format!("superframe {k}: UAV {u} went {prev} -> {}", t.state));
                }
            }
            last[u] = Some(t.state);
            i += 1;
        }
    }
    Ok(())
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let formation = prop_oneof![
        (1usize..8).prop_map(|count| FormationSpec::SingleHop { count }),
        (1usize..4, 1usize..5).prop_map(|(rows, cols)| FormationSpec::HexGrid { rows, cols, spacing: 10.0 }),
        (0usize..2).prop_map(|rings| FormationSpec::HexRings { rings, spacing: 10.0 }),
    ];
    let tsr = prop_oneof![Just(0.0), Just(0.5), Just(0.95)];
    let model = prop_oneof![Just(CollisionModel::Pessimistic), Just(CollisionModel::Sinr)];
    (formation, 1u32..8, 1u32..6, 1u32..8, 1u32..12, tsr, model, any::<u64>()).prop_map(
        |(f, ct, gm, st, dss, tsr, model, seed)| {
            let mut sc = Scenario::new(f);
            sc.protocol.ct = ct;
            sc.protocol.gm = gm;
            sc.protocol.st = st;
            sc.protocol.dss = dss;
            sc.protocol.tsr = tsr;
            sc.mgmt_model = model;
            sc.seed = seed;
            sc.trace = true;
            sc.max_slots = 2_000_000;
            sc
        },
    )
}

pub fn simulation_invariants(cases: u32) -> Result<(), String> {
    settle(runner(cases).run(&arb_scenario(), |sc| {
        let fail = |e: dstr::Error| TestCaseError::fail(e.to_string());
        let r = run(&sc).map_err(fail)?;
        prop_assert!(r.converged, "no convergence after {} slots", r.slots);
        prop_assert!(r.valid);
        let formation = sc.formation.build(sc.safety_radius).map_err(fail)?;
        let params = sc.protocol.resolve(&formation, &sc.channel).map_err(fail)?;
        let oracle = Oracle { formation: &formation, channel: &sc.channel, beacon_power: params.beacon_tx_power };
        let snap = Snapshot {
            lifecycle: vec![Some(Lifecycle::Resolved); formation.len()],
            assignment: r.allocation.clone(),
            superframe_size: r.final_superframe,
        };
        prop_assert!(oracle.detect_convergence(&snap));
        prop_assert!(r.convergence_slot >= r.resolution_slot);
        prop_assert!(r.final_superframe <= r.resolution_superframe.unwrap());
        prop_assert!(r.removed_slots <= r.total_removals);
        let trace = r.trace.as_deref().unwrap_or_default();
        check_trace(trace, formation.len()).map_err(TestCaseError::fail)?;
        prop_assert_eq!(run(&sc).map_err(fail)?, r);
        Ok(())
    }))
}

/// Shared G/GN outcomes as the pessimistic management channel delivers them:
/// one G transmitter is decoded by every listener, two or more are energy.
pub fn grow_consensus_exhaustive() -> Result<usize, String> {
    let requests = [GrowRequest::PlusOne, GrowRequest::PlusMargin];
    let mut checked = 0;
    for gm in 1..=9 {
        for senders in 0..=3usize {
            // Every assignment of requests to the senders.
            for mask in 0..(1usize << senders) {
                let reqs: Vec<GrowRequest> = (0..senders).map(|i| requests[(mask >> i) & 1]).collect();
                let listener_g = match reqs.as_slice() {
                    [] => SlotOutcome::Nothing,
                    [r] => SlotOutcome::Decoded(header(*r == GrowRequest::PlusMargin)),
                    _ => SlotOutcome::Energy,
                };
                let nack = matches!(listener_g, SlotOutcome::Energy);
                let gn = if nack { SlotOutcome::Energy } else { SlotOutcome::Nothing };
                let mut views: Vec<u32> = Vec::new();
                // Listeners; those that sent GN count their own transmission.
                views.push(resolve_grow_phase(&listener_g, &gn, false, GrowRequest::None, gm));
                // Senders hear nothing in G while transmitting.
                for r in &reqs {
                    views.push(resolve_grow_phase(&SlotOutcome::Nothing, &gn, true, *r, gm));
                }
                if views.iter().any(|v| *v != views[0]) {
                    return Err(format!("gm {gm}, requests {reqs:?}: growth views {views:?}"));
                }
                let want = match reqs.as_slice() {
                    [] => 0,
                    [GrowRequest::PlusOne] => 1,
                    _ => gm,
                };
                if views[0] != want {
                    return Err(format!("gm {gm}, requests {reqs:?}: grew {} not {want}", views[0]));
                }
                checked += 1;
            }
        }
    }
    // The raw function over every outcome pair, as a total function.
    for g in [SlotOutcome::Nothing, SlotOutcome::Energy, SlotOutcome::Decoded(header(false)), SlotOutcome::Decoded(header(true))] {
        for gn in [SlotOutcome::Nothing, SlotOutcome::Energy] {
            let grew = resolve_grow_phase(&g, &gn, false, GrowRequest::None, 4);
            let want = match (g, gn) {
                (_, SlotOutcome::Energy) => 4,
                (SlotOutcome::Decoded(h), _) => {
                    if h.grow_margin_flag {
                        4
                    } else {
                        1
                    }
                }
                _ => 0,
            };
            if grew != want {
                return Err(format!("G {g:?} GN {gn:?}: {grew} not {want}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn header(margin: bool) -> BeaconHeader {
    BeaconHeader {
        superframe_size: 10,
        current_slot: SlotId::Grow,
        grow_margin_flag: margin,
        slot_to_remove: None,
        leaving_flag: false,
        uav_id: 0,
    }
}
