use std::collections::BTreeMap;

use crate::protocol::TxSlot;

/// Slots this UAV tried to remove and got an objection for, with the number of
/// superframes each entry has been held.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForbiddenSet {
    entries: BTreeMap<TxSlot, u32>,
}

impl ForbiddenSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (TxSlot, u32)>) -> Self {
        ForbiddenSet { entries: entries.into_iter().collect() }
    }

    /// Insert (or re-arm) `slot` with age zero.
    pub fn insert(&mut self, slot: TxSlot) {
        self.entries.insert(slot, 0);
    }

    pub fn contains(&self, slot: TxSlot) -> bool {
        self.entries.contains_key(&slot)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn age(&self, slot: TxSlot) -> Option<u32> {
        self.entries.get(&slot).copied()
    }

    pub fn slots(&self) -> impl Iterator<Item = TxSlot> + '_ {
        self.entries.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (TxSlot, u32)> + '_ {
        self.entries.iter().map(|(&s, &a)| (s, a))
    }

    /// One superframe passes: every age grows by one and entries reaching
    /// `timeout` are evicted.
    pub fn tick(&mut self, timeout: u32) {
        self.entries.retain(|_, age| {
            *age += 1;
            *age < timeout
        });
    }

    /// Slot `removed` left the superframe: drop its entry and shift higher
    /// indices down by one.
    pub fn shift_after_removal(&mut self, removed: TxSlot) {
        self.entries = std::mem::take(&mut self.entries)
            .into_iter()
            .filter(|&(s, _)| s != removed)
            .map(|(s, a)| if s > removed { (s.prev(), a) } else { (s, a) })
            .collect();
    }
}

pub fn forbidden_set_tick(mut fs: ForbiddenSet, fst: u32) -> ForbiddenSet {
    fs.tick(fst);
    fs
}
