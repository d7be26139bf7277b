use std::collections::BTreeMap;

use super::LinkError;

/// A 32-bit per-direction message counter. For a sender it is the value
/// used by the last packet sent; for a receiver, the last value accepted.
/// Both ends start at 0 and the first packet carries 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CounterState(u32);

impl CounterState {
    pub const fn new(value: u32) -> Self {
        CounterState(value)
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub fn next(self) -> Result<Self, LinkError> {
        self.0
            .checked_add(1)
            .map(CounterState)
            .ok_or(LinkError::CounterExhausted)
    }
}

/// Counter states of one node, keyed by `(src, dest)` node ids within its
/// group. The same table serves outgoing and incoming directions.
#[derive(Clone, Debug, Default)]
pub struct CounterTable {
    states: BTreeMap<(u8, u8), CounterState>,
}

impl CounterTable {
    pub fn get(&self, src: u8, dest: u8) -> CounterState {
        self.states.get(&(src, dest)).copied().unwrap_or_default()
    }

    pub fn set(&mut self, src: u8, dest: u8, state: CounterState) {
        debug_assert!(state >= self.get(src, dest), "counters never go back");
        self.states.insert((src, dest), state);
    }
}
