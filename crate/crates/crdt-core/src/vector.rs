use std::collections::{BTreeMap, BTreeSet};

use crate::id::ReplicaId;

/// Per-replica high-water mark of contiguously applied clocks. Clock numbering
/// starts at 1, so an entry of 3 means clocks 1..=3 are applied.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct StateVector(pub BTreeMap<ReplicaId, u64>);

impl StateVector {
    pub fn new() -> Self {
        StateVector(BTreeMap::new())
    }

    pub fn get(&self, replica: ReplicaId) -> u64 {
        self.0.get(&replica).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when `self` covers at least everything in `other`.
    pub fn covers(&self, other: &StateVector) -> bool {
        other.0.iter().all(|(r, c)| self.get(*r) >= *c)
    }
}

/// Set of applied clocks for one replica: a contiguous watermark plus sparse
/// out-of-order clocks above it. Packets may arrive in any order, so gaps are
/// transient but possible.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ClockSet {
    watermark: u64,
    sparse: BTreeSet<u64>,
}

impl ClockSet {
    pub fn contains(&self, clock: u64) -> bool {
        clock <= self.watermark || self.sparse.contains(&clock)
    }

    pub fn insert(&mut self, clock: u64) {
        if clock <= self.watermark {
            return;
        }
        self.sparse.insert(clock);
        while self.sparse.remove(&(self.watermark + 1)) {
            self.watermark += 1;
        }
    }

    pub fn watermark(&self) -> u64 {
        self.watermark
    }
}
