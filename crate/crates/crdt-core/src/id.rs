use std::fmt;

/// Identifies one replica (agent, relay, or session) for the lifetime of that
/// replica. Distinct concurrently-live replicas must use distinct ids.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ReplicaId(pub u64);

impl fmt::Debug for ReplicaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for ReplicaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for ReplicaId {
    fn from(v: u64) -> Self {
        ReplicaId(v)
    }
}

/// (lamport clock, replica id) pair. The derived `Ord` is lexicographic on
/// (clock, replica), which is the total order every conflict resolution in the
/// document relies on.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperationId {
    pub clock: u64,
    pub replica: ReplicaId,
}

impl OperationId {
    pub fn new(clock: u64, replica: impl Into<ReplicaId>) -> Self {
        OperationId {
            clock,
            replica: replica.into(),
        }
    }
}

impl fmt::Debug for OperationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.clock, self.replica)
    }
}

/// Origin of a sequence insertion: either the BEGIN sentinel (insert at the
/// head of the document) or an already-integrated item id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Origin {
    Begin,
    Id(OperationId),
}

/// Replica value reserved on the wire to encode the BEGIN sentinel.
pub const BEGIN_REPLICA: u64 = 0xFFFF_FFFF_FFFF_FFFF;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_order_is_lexicographic() {
        let a = OperationId::new(1, 1);
        let b = OperationId::new(1, 2);
        let c = OperationId::new(2, 1);
        assert!(a < b);
        assert!(b < c);
        assert!(a < c);
    }
}
