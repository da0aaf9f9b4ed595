use crate::id::{OperationId, Origin};
use crate::value::ScalarValue;

/// One replicated operation. A `SeqInsert` of N characters consumes N lamport
/// clocks (one per character); every other kind consumes exactly one. The op's
/// `id` names the first clock of the range.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Op {
    MapSet {
        id: OperationId,
        key: String,
        field: String,
        value: ScalarValue,
    },
    SeqInsert {
        id: OperationId,
        origin: Origin,
        content: String,
    },
    SeqDelete {
        id: OperationId,
        target: OperationId,
        count: u32,
    },
    LogAppend {
        id: OperationId,
        payload: String,
    },
}

impl Op {
    pub fn id(&self) -> OperationId {
        match self {
            Op::MapSet { id, .. }
            | Op::SeqInsert { id, .. }
            | Op::SeqDelete { id, .. }
            | Op::LogAppend { id, .. } => *id,
        }
    }

    /// Number of lamport clocks this op occupies.
    pub fn clock_len(&self) -> u64 {
        match self {
            Op::SeqInsert { content, .. } => content.chars().count().max(1) as u64,
            _ => 1,
        }
    }

    /// Last clock occupied by this op.
    pub fn end_clock(&self) -> u64 {
        self.id().clock + self.clock_len() - 1
    }

    /// For an insert run, the suffix starting at `clock`. Characters in a run
    /// chain their origins, so the suffix's origin is the preceding character
    /// of the same run. Returns the op unchanged when it starts at or after
    /// `clock`.
    pub fn slice_from(&self, clock: u64) -> Op {
        match self {
            Op::SeqInsert {
                id,
                origin: _,
                content,
            } if id.clock < clock && clock <= self.end_clock() => {
                let skip = (clock - id.clock) as usize;
                let rest: String = content.chars().skip(skip).collect();
                Op::SeqInsert {
                    id: OperationId::new(clock, id.replica),
                    origin: Origin::Id(OperationId::new(clock - 1, id.replica)),
                    content: rest,
                }
            }
            other => other.clone(),
        }
    }
}
