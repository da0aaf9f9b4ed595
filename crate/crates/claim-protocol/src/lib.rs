//! Exclusive task assignment over the replicated map, without locks or a
//! coordinator. Agents claim tasks with an optimistic write, wait for the
//! claim to propagate, and verify by re-reading; last-writer-wins ordering
//! guarantees every replica converges on the same single assignee. Claims
//! whose holder disappears are reclaimed after a timeout.

mod protocol;
mod record;

pub use protocol::{
    claim_start, claim_verify, completion_count, mark_done, next_reclaim_deadline, publish_todos,
    reclaim_stale, scan_pending, ClaimError, ClaimOutcome, InvalidReason, ProtocolConfig,
    VerifyMode,
};
pub use record::{all_keys, map_key, todo_record, TodoRecord, TodoStatus};
