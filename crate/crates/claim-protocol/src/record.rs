//! Task records stored in the replicated map.
//!
//! A record for key `k` lives at map key `todo:k` with fields
//! `description`, `status` (`pending` / `claimed` / `done`), `assignedTo`
//! (replica id or null), `logicalClock` (the claiming op's lamport clock),
//! and `claimedAt` (virtual time of the claim, for staleness).

use crdt_core::{DocumentState, ReplicaId, ScalarValue};
use simnet::VirtualTime;

pub const KEY_PREFIX: &str = "todo:";
pub const F_DESCRIPTION: &str = "description";
pub const F_STATUS: &str = "status";
pub const F_ASSIGNED_TO: &str = "assignedTo";
pub const F_LOGICAL_CLOCK: &str = "logicalClock";
pub const F_CLAIMED_AT: &str = "claimedAt";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TodoStatus {
    Pending,
    Claimed,
    Done,
}

impl TodoStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TodoStatus::Pending => "pending",
            TodoStatus::Claimed => "claimed",
            TodoStatus::Done => "done",
        }
    }

    fn parse(s: &str) -> Option<TodoStatus> {
        match s {
            "pending" => Some(TodoStatus::Pending),
            "claimed" => Some(TodoStatus::Claimed),
            "done" => Some(TodoStatus::Done),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TodoRecord {
    pub key: String,
    pub description: String,
    pub status: TodoStatus,
    pub assigned_to: Option<ReplicaId>,
    pub logical_clock: u64,
    pub claimed_at: Option<VirtualTime>,
}

pub fn map_key(key: &str) -> String {
    format!("{KEY_PREFIX}{key}")
}

/// Reads the record for `key` from the local view, if present and well
/// formed.
pub fn todo_record(doc: &DocumentState, key: &str) -> Option<TodoRecord> {
    let mk = map_key(key);
    let status = match doc.lww_get(&mk, F_STATUS)? {
        ScalarValue::Str(s) => TodoStatus::parse(s)?,
        _ => return None,
    };
    let description = match doc.lww_get(&mk, F_DESCRIPTION) {
        Some(ScalarValue::Str(s)) => s.clone(),
        _ => String::new(),
    };
    let assigned_to = match doc.lww_get(&mk, F_ASSIGNED_TO) {
        Some(ScalarValue::Int(r)) => Some(ReplicaId(*r as u64)),
        _ => None,
    };
    let logical_clock = match doc.lww_get(&mk, F_LOGICAL_CLOCK) {
        Some(ScalarValue::Int(c)) => *c as u64,
        _ => 0,
    };
    let claimed_at = match doc.lww_get(&mk, F_CLAIMED_AT) {
        Some(ScalarValue::Int(t)) => Some(VirtualTime(*t as u64)),
        _ => None,
    };
    Some(TodoRecord {
        key: key.to_owned(),
        description,
        status,
        assigned_to,
        logical_clock,
        claimed_at,
    })
}

/// All task keys present in the map, lexicographic.
pub fn all_keys(doc: &DocumentState) -> Vec<String> {
    let mut keys: Vec<String> = doc
        .map()
        .keys()
        .filter_map(|k| k.strip_prefix(KEY_PREFIX))
        .map(str::to_owned)
        .collect();
    keys.sort();
    keys
}
