//! The claim state machine: optimistic write, sync wait, verify read.
//!
//! Claiming writes `status=claimed` and `assignedTo=self` in one update
//! packet, waits out a sync delay (or a relay round-trip in ack mode), then
//! re-reads. The claim stands only if the converged last-writer-wins cell
//! still names this replica; concurrent claimants resolve to the one whose
//! write orders highest, and everyone agrees on it.

use crdt_core::{DocumentState, ReplicaId, ScalarValue};
use simnet::VirtualTime;
use thiserror::Error;

use crate::record::{
    all_keys, map_key, todo_record, TodoStatus, F_ASSIGNED_TO, F_CLAIMED_AT, F_DESCRIPTION,
    F_LOGICAL_CLOCK, F_STATUS,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifyMode {
    /// Re-read after a fixed delay (default).
    Delay,
    /// Re-read once the relay has answered a sync round-trip.
    Ack,
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub sync_delay: VirtualTime,
    pub stale_timeout: VirtualTime,
    pub max_retries: u32,
    pub verify_mode: VerifyMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            sync_delay: VirtualTime::from_millis(50),
            stale_timeout: VirtualTime::from_secs(120),
            max_retries: 3,
            verify_mode: VerifyMode::Delay,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClaimOutcome {
    Won,
    Lost(ReplicaId),
    Invalid(InvalidReason),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InvalidReason {
    /// No record under this key.
    Unknown,
    /// Already completed.
    Done,
    /// Local view already shows a claimant.
    AlreadyClaimed,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClaimError {
    #[error("duplicate task key {0:?}")]
    DuplicateKey(String),
    #[error("task key {0:?} already published")]
    AlreadyPublished(String),
    #[error("no record for key {0:?}")]
    UnknownKey(String),
    #[error("not the claim holder of {0:?}")]
    NotOwner(String),
}

/// Publishes one pending record per (key, description). Rejects duplicates
/// before writing anything.
pub fn publish_todos(
    doc: &mut DocumentState,
    todos: &[(String, String)],
) -> Result<(), ClaimError> {
    for (i, (key, _)) in todos.iter().enumerate() {
        if todos[..i].iter().any(|(k, _)| k == key) {
            return Err(ClaimError::DuplicateKey(key.clone()));
        }
        if todo_record(doc, key).is_some() {
            return Err(ClaimError::AlreadyPublished(key.clone()));
        }
    }
    for (key, description) in todos {
        let mk = map_key(key);
        doc.lww_set(&mk, F_DESCRIPTION, description.as_str());
        doc.lww_set(&mk, F_STATUS, TodoStatus::Pending.as_str());
        doc.lww_set(&mk, F_ASSIGNED_TO, ScalarValue::Null);
    }
    Ok(())
}

/// Keys whose local view is pending and unassigned, lexicographic.
pub fn scan_pending(doc: &DocumentState) -> Vec<String> {
    all_keys(doc)
        .into_iter()
        .filter(|key| {
            todo_record(doc, key)
                .map(|r| r.status == TodoStatus::Pending && r.assigned_to.is_none())
                .unwrap_or(false)
        })
        .collect()
}

/// First phase of a claim: the optimistic write. Status, assignee, clock,
/// and timestamp go out in the same update packet so no replica ever sees a
/// half-written claim. Returns the clock of the claiming write; the caller
/// must wait out the sync delay and then call [`claim_verify`].
pub fn claim_start(
    doc: &mut DocumentState,
    key: &str,
    now: VirtualTime,
) -> Result<u64, ClaimOutcome> {
    let record = match todo_record(doc, key) {
        Some(r) => r,
        None => return Err(ClaimOutcome::Invalid(InvalidReason::Unknown)),
    };
    match record.status {
        TodoStatus::Done => return Err(ClaimOutcome::Invalid(InvalidReason::Done)),
        TodoStatus::Claimed => {
            return Err(match record.assigned_to {
                Some(winner) => ClaimOutcome::Lost(winner),
                None => ClaimOutcome::Invalid(InvalidReason::AlreadyClaimed),
            })
        }
        TodoStatus::Pending => {
            if let Some(winner) = record.assigned_to {
                return Err(ClaimOutcome::Lost(winner));
            }
        }
    }
    let mk = map_key(key);
    let self_id = doc.replica();
    let packet = doc.lww_set(&mk, F_STATUS, TodoStatus::Claimed.as_str());
    let clock = packet.ops[0].id().clock;
    doc.lww_set(&mk, F_ASSIGNED_TO, self_id.0 as i64);
    doc.lww_set(&mk, F_LOGICAL_CLOCK, clock as i64);
    doc.lww_set(&mk, F_CLAIMED_AT, now.as_micros() as i64);
    Ok(clock)
}

/// Second phase: the verify read, run after the sync delay (or ack). The
/// claim holds exactly when the current view still assigns the key to us.
pub fn claim_verify(doc: &DocumentState, key: &str) -> ClaimOutcome {
    match todo_record(doc, key) {
        None => ClaimOutcome::Invalid(InvalidReason::Unknown),
        Some(r) => match (r.status, r.assigned_to) {
            (TodoStatus::Done, _) => ClaimOutcome::Invalid(InvalidReason::Done),
            (_, Some(who)) if who == doc.replica() => ClaimOutcome::Won,
            (_, Some(winner)) => ClaimOutcome::Lost(winner),
            // a reclaim raced us back to pending
            (_, None) => ClaimOutcome::Invalid(InvalidReason::AlreadyClaimed),
        },
    }
}

/// Marks a held claim complete. Only the assignee may do this; repeating it
/// is a no-op.
pub fn mark_done(doc: &mut DocumentState, key: &str) -> Result<(), ClaimError> {
    let record = todo_record(doc, key).ok_or_else(|| ClaimError::UnknownKey(key.to_owned()))?;
    if record.status == TodoStatus::Done {
        return if record.assigned_to == Some(doc.replica()) {
            Ok(())
        } else {
            Err(ClaimError::NotOwner(key.to_owned()))
        };
    }
    if record.assigned_to != Some(doc.replica()) {
        return Err(ClaimError::NotOwner(key.to_owned()));
    }
    doc.lww_set(&map_key(key), F_STATUS, TodoStatus::Done.as_str());
    Ok(())
}

/// Resets every claim older than the stale timeout back to pending. The
/// reset is a fresh write with a newer clock, so a crashed claimant's
/// delayed duplicate cannot resurrect the old claim.
pub fn reclaim_stale(
    doc: &mut DocumentState,
    now: VirtualTime,
    config: &ProtocolConfig,
) -> Vec<String> {
    let stale: Vec<String> = all_keys(doc)
        .into_iter()
        .filter(|key| {
            todo_record(doc, key).is_some_and(|r| {
                r.status == TodoStatus::Claimed
                    && r.claimed_at
                        .map(|at| now.saturating_sub(at) > config.stale_timeout)
                        .unwrap_or(false)
            })
        })
        .collect();
    for key in &stale {
        let mk = map_key(key);
        doc.lww_set(&mk, F_STATUS, TodoStatus::Pending.as_str());
        doc.lww_set(&mk, F_ASSIGNED_TO, ScalarValue::Null);
    }
    stale
}

/// The soonest instant at which any currently claimed key could go stale,
/// for scheduling the next reclaim check.
pub fn next_reclaim_deadline(doc: &DocumentState, config: &ProtocolConfig) -> Option<VirtualTime> {
    all_keys(doc)
        .into_iter()
        .filter_map(|key| {
            let r = todo_record(doc, &key)?;
            if r.status != TodoStatus::Claimed {
                return None;
            }
            r.claimed_at.map(|at| at + config.stale_timeout)
        })
        .min()
}

pub fn completion_count(doc: &DocumentState) -> usize {
    all_keys(doc)
        .into_iter()
        .filter(|key| todo_record(doc, key).is_some_and(|r| r.status == TodoStatus::Done))
        .count()
}
