use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::id::{OperationId, Origin, ReplicaId};
use crate::log::AppendLogState;
use crate::lww::LwwMapState;
use crate::op::Op;
use crate::packet::UpdatePacket;
use crate::sequence::SequenceState;
use crate::value::ScalarValue;
use crate::vector::{ClockSet, StateVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocError {
    #[error("index {index} out of range (visible length {visible})")]
    IndexOutOfRange { index: usize, visible: usize },
    #[error("range {index}..{end} out of range (visible length {visible})")]
    RangeOutOfRange {
        index: usize,
        end: usize,
        visible: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EventOrigin {
    Local,
    Remote,
}

/// What part of the document an applied op touched.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EventScope {
    /// For inserts: the visible range the new characters occupy. For deletes:
    /// the removed span's position and pre-removal length.
    Text { start: usize, len: usize },
    Map { key: String, field: String },
    Log { index: usize },
}

/// Exactly one ChangeEvent is produced per newly applied op; idempotent
/// re-application produces none.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChangeEvent {
    pub origin: EventOrigin,
    pub scope: EventScope,
    pub op: OperationId,
}

enum ApplyOutcome {
    New(ChangeEvent),
    Duplicate,
    Buffered,
}

/// One replica's composite document: text sequence, LWW map, append log,
/// applied-clock bookkeeping, full op history for delta sync, and a pending
/// buffer for sequence ops whose origins have not arrived yet.
///
/// Local ops apply immediately and are recorded in an outbox for the next
/// broadcast. A DocumentState is owned by one logical actor at a time; all
/// cross-replica interaction goes through immutable `UpdatePacket`s.
#[derive(Clone, Debug)]
pub struct DocumentState {
    replica: ReplicaId,
    text: SequenceState,
    map: LwwMapState,
    log: AppendLogState,
    applied: HashMap<ReplicaId, ClockSet>,
    history: BTreeMap<ReplicaId, BTreeMap<u64, Op>>,
    pending: Vec<Op>,
    counter: u64,
    outbox: Vec<Op>,
    local_events: Vec<ChangeEvent>,
}

impl DocumentState {
    pub fn new(replica: impl Into<ReplicaId>) -> Self {
        DocumentState {
            replica: replica.into(),
            text: SequenceState::new(),
            map: LwwMapState::default(),
            log: AppendLogState::default(),
            applied: HashMap::new(),
            history: BTreeMap::new(),
            pending: Vec::new(),
            counter: 0,
            outbox: Vec::new(),
            local_events: Vec::new(),
        }
    }

    pub fn replica(&self) -> ReplicaId {
        self.replica
    }

    pub fn clock(&self) -> u64 {
        self.counter
    }

    /// Raises the local lamport counter so the next emitted op uses at least
    /// `to + 1`. Never lowers it.
    pub fn advance_clock(&mut self, to: u64) {
        self.counter = self.counter.max(to);
    }

    // ---- map ----

    pub fn lww_set(
        &mut self,
        key: &str,
        field: &str,
        value: impl Into<ScalarValue>,
    ) -> UpdatePacket {
        let id = self.next_id(1);
        let op = Op::MapSet {
            id,
            key: key.to_owned(),
            field: field.to_owned(),
            value: value.into(),
        };
        self.commit_local(op)
    }

    pub fn lww_get(&self, key: &str, field: &str) -> Option<&ScalarValue> {
        self.map.get(key, field).map(|cell| &cell.value)
    }

    pub fn map(&self) -> &LwwMapState {
        &self.map
    }

    // ---- text ----

    pub fn text_insert(&mut self, index: usize, content: &str) -> Result<UpdatePacket, DocError> {
        let visible = self.text.visible_len();
        if index > visible {
            return Err(DocError::IndexOutOfRange { index, visible });
        }
        if content.is_empty() {
            return Ok(self.empty_packet());
        }
        let origin = self
            .text
            .origin_for_insert(index)
            .expect("index validated against visible length");
        let len = content.chars().count() as u64;
        let id = self.next_id(len);
        let op = Op::SeqInsert {
            id,
            origin,
            content: content.to_owned(),
        };
        Ok(self.commit_local(op))
    }

    pub fn text_delete(&mut self, index: usize, len: usize) -> Result<UpdatePacket, DocError> {
        let visible = self.text.visible_len();
        if index + len > visible {
            return Err(DocError::RangeOutOfRange {
                index,
                end: index + len,
                visible,
            });
        }
        if len == 0 {
            return Ok(self.empty_packet());
        }
        let ids = self.text.ids_in_visible_range(index, len);
        debug_assert_eq!(ids.len(), len);
        // group consecutive clocks of the same replica into one delete op
        let mut ops: Vec<Op> = Vec::new();
        let mut run_start = ids[0];
        let mut run_len = 1u32;
        for pair in ids.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if next.replica == prev.replica && next.clock == prev.clock + 1 {
                run_len += 1;
            } else {
                ops.push(Op::SeqDelete {
                    id: self.next_id(1),
                    target: run_start,
                    count: run_len,
                });
                run_start = next;
                run_len = 1;
            }
        }
        ops.push(Op::SeqDelete {
            id: self.next_id(1),
            target: run_start,
            count: run_len,
        });
        let mut all = Vec::with_capacity(ops.len());
        for op in ops {
            let pkt = self.commit_local(op);
            all.extend(pkt.ops);
        }
        Ok(UpdatePacket::new(all, self.state_vector()))
    }

    pub fn text_read(&self) -> String {
        self.text.read()
    }

    pub fn text_len(&self) -> usize {
        self.text.visible_len()
    }

    // ---- log ----

    pub fn log_append(&mut self, payload: &str) -> UpdatePacket {
        let id = self.next_id(1);
        let op = Op::LogAppend {
            id,
            payload: payload.to_owned(),
        };
        self.commit_local(op)
    }

    pub fn log_read(&self) -> Vec<&str> {
        self.log.read()
    }

    pub fn log_len(&self) -> usize {
        self.log.len()
    }

    // ---- sync ----

    pub fn state_vector(&self) -> StateVector {
        let mut v = StateVector::new();
        for (replica, set) in &self.applied {
            if set.watermark() > 0 {
                v.0.insert(*replica, set.watermark());
            }
        }
        v
    }

    /// Packet containing exactly the ops known locally and not covered by the
    /// remote vector. Insert runs straddling the remote watermark are sliced.
    pub fn encode_update_since(&self, remote: &StateVector) -> UpdatePacket {
        let mut ops = Vec::new();
        for (replica, by_start) in &self.history {
            let have = remote.get(*replica);
            // the op at or before `have` may still extend past it
            if let Some((_, op)) = by_start.range(..=have).next_back() {
                if op.end_clock() > have {
                    ops.push(op.slice_from(have + 1));
                }
            }
            for (_, op) in by_start.range(have + 1..) {
                ops.push(op.clone());
            }
        }
        ops.sort_by_key(|op| op.id());
        UpdatePacket::new(ops, self.state_vector())
    }

    /// Applies a decoded packet. Idempotent: already-applied ops produce no
    /// events and no state change. Sequence ops whose origins are unmet are
    /// buffered and drained once the dependencies arrive.
    pub fn apply_update(&mut self, packet: &UpdatePacket) -> Vec<ChangeEvent> {
        let mut events = Vec::new();
        let mut progressed = false;
        for op in &packet.ops {
            match self.apply_remote_op(op) {
                ApplyOutcome::New(ev) => {
                    events.push(ev);
                    progressed = true;
                }
                ApplyOutcome::Duplicate => {}
                ApplyOutcome::Buffered => {
                    if !self.pending.iter().any(|p| p == op) {
                        self.pending.push(op.clone());
                    }
                }
            }
        }
        while progressed && !self.pending.is_empty() {
            progressed = false;
            let mut still_pending = Vec::new();
            let pending = std::mem::take(&mut self.pending);
            for op in pending {
                match self.apply_remote_op(&op) {
                    ApplyOutcome::New(ev) => {
                        events.push(ev);
                        progressed = true;
                    }
                    ApplyOutcome::Duplicate => {}
                    ApplyOutcome::Buffered => still_pending.push(op),
                }
            }
            self.pending.extend(still_pending);
        }
        events
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Drains ops generated locally since the last call, as one packet.
    pub fn take_outbox(&mut self) -> Option<UpdatePacket> {
        if self.outbox.is_empty() {
            return None;
        }
        let ops = std::mem::take(&mut self.outbox);
        Some(UpdatePacket::new(ops, self.state_vector()))
    }

    pub fn outbox_is_empty(&self) -> bool {
        self.outbox.is_empty()
    }

    /// Drains ChangeEvents for ops applied locally since the last call.
    pub fn take_local_events(&mut self) -> Vec<ChangeEvent> {
        std::mem::take(&mut self.local_events)
    }

    // ---- internals ----

    fn empty_packet(&self) -> UpdatePacket {
        UpdatePacket::new(Vec::new(), self.state_vector())
    }

    fn next_id(&mut self, len: u64) -> OperationId {
        let start = self.counter + 1;
        self.counter += len;
        OperationId::new(start, self.replica)
    }

    fn commit_local(&mut self, op: Op) -> UpdatePacket {
        match self.apply_op(&op, EventOrigin::Local) {
            ApplyOutcome::New(ev) => self.local_events.push(ev),
            _ => unreachable!("local ops always carry fresh ids"),
        }
        self.record_history(&op);
        self.outbox.push(op.clone());
        UpdatePacket::new(vec![op], self.state_vector())
    }

    fn apply_remote_op(&mut self, op: &Op) -> ApplyOutcome {
        let outcome = self.apply_op(op, EventOrigin::Remote);
        if let ApplyOutcome::New(_) = outcome {
            self.record_history(op);
            self.advance_clock(op.end_clock());
        }
        outcome
    }

    fn record_history(&mut self, op: &Op) {
        self.history
            .entry(op.id().replica)
            .or_default()
            .insert(op.id().clock, op.clone());
    }

    fn clocks_fully_applied(&self, op: &Op) -> bool {
        let replica = op.id().replica;
        let set = match self.applied.get(&replica) {
            Some(s) => s,
            None => return false,
        };
        (op.id().clock..=op.end_clock()).all(|c| set.contains(c))
    }

    fn mark_applied(&mut self, replica: ReplicaId, clocks: impl IntoIterator<Item = u64>) {
        let set = self.applied.entry(replica).or_default();
        for c in clocks {
            set.insert(c);
        }
    }

    fn apply_op(&mut self, op: &Op, origin: EventOrigin) -> ApplyOutcome {
        if self.clocks_fully_applied(op) {
            return ApplyOutcome::Duplicate;
        }
        let id = op.id();
        match op {
            Op::MapSet { key, field, value, .. } => {
                self.map.apply(key, field, value.clone(), id);
                self.mark_applied(id.replica, [id.clock]);
                ApplyOutcome::New(ChangeEvent {
                    origin,
                    scope: EventScope::Map {
                        key: key.clone(),
                        field: field.clone(),
                    },
                    op: id,
                })
            }
            Op::LogAppend { payload, .. } => {
                let index = self.log.apply(id, payload.clone()).unwrap_or(0);
                self.mark_applied(id.replica, [id.clock]);
                ApplyOutcome::New(ChangeEvent {
                    origin,
                    scope: EventScope::Log { index },
                    op: id,
                })
            }
            Op::SeqInsert {
                origin: ins_origin,
                content,
                ..
            } => {
                let chars: Vec<char> = content.chars().collect();
                let first_unapplied = (0..chars.len()).find(|k| {
                    !self
                        .applied
                        .get(&id.replica)
                        .map(|s| s.contains(id.clock + *k as u64))
                        .unwrap_or(false)
                });
                let first_unapplied = match first_unapplied {
                    Some(k) => k,
                    None => return ApplyOutcome::Duplicate,
                };
                if first_unapplied == 0 && !self.text.has_origin(*ins_origin) {
                    return ApplyOutcome::Buffered;
                }
                let mut start_pos = None;
                let mut new_count = 0usize;
                for (k, ch) in chars.iter().enumerate().skip(first_unapplied) {
                    let char_id = OperationId::new(id.clock + k as u64, id.replica);
                    if self
                        .applied
                        .get(&id.replica)
                        .map(|s| s.contains(char_id.clock))
                        .unwrap_or(false)
                    {
                        continue;
                    }
                    let char_origin = if k == 0 {
                        *ins_origin
                    } else {
                        Origin::Id(OperationId::new(id.clock + k as u64 - 1, id.replica))
                    };
                    if let Some(pos) = self.text.integrate(char_id, char_origin, *ch) {
                        if start_pos.is_none() {
                            start_pos = Some(pos);
                        }
                        new_count += 1;
                    }
                    self.mark_applied(id.replica, [char_id.clock]);
                }
                ApplyOutcome::New(ChangeEvent {
                    origin,
                    scope: EventScope::Text {
                        start: start_pos.unwrap_or(0),
                        len: new_count,
                    },
                    op: id,
                })
            }
            Op::SeqDelete { target, count, .. } => {
                let targets: Vec<OperationId> = (0..*count as u64)
                    .map(|k| OperationId::new(target.clock + k, target.replica))
                    .collect();
                if targets.iter().any(|t| !self.text.contains(*t)) {
                    return ApplyOutcome::Buffered;
                }
                let mut start_pos = None;
                let mut removed = 0usize;
                for t in targets {
                    if let Some(pos) = self.text.tombstone(t) {
                        if start_pos.is_none() {
                            start_pos = Some(pos);
                        }
                        removed += 1;
                    }
                }
                self.mark_applied(id.replica, [id.clock]);
                ApplyOutcome::New(ChangeEvent {
                    origin,
                    scope: EventScope::Text {
                        start: start_pos.unwrap_or(0),
                        len: removed,
                    },
                    op: id,
                })
            }
        }
    }
}

/// True iff visible text, converged map cells, and log read order are equal.
pub fn converged(a: &DocumentState, b: &DocumentState) -> bool {
    if a.text_read() != b.text_read() {
        return false;
    }
    if a.log_read() != b.log_read() {
        return false;
    }
    let keys: std::collections::BTreeSet<&str> = a.map.keys().chain(b.map.keys()).collect();
    for key in keys {
        let fields: std::collections::BTreeSet<&str> = a
            .map
            .fields(key)
            .map(|(f, _)| f)
            .chain(b.map.fields(key).map(|(f, _)| f))
            .collect();
        for field in fields {
            if a.map.get(key, field) != b.map.get(key, field) {
                return false;
            }
        }
    }
    true
}
