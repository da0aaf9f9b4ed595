//! Observation layer: a document wrapper that dispatches one callback per
//! newly applied op to each matching subscriber.

use crdt_core::{ChangeEvent, DocumentState, EventOrigin, EventScope, UpdatePacket};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SubscriptionId(pub u64);

/// Which events a subscriber wants. Default: everything.
#[derive(Clone, Copy, Debug)]
pub struct EventFilter {
    pub local: bool,
    pub remote: bool,
    pub text: bool,
    pub map: bool,
    pub log: bool,
}

impl Default for EventFilter {
    fn default() -> Self {
        EventFilter {
            local: true,
            remote: true,
            text: true,
            map: true,
            log: true,
        }
    }
}

impl EventFilter {
    pub fn remote_only() -> Self {
        EventFilter {
            local: false,
            ..EventFilter::default()
        }
    }

    pub fn matches(&self, ev: &ChangeEvent) -> bool {
        let origin_ok = match ev.origin {
            EventOrigin::Local => self.local,
            EventOrigin::Remote => self.remote,
        };
        let kind_ok = match ev.scope {
            EventScope::Text { .. } => self.text,
            EventScope::Map { .. } => self.map,
            EventScope::Log { .. } => self.log,
        };
        origin_ok && kind_ok
    }
}

struct Sub {
    id: SubscriptionId,
    filter: EventFilter,
    callback: Box<dyn FnMut(&ChangeEvent)>,
    count: u64,
}

/// A document plus its subscribers. Callbacks run after the state mutation
/// commits, on the owning actor, exactly once per newly applied matching op.
pub struct DocHandle {
    doc: DocumentState,
    subs: Vec<Sub>,
    next_id: u64,
    total_callbacks: u64,
}

impl DocHandle {
    pub fn new(doc: DocumentState) -> Self {
        DocHandle {
            doc,
            subs: Vec::new(),
            next_id: 1,
            total_callbacks: 0,
        }
    }

    pub fn doc(&self) -> &DocumentState {
        &self.doc
    }

    /// Direct mutable access. Call [`DocHandle::flush_local_events`] after
    /// local mutations so subscribers observe them.
    pub fn doc_mut(&mut self) -> &mut DocumentState {
        &mut self.doc
    }

    pub fn subscribe(
        &mut self,
        filter: EventFilter,
        callback: impl FnMut(&ChangeEvent) + 'static,
    ) -> SubscriptionId {
        let id = SubscriptionId(self.next_id);
        self.next_id += 1;
        self.subs.push(Sub {
            id,
            filter,
            callback: Box::new(callback),
            count: 0,
        });
        id
    }

    pub fn unsubscribe(&mut self, id: SubscriptionId) {
        self.subs.retain(|s| s.id != id);
    }

    /// Applies a remote packet and dispatches events. Returns the events.
    pub fn apply_update(&mut self, packet: &UpdatePacket) -> Vec<ChangeEvent> {
        let events = self.doc.apply_update(packet);
        self.dispatch(&events);
        events
    }

    /// Dispatches events for local ops performed through `doc_mut`.
    pub fn flush_local_events(&mut self) -> Vec<ChangeEvent> {
        let events = self.doc.take_local_events();
        self.dispatch(&events);
        events
    }

    pub fn callback_count(&self, id: SubscriptionId) -> u64 {
        self.subs
            .iter()
            .find(|s| s.id == id)
            .map(|s| s.count)
            .unwrap_or(0)
    }

    pub fn total_callbacks(&self) -> u64 {
        self.total_callbacks
    }

    fn dispatch(&mut self, events: &[ChangeEvent]) {
        for ev in events {
            for sub in self.subs.iter_mut() {
                if sub.filter.matches(ev) {
                    (sub.callback)(ev);
                    sub.count += 1;
                    self.total_callbacks += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;
    use std::rc::Rc;

    #[test]
    fn exactly_one_event_per_applied_op() {
        let mut src = DocumentState::new(1);
        src.text_insert(0, "ab").unwrap();
        src.lww_set("k", "f", 1i64);
        let pkt = src.encode_update_since(&crdt_core::StateVector::new());

        let mut handle = DocHandle::new(DocumentState::new(2));
        let hits = Rc::new(Cell::new(0u64));
        let h = hits.clone();
        let sub = handle.subscribe(EventFilter::remote_only(), move |_| {
            h.set(h.get() + 1);
        });
        handle.apply_update(&pkt);
        assert_eq!(hits.get(), 2);
        // idempotent re-application: no further callbacks
        handle.apply_update(&pkt);
        assert_eq!(hits.get(), 2);
        assert_eq!(handle.callback_count(sub), 2);

        handle.unsubscribe(sub);
        let mut more = DocumentState::new(3);
        more.log_append("x");
        let pkt2 = more.encode_update_since(&crdt_core::StateVector::new());
        handle.apply_update(&pkt2);
        assert_eq!(hits.get(), 2);
    }

    #[test]
    fn local_filter_excludes_local_ops() {
        let mut handle = DocHandle::new(DocumentState::new(1));
        let hits = Rc::new(Cell::new(0u64));
        let h = hits.clone();
        handle.subscribe(EventFilter::remote_only(), move |_| {
            h.set(h.get() + 1);
        });
        handle.doc_mut().lww_set("k", "f", 1i64);
        handle.flush_local_events();
        assert_eq!(hits.get(), 0);
    }
}
