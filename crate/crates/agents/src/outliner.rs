//! The outliner: first agent in. Writes the skeleton (markers included)
//! into the empty shared document and publishes one claimable record per
//! marker, then stays connected as a passive replica.

use std::cell::RefCell;
use std::rc::Rc;

use claim_protocol::publish_todos;
use simnet::{Actor, ActorId, Ctx};
use sync_relay::{SessionCore, SessionHost, SessionNote};

use crate::script::TaskScript;

pub struct OutlinerActor {
    host: SessionHost,
    script: TaskScript,
    published: bool,
}

impl OutlinerActor {
    /// The script must already be validated (`TaskScript::parse` does).
    pub fn new(core: Rc<RefCell<SessionCore>>, relay: ActorId, script: TaskScript) -> Self {
        OutlinerActor {
            host: SessionHost::new(core, relay),
            script,
            published: false,
        }
    }

    fn handle_notes(&mut self, ctx: &mut Ctx, notes: Vec<SessionNote>) {
        for note in notes {
            if note == SessionNote::Live && !self.published {
                self.publish(ctx);
            }
        }
    }

    fn publish(&mut self, ctx: &mut Ctx) {
        {
            let mut core = self.host.core().borrow_mut();
            let doc = core.handle_mut().doc_mut();
            assert_eq!(doc.text_len(), 0, "outliner requires an empty document");
            doc.text_insert(0, &self.script.skeleton)
                .expect("insert at origin");
            let todos: Vec<(String, String)> = self
                .script
                .todos
                .iter()
                .map(|t| (t.key.clone(), t.description.clone()))
                .collect();
            publish_todos(doc, &todos).expect("validated script has unique keys");
            core.handle_mut().flush_local_events();
        }
        self.published = true;
        self.host.flush(ctx);
        ctx.trace("published", format!("todos={}", self.script.todos.len()));
    }
}

impl Actor for OutlinerActor {
    fn on_start(&mut self, ctx: &mut Ctx) {
        let notes = self.host.start(ctx);
        self.handle_notes(ctx, notes);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, token: u64) {
        if let Some(notes) = self.host.on_timer(ctx, token) {
            self.handle_notes(ctx, notes);
        }
    }

    fn on_message(&mut self, ctx: &mut Ctx, from: ActorId, bytes: Vec<u8>) {
        if let Some(notes) = self.host.on_message(ctx, from, &bytes) {
            self.handle_notes(ctx, notes);
        }
    }

    fn on_send_failed(&mut self, ctx: &mut Ctx, peer: ActorId) {
        let notes = self.host.on_send_failed(ctx, peer);
        self.handle_notes(ctx, notes);
    }
}
