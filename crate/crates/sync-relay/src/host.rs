//! Adapters that run [`RelayCore`] and [`SessionCore`] as simulated actors.
//! Both keep their cores behind `Rc<RefCell<..>>` so tests can inspect
//! document state after the simulation finishes.

use std::cell::RefCell;
use std::rc::Rc;

use simnet::{Actor, ActorId, Ctx};

use crate::relay::{RelayAction, RelayCore, RelayStorage};
use crate::session::{SessionCmd, SessionCore, SessionNote};

/// Runs a relay as an actor. Each peer actor is one session, keyed by its
/// actor id; a frame the relay cannot parse closes only that session.
pub struct RelayActor<S: RelayStorage> {
    core: Rc<RefCell<RelayCore<S>>>,
}

impl<S: RelayStorage> RelayActor<S> {
    pub fn new(core: Rc<RefCell<RelayCore<S>>>) -> Self {
        RelayActor { core }
    }
}

impl<S: RelayStorage + 'static> Actor for RelayActor<S> {
    fn on_start(&mut self, _ctx: &mut Ctx) {}

    fn on_timer(&mut self, _ctx: &mut Ctx, _token: u64) {}

    fn on_message(&mut self, ctx: &mut Ctx, from: ActorId, bytes: Vec<u8>) {
        let actions = self.core.borrow_mut().on_frame(from.0 as u64, &bytes);
        for action in actions {
            match action {
                RelayAction::Send { session, bytes } => {
                    ctx.send(ActorId(session as usize), bytes);
                }
                RelayAction::Close { session } => {
                    // no transport to tear down on a simulated link
                    ctx.trace("session_closed", format!("session={session}"));
                }
            }
        }
    }

    fn on_send_failed(&mut self, ctx: &mut Ctx, peer: ActorId) {
        self.core.borrow_mut().on_disconnect(peer.0 as u64);
        ctx.trace("session_dropped", format!("session={}", peer.0));
    }
}

/// Timer tokens whose top byte carries these kinds belong to the embedded
/// session; hosts must route them to [`SessionHost::on_timer`] and keep their
/// own tokens out of this range.
fn is_session_token(token: u64) -> bool {
    matches!(token >> 56, 1 | 2)
}

/// Embeds a client session in an actor. The owning actor forwards its
/// callbacks here; `None` returns mean the input was not session traffic.
pub struct SessionHost {
    core: Rc<RefCell<SessionCore>>,
    relay: ActorId,
}

impl SessionHost {
    pub fn new(core: Rc<RefCell<SessionCore>>, relay: ActorId) -> Self {
        SessionHost { core, relay }
    }

    pub fn core(&self) -> &Rc<RefCell<SessionCore>> {
        &self.core
    }

    pub fn relay(&self) -> ActorId {
        self.relay
    }

    pub fn start(&mut self, ctx: &mut Ctx) -> Vec<SessionNote> {
        let out = self.core.borrow_mut().start();
        self.execute(ctx, out)
    }

    /// Handles a session timer; returns `None` when the token is not ours.
    pub fn on_timer(&mut self, ctx: &mut Ctx, token: u64) -> Option<Vec<SessionNote>> {
        if !is_session_token(token) {
            return None;
        }
        let out = self.core.borrow_mut().on_timer(token);
        Some(self.execute(ctx, out))
    }

    /// Handles a frame from the relay; returns `None` for other senders.
    pub fn on_message(
        &mut self,
        ctx: &mut Ctx,
        from: ActorId,
        bytes: &[u8],
    ) -> Option<Vec<SessionNote>> {
        if from != self.relay {
            return None;
        }
        let out = self.core.borrow_mut().on_frame(bytes);
        Some(self.execute(ctx, out))
    }

    pub fn on_send_failed(&mut self, ctx: &mut Ctx, peer: ActorId) -> Vec<SessionNote> {
        if peer != self.relay {
            return Vec::new();
        }
        let out = self.core.borrow_mut().connection_lost();
        self.execute(ctx, out)
    }

    /// Sends any queued local ops to the relay (when live).
    pub fn flush(&mut self, ctx: &mut Ctx) -> Vec<SessionNote> {
        let out = self.core.borrow_mut().flush_outbox();
        self.execute(ctx, out)
    }

    /// Requests a sync round-trip; completion is reported via
    /// [`SessionNote::SyncRespReceived`].
    pub fn request_sync(&mut self, ctx: &mut Ctx) -> Vec<SessionNote> {
        let out = self.core.borrow_mut().request_sync();
        self.execute(ctx, out)
    }

    fn execute(&mut self, ctx: &mut Ctx, out: crate::session::Output) -> Vec<SessionNote> {
        let mut cmds = out.cmds;
        let mut notes = out.notes;
        // `Connect` on a simulated link succeeds immediately; the first send
        // failure reports an unreachable relay instead
        while let Some(cmd) = cmds.first().cloned() {
            cmds.remove(0);
            match cmd {
                SessionCmd::Connect => {
                    let more = self.core.borrow_mut().connected();
                    cmds.extend(more.cmds);
                    notes.extend(more.notes);
                }
                SessionCmd::Disconnect => {}
                SessionCmd::SendFrame(bytes) => ctx.send(self.relay, bytes),
                SessionCmd::SetTimer { delay, token } => ctx.set_timer(delay, token),
            }
        }
        notes
    }
}
