//! Client session state machine, transport-free. A host owns the transport
//! (simulated link or TCP socket) and feeds connection events, frames, and
//! timer expirations in; the core returns commands to execute.
//!
//! Handshake: on connect the client sends HELLO; the relay answers with a
//! SYNC_REQ carrying its state vector; the client replies with the delta the
//! relay is missing plus its own SYNC_REQ; the relay's SYNC_RESP completes
//! the exchange and the session goes live. A handshake that does not
//! complete within the sync timeout is treated as a connection failure.
//!
//! Reconnects back off exponentially: 1 s doubling per consecutive failure,
//! capped at 30 s. After five consecutive failures the session is terminal.

use crdt_core::{ChangeEvent, DocumentState, ReplicaId, UpdatePacket};
use simnet::VirtualTime;

use crate::frame::{decode_vector, encode_hello, encode_vector, Frame, FrameType};
use crate::subscribe::DocHandle;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SessionState {
    Idle,
    /// Waiting for the transport to come up.
    Connecting,
    /// Connected, handshake in progress.
    Syncing,
    Live,
    /// Waiting out a reconnect delay.
    Backoff,
    /// Gave up after too many consecutive failures.
    Terminal,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SessionCmd {
    /// Bring the transport up (dial, or no-op on an always-on link).
    Connect,
    /// Tear the transport down.
    Disconnect,
    SendFrame(Vec<u8>),
    SetTimer { delay: VirtualTime, token: u64 },
}

#[derive(Clone, PartialEq, Debug)]
pub enum SessionNote {
    Live,
    Terminal,
    /// Ops applied from a received frame.
    Applied(Vec<ChangeEvent>),
    /// A sync response arrived (used to confirm round-trips with the relay).
    SyncRespReceived,
}

#[derive(Default)]
pub struct Output {
    pub cmds: Vec<SessionCmd>,
    pub notes: Vec<SessionNote>,
}

impl Output {
    fn cmd(mut self, c: SessionCmd) -> Self {
        self.cmds.push(c);
        self
    }
}

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub doc_id: String,
    pub sync_timeout: VirtualTime,
    pub base_backoff: VirtualTime,
    pub max_backoff: VirtualTime,
    pub max_attempts: u32,
}

impl SessionConfig {
    pub fn new(doc_id: &str) -> Self {
        SessionConfig {
            doc_id: doc_id.to_owned(),
            sync_timeout: VirtualTime::from_secs(15),
            base_backoff: VirtualTime::from_secs(1),
            max_backoff: VirtualTime::from_secs(30),
            max_attempts: 5,
        }
    }
}

// timer token = kind in the top byte, generation below; stale generations
// are ignored so cancelled timers can simply fire into the void
const KIND_SYNC_TIMEOUT: u64 = 1;
const KIND_RECONNECT: u64 = 2;
const GEN_MASK: u64 = (1 << 56) - 1;

fn token(kind: u64, generation: u64) -> u64 {
    (kind << 56) | (generation & GEN_MASK)
}

pub struct SessionCore {
    handle: DocHandle,
    config: SessionConfig,
    state: SessionState,
    generation: u64,
    /// Consecutive connection failures since the last completed handshake.
    attempt: u32,
}

impl SessionCore {
    pub fn new(doc: DocumentState, config: SessionConfig) -> Self {
        SessionCore {
            handle: DocHandle::new(doc),
            config,
            state: SessionState::Idle,
            generation: 0,
            attempt: 0,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn replica(&self) -> ReplicaId {
        self.handle.doc().replica()
    }

    pub fn handle(&self) -> &DocHandle {
        &self.handle
    }

    pub fn handle_mut(&mut self) -> &mut DocHandle {
        &mut self.handle
    }

    pub fn start(&mut self) -> Output {
        self.state = SessionState::Connecting;
        Output::default().cmd(SessionCmd::Connect)
    }

    /// Transport is up: begin the handshake.
    pub fn connected(&mut self) -> Output {
        self.state = SessionState::Syncing;
        self.generation += 1;
        let hello = Frame::new(
            FrameType::Hello,
            encode_hello(self.replica(), &self.config.doc_id),
        );
        Output::default()
            .cmd(SessionCmd::SendFrame(hello.to_bytes()))
            .cmd(SessionCmd::SetTimer {
                delay: self.config.sync_timeout,
                token: token(KIND_SYNC_TIMEOUT, self.generation),
            })
    }

    /// Transport failed or dropped. Schedules a reconnect or goes terminal.
    pub fn connection_lost(&mut self) -> Output {
        if self.state == SessionState::Terminal {
            return Output::default();
        }
        self.generation += 1;
        self.attempt += 1;
        if self.attempt > self.config.max_attempts {
            self.state = SessionState::Terminal;
            let mut out = Output::default().cmd(SessionCmd::Disconnect);
            out.notes.push(SessionNote::Terminal);
            return out;
        }
        self.state = SessionState::Backoff;
        let exp = self
            .config
            .base_backoff
            .as_micros()
            .saturating_mul(1u64 << (self.attempt - 1).min(30));
        let delay = VirtualTime(exp.min(self.config.max_backoff.as_micros()));
        Output::default()
            .cmd(SessionCmd::Disconnect)
            .cmd(SessionCmd::SetTimer {
                delay,
                token: token(KIND_RECONNECT, self.generation),
            })
    }

    pub fn on_timer(&mut self, tok: u64) -> Output {
        if tok & GEN_MASK != self.generation & GEN_MASK {
            return Output::default(); // cancelled timer
        }
        match tok >> 56 {
            KIND_SYNC_TIMEOUT if self.state == SessionState::Syncing => {
                log::warn!("handshake timed out, reconnecting");
                self.connection_lost()
            }
            KIND_RECONNECT if self.state == SessionState::Backoff => {
                self.state = SessionState::Connecting;
                Output::default().cmd(SessionCmd::Connect)
            }
            _ => Output::default(),
        }
    }

    pub fn on_frame(&mut self, bytes: &[u8]) -> Output {
        let frame = match Frame::from_bytes(bytes) {
            Ok((frame, _)) => frame,
            Err(e) => {
                log::warn!("ignoring malformed frame from relay: {e}");
                return Output::default();
            }
        };
        match frame.frame_type {
            FrameType::SyncReq => {
                let vector = match decode_vector(&frame.payload) {
                    Ok(v) => v,
                    Err(_) => return Output::default(),
                };
                let delta = self.handle.doc().encode_update_since(&vector);
                let mut out = Output::default().cmd(SessionCmd::SendFrame(
                    Frame::new(FrameType::SyncResp, delta.to_bytes()).to_bytes(),
                ));
                if self.state == SessionState::Syncing {
                    // second handshake leg: ask for what we are missing
                    out = out.cmd(SessionCmd::SendFrame(
                        Frame::new(
                            FrameType::SyncReq,
                            encode_vector(&self.handle.doc().state_vector()),
                        )
                        .to_bytes(),
                    ));
                }
                out
            }
            FrameType::SyncResp => {
                let mut out = self.apply_packet(&frame.payload);
                if self.state == SessionState::Syncing {
                    self.state = SessionState::Live;
                    self.generation += 1; // cancels the sync timeout
                    self.attempt = 0;
                    out.notes.push(SessionNote::Live);
                    // ops queued while offline were covered by the sync
                    // delta above or are flushed here
                    for c in self.flush_outbox().cmds {
                        out.cmds.push(c);
                    }
                }
                out.notes.push(SessionNote::SyncRespReceived);
                out
            }
            FrameType::Update => self.apply_packet(&frame.payload),
            FrameType::Ping => Output::default().cmd(SessionCmd::SendFrame(
                Frame::new(FrameType::Pong, Vec::new()).to_bytes(),
            )),
            FrameType::Pong | FrameType::Hello => Output::default(),
        }
    }

    /// Packages pending local ops as an UPDATE when live. While offline the
    /// ops stay queued and go out on the next completed handshake.
    pub fn flush_outbox(&mut self) -> Output {
        if self.state != SessionState::Live {
            return Output::default();
        }
        match self.handle.doc_mut().take_outbox() {
            Some(packet) => Output::default().cmd(SessionCmd::SendFrame(
                Frame::new(FrameType::Update, packet.to_bytes()).to_bytes(),
            )),
            None => Output::default(),
        }
    }

    /// Asks the relay for anything we are missing; the SYNC_RESP that comes
    /// back doubles as an acknowledgement that the relay saw our writes.
    pub fn request_sync(&mut self) -> Output {
        if self.state != SessionState::Live {
            return Output::default();
        }
        Output::default().cmd(SessionCmd::SendFrame(
            Frame::new(
                FrameType::SyncReq,
                encode_vector(&self.handle.doc().state_vector()),
            )
            .to_bytes(),
        ))
    }

    fn apply_packet(&mut self, payload: &[u8]) -> Output {
        match UpdatePacket::from_bytes(payload) {
            Ok(packet) => {
                let events = self.handle.apply_update(&packet);
                let mut out = Output::default();
                if !events.is_empty() {
                    out.notes.push(SessionNote::Applied(events));
                }
                out
            }
            Err(e) => {
                log::warn!("ignoring undecodable update: {e}");
                Output::default()
            }
        }
    }
}

/// Convenience for tests: full offline sync of two documents.
pub fn sync_docs(a: &mut DocumentState, b: &mut DocumentState) {
    let to_b = a.encode_update_since(&b.state_vector());
    let to_a = b.encode_update_since(&a.state_vector());
    b.apply_update(&to_b);
    a.apply_update(&to_a);
}
