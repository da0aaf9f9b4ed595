//! The implementer: scan → claim → verify → generate → write → done, with
//! the four observation-driven behaviors:
//!
//! 1. completed-work detection — pending scans and pre-claim checks run on
//!    the freshest local view, so finished or claimed keys are never
//!    re-attempted, and a vanished marker means the work exists already;
//! 2. conflict avoidance — a remote edit landing inside the region this
//!    agent is about to rewrite defers the write by a short backoff with a
//!    single re-check;
//! 3. naming alignment — the generator receives the current document
//!    snapshot with every request;
//! 4. context integration — scans re-run on every remote change rather
//!    than on a polling loop.

use std::cell::RefCell;
use std::rc::Rc;

use claim_protocol::{
    all_keys, claim_start, claim_verify, completion_count, map_key, next_reclaim_deadline,
    reclaim_stale, scan_pending, todo_record, ClaimOutcome, ProtocolConfig, TodoStatus, VerifyMode,
};
use crdt_core::{EventOrigin, EventScope};
use simnet::{Actor, ActorId, Ctx, VirtualTime};
use sync_relay::{SessionCore, SessionHost, SessionNote};

use crate::generator::{GenRequest, GeneratorContract};
use crate::metrics::SharedMetrics;
use crate::script::find_marker;

/// Deferral when a remote edit overlaps the pending write region.
pub const CONFLICT_BACKOFF: VirtualTime = VirtualTime(100_000);

// timer kinds in the top byte; 1 and 2 belong to the session host
const KIND_VERIFY: u64 = 3;
const KIND_WRITE: u64 = 4;
const KIND_RECLAIM: u64 = 5;
const GEN_MASK: u64 = (1 << 56) - 1;

fn token(kind: u64, generation: u64) -> u64 {
    (kind << 56) | (generation & GEN_MASK)
}

enum Phase {
    Idle,
    /// Claim written, waiting for the sync delay (or relay ack) to verify.
    AwaitVerify { key: String },
    /// Claim held, simulated generation in progress.
    Generating {
        key: String,
        /// Visible char range of the marker at claim time, for overlap
        /// checks; the write re-locates the marker from scratch.
        region: (usize, usize),
        body: String,
    },
}

pub struct ImplementerActor {
    host: SessionHost,
    generator: Box<dyn GeneratorContract>,
    config: ProtocolConfig,
    metrics: SharedMetrics,
    phase: Phase,
    /// After a lost race, scanning resumes after this key (wrapping) so
    /// losers spread over the remaining work instead of re-contending.
    cursor: Option<String>,
    backoff_until: Option<VirtualTime>,
    /// Invalidates in-flight verify/write timers after a phase reset.
    generation: u64,
    reclaim_armed: Option<VirtualTime>,
}

impl ImplementerActor {
    pub fn new(
        core: Rc<RefCell<SessionCore>>,
        relay: ActorId,
        generator: Box<dyn GeneratorContract>,
        config: ProtocolConfig,
        metrics: SharedMetrics,
    ) -> Self {
        ImplementerActor {
            host: SessionHost::new(core, relay),
            generator,
            config,
            metrics,
            phase: Phase::Idle,
            cursor: None,
            backoff_until: None,
            generation: 0,
            reclaim_armed: None,
        }
    }

    fn handle_notes(&mut self, ctx: &mut Ctx, notes: Vec<SessionNote>) {
        for note in notes {
            match note {
                SessionNote::Live => self.scan(ctx),
                SessionNote::Applied(events) => {
                    let mut wake = false;
                    for ev in &events {
                        if ev.origin != EventOrigin::Remote {
                            continue;
                        }
                        match &ev.scope {
                            EventScope::Text { start, len } => {
                                if let Phase::Generating { region, .. } = &self.phase {
                                    let (rs, rl) = *region;
                                    let (s, l) = (*start, (*len).max(1));
                                    if s < rs + rl && s + l > rs {
                                        self.backoff_until = Some(ctx.now() + CONFLICT_BACKOFF);
                                        self.metrics.borrow_mut().backoffs += 1;
                                        ctx.trace("backoff", format!("until={:?}", ctx.now() + CONFLICT_BACKOFF));
                                    }
                                }
                            }
                            EventScope::Map { .. } => wake = true,
                            EventScope::Log { .. } => {}
                        }
                    }
                    if wake {
                        self.scan(ctx);
                    }
                }
                SessionNote::SyncRespReceived => {
                    if self.config.verify_mode == VerifyMode::Ack {
                        if let Phase::AwaitVerify { key } = &self.phase {
                            let key = key.clone();
                            self.verify(ctx, &key);
                        }
                    }
                }
                SessionNote::Terminal => ctx.trace("session_terminal", String::new()),
            }
        }
    }

    /// Looks for claimable work; claims the first candidate past the
    /// cursor. Runs only when idle.
    fn scan(&mut self, ctx: &mut Ctx) {
        if !matches!(self.phase, Phase::Idle) {
            return;
        }
        self.reclaim_armed = None;
        loop {
            let candidate = {
                let core = self.host.core().borrow();
                let doc = core.handle().doc();
                let pending = scan_pending(doc);
                match &self.cursor {
                    Some(cursor) => pending
                        .iter()
                        .find(|k| k.as_str() > cursor.as_str())
                        .or_else(|| pending.first())
                        .cloned(),
                    None => pending.first().cloned(),
                }
            };
            let key = match candidate {
                Some(k) => k,
                None => {
                    self.arm_reclaim(ctx);
                    return;
                }
            };
            let claimed = {
                let mut core = self.host.core().borrow_mut();
                let doc = core.handle_mut().doc_mut();
                let res = claim_start(doc, &key, ctx.now());
                core.handle_mut().flush_local_events();
                res
            };
            match claimed {
                Ok(_) => {
                    self.metrics.borrow_mut().claims_attempted += 1;
                    self.host.flush(ctx);
                    self.phase = Phase::AwaitVerify { key: key.clone() };
                    self.generation += 1;
                    match self.config.verify_mode {
                        VerifyMode::Delay => {
                            ctx.set_timer(self.config.sync_delay, token(KIND_VERIFY, self.generation));
                        }
                        VerifyMode::Ack => {
                            self.host.request_sync(ctx);
                        }
                    }
                    return;
                }
                Err(_) => {
                    // someone got there first per the local view; move on
                    self.cursor = Some(key);
                    continue;
                }
            }
        }
    }

    fn verify(&mut self, ctx: &mut Ctx, key: &str) {
        let outcome = {
            let core = self.host.core().borrow();
            claim_verify(core.handle().doc(), key)
        };
        match outcome {
            ClaimOutcome::Won => {
                *self
                    .metrics
                    .borrow_mut()
                    .won_by_key
                    .entry(key.to_owned())
                    .or_insert(0) += 1;
                self.begin_generation(ctx, key);
            }
            ClaimOutcome::Lost(winner) => {
                self.metrics.borrow_mut().claims_lost += 1;
                ctx.trace("claim_lost", format!("key={key} winner={}", winner.0));
                self.cursor = Some(key.to_owned());
                self.phase = Phase::Idle;
                self.scan(ctx);
            }
            ClaimOutcome::Invalid(reason) => {
                ctx.trace("claim_invalid", format!("key={key} reason={reason:?}"));
                self.cursor = Some(key.to_owned());
                self.phase = Phase::Idle;
                self.scan(ctx);
            }
        }
    }

    fn begin_generation(&mut self, ctx: &mut Ctx, key: &str) {
        let (snapshot, description, region) = {
            let core = self.host.core().borrow();
            let doc = core.handle().doc();
            let text = doc.text_read();
            let region = find_marker(&text, key);
            let description = todo_record(doc, key).map(|r| r.description).unwrap_or_default();
            (text, description, region)
        };
        let region = match region {
            Some(r) => r,
            None => {
                self.resolve_missing_marker(ctx, key);
                return;
            }
        };
        let response = self.generator.generate(&GenRequest {
            snapshot,
            key: key.to_owned(),
            description,
        });
        self.phase = Phase::Generating {
            key: key.to_owned(),
            region,
            body: response.body,
        };
        self.generation += 1;
        ctx.set_timer(response.delay, token(KIND_WRITE, self.generation));
        ctx.trace("generating", format!("key={key}"));
    }

    /// The marker is gone, so the body already exists (another agent won a
    /// transient race and wrote first). If we hold the claim, complete the
    /// record; either way there is nothing to write.
    fn resolve_missing_marker(&mut self, ctx: &mut Ctx, key: &str) {
        self.metrics.borrow_mut().anomalies.push(key.to_owned());
        ctx.trace("marker_missing", format!("key={key}"));
        let held = {
            let core = self.host.core().borrow();
            let doc = core.handle().doc();
            todo_record(doc, key)
                .is_some_and(|r| r.assigned_to == Some(doc.replica()) && r.status != TodoStatus::Done)
        };
        if held {
            let mut core = self.host.core().borrow_mut();
            let doc = core.handle_mut().doc_mut();
            doc.lww_set(&map_key(key), "status", TodoStatus::Done.as_str());
            core.handle_mut().flush_local_events();
        }
        if held {
            self.host.flush(ctx);
        }
        self.phase = Phase::Idle;
        self.scan(ctx);
    }

    fn write_body(&mut self, ctx: &mut Ctx) {
        let (key, body) = match &self.phase {
            Phase::Generating { key, body, .. } => (key.clone(), body.clone()),
            _ => return,
        };
        // conflict avoidance: one deferred re-check, then proceed
        if let Some(until) = self.backoff_until.take() {
            if until > ctx.now() {
                ctx.set_timer(until - ctx.now(), token(KIND_WRITE, self.generation));
                return;
            }
        }
        // a transiently double-won claim may have been overtaken while the
        // body was being generated; by now the claims have converged, so a
        // non-owner abandons instead of writing a duplicate body
        let still_owner = {
            let core = self.host.core().borrow();
            let doc = core.handle().doc();
            todo_record(doc, &key)
                .map(|r| r.status == TodoStatus::Claimed && r.assigned_to == Some(doc.replica()))
                .unwrap_or(false)
        };
        if !still_owner {
            ctx.trace("claim_overtaken", format!("key={key}"));
            self.phase = Phase::Idle;
            self.scan(ctx);
            return;
        }
        let wrote = {
            let mut core = self.host.core().borrow_mut();
            let doc = core.handle_mut().doc_mut();
            let text = doc.text_read();
            match find_marker(&text, &key) {
                Some((start, len)) => {
                    doc.text_delete(start, len).expect("marker range is visible");
                    doc.text_insert(start, &body).expect("index within bounds");
                    claim_protocol::mark_done(doc, &key).expect("ownership checked above");
                    core.handle_mut().flush_local_events();
                    true
                }
                None => false,
            }
        };
        if wrote {
            self.metrics.borrow_mut().chars_generated += body.chars().count() as u64;
            self.host.flush(ctx);
            ctx.trace("implemented", format!("key={key} chars={}", body.chars().count()));
            self.phase = Phase::Idle;
            self.scan(ctx);
        } else {
            self.resolve_missing_marker(ctx, &key);
        }
    }

    /// With nothing claimable but work incomplete, wake when the earliest
    /// held claim could go stale.
    fn arm_reclaim(&mut self, ctx: &mut Ctx) {
        let deadline = {
            let core = self.host.core().borrow();
            let doc = core.handle().doc();
            if completion_count(doc) == all_keys(doc).len() {
                None
            } else {
                next_reclaim_deadline(doc, &self.config)
            }
        };
        if let Some(deadline) = deadline {
            // a hair past the deadline so the age comparison is strict
            let wake = deadline + VirtualTime(1);
            if self.reclaim_armed != Some(wake) {
                self.reclaim_armed = Some(wake);
                self.generation += 1;
                ctx.set_timer(wake.saturating_sub(ctx.now()), token(KIND_RECLAIM, self.generation));
            }
        }
    }

    fn run_reclaim(&mut self, ctx: &mut Ctx) {
        self.reclaim_armed = None;
        let reclaimed = {
            let mut core = self.host.core().borrow_mut();
            let doc = core.handle_mut().doc_mut();
            let keys = reclaim_stale(doc, ctx.now(), &self.config);
            core.handle_mut().flush_local_events();
            keys
        };
        if !reclaimed.is_empty() {
            self.metrics.borrow_mut().reclaims += reclaimed.len() as u64;
            ctx.trace("reclaimed", reclaimed.join(","));
            self.host.flush(ctx);
        }
        self.scan(ctx);
    }
}

impl Actor for ImplementerActor {
    fn on_start(&mut self, ctx: &mut Ctx) {
        let notes = self.host.start(ctx);
        self.handle_notes(ctx, notes);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, tok: u64) {
        if let Some(notes) = self.host.on_timer(ctx, tok) {
            self.handle_notes(ctx, notes);
            return;
        }
        if tok & GEN_MASK != self.generation & GEN_MASK {
            return; // superseded timer
        }
        match tok >> 56 {
            KIND_VERIFY => {
                if let Phase::AwaitVerify { key } = &self.phase {
                    let key = key.clone();
                    self.verify(ctx, &key);
                }
            }
            KIND_WRITE => self.write_body(ctx),
            KIND_RECLAIM => self.run_reclaim(ctx),
            _ => {}
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
