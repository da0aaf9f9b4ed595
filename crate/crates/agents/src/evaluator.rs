//! The evaluator: waits until every published task is done, scans the
//! final text for duplicate declarations, and appends its report to the
//! shared log. A configurable timeout yields a partial report instead of
//! hanging the run.

use std::cell::RefCell;
use std::rc::Rc;

use claim_protocol::completion_count;
use simnet::{Actor, ActorId, Ctx, VirtualTime};
use sync_relay::{SessionCore, SessionHost, SessionNote};

use crate::conflict::conflict_scan;
use crate::metrics::SharedMetrics;

const KIND_TIMEOUT: u64 = 7;
const TIMEOUT_TOKEN: u64 = KIND_TIMEOUT << 56;

pub struct EvaluatorActor {
    host: SessionHost,
    expected: usize,
    timeout: VirtualTime,
    metrics: SharedMetrics,
    finished: bool,
    /// End the whole simulation once the report lands (single-run mode).
    halt_on_finish: bool,
}

impl EvaluatorActor {
    pub fn new(
        core: Rc<RefCell<SessionCore>>,
        relay: ActorId,
        expected: usize,
        timeout: VirtualTime,
        metrics: SharedMetrics,
    ) -> Self {
        EvaluatorActor {
            host: SessionHost::new(core, relay),
            expected,
            timeout,
            metrics,
            finished: false,
            halt_on_finish: false,
        }
    }

    pub fn halt_on_finish(mut self) -> Self {
        self.halt_on_finish = true;
        self
    }

    fn handle_notes(&mut self, ctx: &mut Ctx, notes: Vec<SessionNote>) {
        for note in notes {
            match note {
                SessionNote::Live | SessionNote::Applied(_) => self.check(ctx),
                _ => {}
            }
        }
    }

    fn check(&mut self, ctx: &mut Ctx) {
        if self.finished {
            return;
        }
        let done = {
            let core = self.host.core().borrow();
            completion_count(core.handle().doc())
        };
        if done >= self.expected {
            self.finish(ctx, false);
        }
    }

    fn finish(&mut self, ctx: &mut Ctx, timed_out: bool) {
        self.finished = true;
        let report = {
            let core = self.host.core().borrow();
            conflict_scan(&core.handle().doc().text_read(), ctx.now())
        };
        let line = if timed_out {
            let done = {
                let core = self.host.core().borrow();
                completion_count(core.handle().doc())
            };
            format!("partial {done}/{} {}", self.expected, report.summary())
        } else {
            format!("complete {}/{} {}", self.expected, self.expected, report.summary())
        };
        {
            let mut core = self.host.core().borrow_mut();
            core.handle_mut().doc_mut().log_append(&line);
            core.handle_mut().flush_local_events();
        }
        self.host.flush(ctx);
        ctx.trace("evaluated", line);
        let mut m = self.metrics.borrow_mut();
        m.evaluator_report = Some(report);
        m.evaluator_timed_out = timed_out;
        if !timed_out {
            m.completion_time = Some(ctx.now());
        }
        drop(m);
        if self.halt_on_finish {
            ctx.halt();
        }
    }
}

impl Actor for EvaluatorActor {
    fn on_start(&mut self, ctx: &mut Ctx) {
        let notes = self.host.start(ctx);
        ctx.set_timer(self.timeout, TIMEOUT_TOKEN);
        self.handle_notes(ctx, notes);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, token: u64) {
        if let Some(notes) = self.host.on_timer(ctx, token) {
            self.handle_notes(ctx, notes);
            return;
        }
        if token == TIMEOUT_TOKEN && !self.finished {
            self.finish(ctx, true);
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
