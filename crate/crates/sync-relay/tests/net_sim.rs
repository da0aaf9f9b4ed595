//! End-to-end sessions over the simulated network: live fan-out, queued
//! writes during an outage, reconnect after the relay recovers, and the
//! give-up path when it never does.

use std::cell::RefCell;
use std::rc::Rc;

use crdt_core::{converged, DocumentState};
use simnet::{Actor, ActorId, Ctx, FaultPlan, LatencyModel, SimConfig, Simulation, VirtualTime};
use sync_relay::{
    MemStorage, RelayActor, RelayCore, SessionConfig, SessionCore, SessionHost, SessionNote,
    SessionState,
};

/// Client that inserts scripted text at scheduled times and flushes.
struct WriterClient {
    host: SessionHost,
    writes: Vec<(VirtualTime, String)>,
}

const WRITE_TOKEN_BASE: u64 = 100;

impl WriterClient {
    fn new(core: Rc<RefCell<SessionCore>>, relay: ActorId, writes: Vec<(VirtualTime, String)>) -> Self {
        WriterClient {
            host: SessionHost::new(core, relay),
            writes,
        }
    }

    fn report(&self, ctx: &mut Ctx, notes: Vec<SessionNote>) {
        for note in notes {
            match note {
                SessionNote::Live => ctx.trace("live", String::new()),
                SessionNote::Terminal => ctx.trace("terminal", String::new()),
                _ => {}
            }
        }
    }
}

impl Actor for WriterClient {
    fn on_start(&mut self, ctx: &mut Ctx) {
        let notes = self.host.start(ctx);
        self.report(ctx, notes);
        for (i, (at, _)) in self.writes.iter().enumerate() {
            ctx.set_timer(*at, WRITE_TOKEN_BASE + i as u64);
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, token: u64) {
        if let Some(notes) = self.host.on_timer(ctx, token) {
            self.report(ctx, notes);
            return;
        }
        let idx = (token - WRITE_TOKEN_BASE) as usize;
        let text = self.writes[idx].1.clone();
        {
            let mut core = self.host.core().borrow_mut();
            let len = core.handle().doc().text_len();
            core.handle_mut().doc_mut().text_insert(len, &text).unwrap();
            core.handle_mut().flush_local_events();
        }
        let notes = self.host.flush(ctx);
        self.report(ctx, notes);
    }

    fn on_message(&mut self, ctx: &mut Ctx, from: ActorId, bytes: Vec<u8>) {
        if let Some(notes) = self.host.on_message(ctx, from, &bytes) {
            self.report(ctx, notes);
        }
    }

    fn on_send_failed(&mut self, ctx: &mut Ctx, peer: ActorId) {
        let notes = self.host.on_send_failed(ctx, peer);
        self.report(ctx, notes);
    }
}

/// Relay that ignores all traffic before `open_at`, emulating a relay
/// process that only comes up partway into the run.
struct GatedRelay {
    inner: RelayActor<MemStorage>,
    open_at: VirtualTime,
}

impl Actor for GatedRelay {
    fn on_start(&mut self, ctx: &mut Ctx) {
        self.inner.on_start(ctx);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, token: u64) {
        self.inner.on_timer(ctx, token);
    }

    fn on_message(&mut self, ctx: &mut Ctx, from: ActorId, bytes: Vec<u8>) {
        if ctx.now() < self.open_at {
            ctx.trace("ignored", format!("from={}", from.0));
            return;
        }
        self.inner.on_message(ctx, from, bytes);
    }

    fn on_send_failed(&mut self, ctx: &mut Ctx, peer: ActorId) {
        self.inner.on_send_failed(ctx, peer);
    }
}

fn session(replica: u64) -> Rc<RefCell<SessionCore>> {
    Rc::new(RefCell::new(SessionCore::new(
        DocumentState::new(replica),
        SessionConfig::new("doc"),
    )))
}

#[test]
fn writes_propagate_to_all_replicas() {
    let mut sim = Simulation::new(SimConfig {
        seed: 11,
        ..SimConfig::default()
    });
    let relay_core = Rc::new(RefCell::new(RelayCore::new("doc", MemStorage::default())));
    let relay = sim.add_actor("relay", Box::new(RelayActor::new(relay_core.clone())));

    let c1 = session(1);
    let c2 = session(2);
    sim.add_actor(
        "writer",
        Box::new(WriterClient::new(
            c1.clone(),
            relay,
            vec![
                (VirtualTime::from_millis(500), "hello ".into()),
                (VirtualTime::from_millis(900), "world".into()),
            ],
        )),
    );
    sim.add_actor("reader", Box::new(WriterClient::new(c2.clone(), relay, vec![])));

    let trace = sim.run();
    assert!(trace.quiescent);
    assert_eq!(c1.borrow().handle().doc().text_read(), "hello world");
    assert_eq!(c2.borrow().handle().doc().text_read(), "hello world");
    assert!(converged(
        c1.borrow().handle().doc(),
        relay_core.borrow().doc()
    ));
}

#[test]
fn concurrent_writers_converge_through_the_relay() {
    let mut sim = Simulation::new(SimConfig {
        seed: 5,
        ..SimConfig::default()
    });
    let relay_core = Rc::new(RefCell::new(RelayCore::new("doc", MemStorage::default())));
    let relay = sim.add_actor("relay", Box::new(RelayActor::new(relay_core.clone())));

    let cores: Vec<_> = (1..=3).map(session).collect();
    for (i, core) in cores.iter().enumerate() {
        // all three write at the same instant
        sim.add_actor(
            &format!("c{i}"),
            Box::new(WriterClient::new(
                core.clone(),
                relay,
                vec![(VirtualTime::from_millis(400), format!("<{i}>"))],
            )),
        );
    }

    let trace = sim.run();
    assert!(trace.quiescent);
    let text = cores[0].borrow().handle().doc().text_read();
    assert_eq!(text.len(), 9, "all three writes present: {text}");
    for pair in cores.windows(2) {
        assert!(converged(
            pair[0].borrow().handle().doc(),
            pair[1].borrow().handle().doc()
        ));
    }
}

#[test]
fn writes_during_outage_are_queued_and_flushed_on_reconnect() {
    let mut sim = Simulation::new(SimConfig {
        seed: 3,
        latency: LatencyModel::constant(VirtualTime::from_millis(10)),
        ..SimConfig::default()
    });
    let relay_core = Rc::new(RefCell::new(RelayCore::new("doc", MemStorage::default())));
    let relay = sim.add_actor(
        "relay",
        Box::new(GatedRelay {
            inner: RelayActor::new(relay_core.clone()),
            open_at: VirtualTime::from_secs(2),
        }),
    );

    let core = session(1);
    sim.add_actor(
        "client",
        Box::new(WriterClient::new(
            core.clone(),
            relay,
            vec![(VirtualTime::from_millis(500), "queued".into())],
        )),
    );

    let trace = sim.run();
    assert!(trace.quiescent);
    // handshake times out at 15 s, reconnect at ~16 s succeeds
    let live_at = trace
        .records
        .iter()
        .find(|r| r.event == "live")
        .expect("session went live")
        .time;
    assert!(live_at > 15_000_000, "went live at {live_at}");
    assert_eq!(core.borrow().state(), SessionState::Live);
    assert_eq!(relay_core.borrow().doc().text_read(), "queued");
}

#[test]
fn unreachable_relay_exhausts_backoff_and_goes_terminal() {
    let mut sim = Simulation::new(SimConfig {
        seed: 7,
        latency: LatencyModel::constant(VirtualTime::from_millis(10)),
        faults: FaultPlan {
            crashes: vec![(ActorId(0), VirtualTime::ZERO)],
            ..FaultPlan::default()
        },
        ..SimConfig::default()
    });
    let relay_core = Rc::new(RefCell::new(RelayCore::new("doc", MemStorage::default())));
    let relay = sim.add_actor("relay", Box::new(RelayActor::new(relay_core)));

    let core = session(1);
    sim.add_actor("client", Box::new(WriterClient::new(core.clone(), relay, vec![])));

    let trace = sim.run();
    assert!(trace.quiescent);
    assert_eq!(core.borrow().state(), SessionState::Terminal);
    assert!(!trace.records.iter().any(|r| r.event == "live"));

    // first attempt dies to the 15 s handshake timeout, then five reconnects
    // spaced 1, 2, 4, 8, 16 s apart fail fast before giving up
    let terminal_at = trace
        .records
        .iter()
        .find(|r| r.event == "terminal")
        .expect("gave up")
        .time;
    let secs = terminal_at as f64 / 1e6;
    assert!((46.0..47.0).contains(&secs), "terminal at {secs} s");
}
